"""Configuration-driven sweeps, CSV output and power-law fits.

A sweep is described by one JSON document::

    {"task": "a2",
     "grid": {"alpha": [1.0], "lambda": [4, 6, 8], "box_side": [6.283185307179586], "n": [1]},
     "constants": {"c_pauli_upper": 1.0},
     "tolerances": {"quadrature": 1e-9, "eig": 1e-10, "fit": 0.05},
     "seed": 7,
     "options": {}}

Every task writes the same CSV schema.  Rows come out in grid order whatever
the worker count, and each grid point gets its own seed derived from the
master seed and the grid index.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.stats import linregress

from . import __version__
from .errors import ConfigurationError, InvalidInputError, NumericalFailure, QEDBoundsError
from .records import KNOWN_CONSTANTS, BoundRecord, ConstantsSet

log = logging.getLogger(__name__)

TASKS = ("bounds", "a2", "oracle", "rel", "lt", "fit", "accept")
CSV_HEADER = ("task", "model", "statistics", "side", "alpha", "lambda", "box_side", "n", "value",
              "aux_name", "aux_value", "seed", "status", "tool_version")
OUT_DIR_ENV = "QEDBOUNDS_OUT_DIR"

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2

GRID_DEFAULTS = {"alpha": (1.0,), "lambda": (1.0,), "box_side": (2 * math.pi,), "n": (1,)}


class InsufficientDataError(QEDBoundsError, ValueError):
    """Fewer than three usable points for a power-law fit."""


@dataclass(frozen=True)
class Tolerances:
    quadrature: float = 1e-9
    eig: float = 1e-10
    fit: float = 0.05

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigurationError(f"tolerance {f.name} must be a positive number")


@dataclass(frozen=True)
class SweepConfig:
    task: str
    alpha: tuple = GRID_DEFAULTS["alpha"]
    lambda_uv: tuple = GRID_DEFAULTS["lambda"]
    box_side: tuple = GRID_DEFAULTS["box_side"]
    n: tuple = GRID_DEFAULTS["n"]
    constants: dict = field(default_factory=dict)
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    out: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigurationError(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}")
        for name in ("alpha", "lambda_uv", "box_side", "n"):
            grid = getattr(self, name)
            if len(grid) == 0:
                raise ConfigurationError(f"grid {name!r} is empty")
            for v in grid:
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise ConfigurationError(f"grid {name!r} holds a non-numeric value {v!r}")
        unknown = sorted(set(self.constants) - set(KNOWN_CONSTANTS))
        if unknown:
            raise ConfigurationError(f"unknown constants: {', '.join(unknown)}")
        for k, v in self.constants.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not (math.isfinite(v) and v > 0):
                raise ConfigurationError(f"constant {k} must be a positive number")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an integer in [0, 2^64)")

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        if not isinstance(doc, dict):
            raise ConfigurationError("config must be a JSON object")
        allowed = {"task", "grid", "constants", "tolerances", "seed", "out", "options"}
        extra = sorted(set(doc) - allowed)
        if extra:
            raise ConfigurationError(f"unknown config keys: {', '.join(extra)}")
        if "task" not in doc:
            raise ConfigurationError("config needs a task")
        grid = doc.get("grid", {})
        bad = sorted(set(grid) - set(GRID_DEFAULTS))
        if bad:
            raise ConfigurationError(f"unknown grid keys: {', '.join(bad)}")

        def axis(key):
            v = grid.get(key, GRID_DEFAULTS[key])
            return tuple(v) if isinstance(v, (list, tuple)) else (v,)

        try:
            tol = Tolerances(**doc.get("tolerances", {}))
        except TypeError as exc:
            raise ConfigurationError(f"bad tolerances: {exc}") from None
        return cls(task=doc["task"], alpha=axis("alpha"), lambda_uv=axis("lambda"), box_side=axis("box_side"),
                   n=axis("n"), constants=dict(doc.get("constants", {})), tolerances=tol,
                   seed=doc.get("seed", 0), out=doc.get("out"), options=dict(doc.get("options", {})))

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    def constants_set(self) -> ConstantsSet:
        return ConstantsSet.defaults().with_overrides(self.constants)

    def to_dict(self) -> dict:
        return {"task": self.task,
                "grid": {"alpha": list(self.alpha), "lambda": list(self.lambda_uv),
                         "box_side": list(self.box_side), "n": list(self.n)},
                "constants": dict(self.constants), "tolerances": asdict(self.tolerances),
                "seed": self.seed, "out": self.out, "options": dict(self.options)}


@dataclass(frozen=True)
class ResultRow:
    task: str
    model: str
    statistics: str
    side: str
    alpha: float
    lambda_uv: float
    box_side: float
    n_particles: int | None
    value: float
    aux_name: str = ""
    aux_value: float = math.nan
    seed: int = 0
    status: str = "ok"
    tool_version: str = __version__

    def csv_fields(self) -> list[str]:
        return [self.task, self.model, self.statistics, self.side, _fmt(self.alpha), _fmt(self.lambda_uv),
                _fmt(self.box_side), "" if self.n_particles is None else str(self.n_particles), _fmt(self.value),
                self.aux_name, _fmt(self.aux_value) if self.aux_name else "", str(self.seed), self.status,
                self.tool_version]

    @classmethod
    def from_csv_fields(cls, rec: dict) -> "ResultRow":
        return cls(task=rec["task"], model=rec["model"], statistics=rec["statistics"], side=rec["side"],
                   alpha=_parse(rec["alpha"]), lambda_uv=_parse(rec["lambda"]), box_side=_parse(rec["box_side"]),
                   n_particles=int(rec["n"]) if rec["n"] else None, value=_parse(rec["value"]),
                   aux_name=rec["aux_name"], aux_value=_parse(rec["aux_value"]), seed=int(rec["seed"]),
                   status=rec["status"], tool_version=rec["tool_version"])

    def get(self, column: str):
        """Value of a CSV column by its header name."""
        attr = {"lambda": "lambda_uv", "n": "n_particles"}.get(column, column)
        return getattr(self, attr)


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return "%.17g" % x


def _parse(s: str) -> float:
    return float(s) if s else math.nan


def write_csv(rows, path=None) -> str:
    """Serialize rows; returns the text and writes it to ``path`` if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    text = buf.getvalue()
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def read_csv(source) -> list[ResultRow]:
    text = Path(source).read_text() if not isinstance(source, io.StringIO) else source.getvalue()
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ConfigurationError("CSV header does not match the result schema")
    return [ResultRow.from_csv_fields(rec) for rec in reader]


def row_seed(master: int, *index: int) -> int:
    """Per-row seed from the master seed and the grid index."""
    return int(np.random.SeedSequence([master, *index]).generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# power-law fits


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    stderr: float
    r_squared: float
    n_points: int
    prefactor: float


def fit_powerlaw(rows, x_field: str, y_field: str = "value", filter: dict | None = None) -> PowerLawFit:
    """Least-squares slope of log y against log x.

    ``rows`` may be ResultRow objects or plain mappings keyed by CSV column.
    ``filter`` keeps only rows whose columns equal the given values.  Rows
    with nonpositive or missing x or y are dropped with a warning.
    """
    def get(r, k):
        return r.get(k) if isinstance(r, ResultRow) else r[k]

    picked = [r for r in rows if all(get(r, k) == v for k, v in (filter or {}).items())]
    xs, ys, dropped = [], [], 0
    for r in picked:
        x, y = get(r, x_field), get(r, y_field)
        if x is None or y is None or not (math.isfinite(x) and math.isfinite(y) and x > 0 and y > 0):
            dropped += 1
            continue
        xs.append(float(x))
        ys.append(float(y))
    if dropped:
        warnings.warn(f"fit_powerlaw dropped {dropped} rows with nonpositive or missing values", stacklevel=2)
    if len(xs) < 3:
        raise InsufficientDataError(f"need at least 3 usable points, got {len(xs)}")
    if len(set(xs)) < 2:
        raise InsufficientDataError("all x values coincide")
    res = linregress(np.log(xs), np.log(ys))
    return PowerLawFit(float(res.slope), float(res.stderr), float(res.rvalue**2), len(xs),
                       float(math.exp(res.intercept)))


# ---------------------------------------------------------------------------
# per-task evaluators; each maps one grid point to a list of rows


@dataclass(frozen=True)
class GridPoint:
    index: int
    alpha: float
    lambda_uv: float
    box_side: float
    n: int


def _bound_row(task, rec: BoundRecord, pt: GridPoint, seed, aux_name="", box_side=math.nan, model=None):
    aux_value = rec.aux.get(aux_name, math.nan) if aux_name else math.nan
    n = rec.params.get("N", pt.n)
    return ResultRow(task, model or rec.model, rec.statistics, rec.side, pt.alpha, pt.lambda_uv, box_side,
                     int(n), float(rec.value), aux_name, float(aux_value), seed)


def _task_bounds(cfg: SweepConfig, pt: GridPoint, seed: int) -> list[ResultRow]:
    from .bounds import nonrel_theorem_bounds, pauli_bounds, rel_fermion_bounds, rel_upper
    from .quad import a2_lower_bound, commutator_lower_bound

    cs = cfg.constants_set()
    rows = [_bound_row("bounds", commutator_lower_bound(pt.alpha, pt.lambda_uv), pt, seed, model="commutator")]
    rows.append(_bound_row("bounds", a2_lower_bound(pt.alpha, pt.lambda_uv), pt, seed, "R_star"))
    for stats in cfg.options.get("statistics", ["boson", "fermion"]):
        for rec in nonrel_theorem_bounds(pt.n, pt.alpha, pt.lambda_uv, cs, stats):
            rows.append(_bound_row("bounds", rec, pt, seed))
    rows.append(_bound_row("bounds", rel_upper(pt.alpha, pt.lambda_uv, cs), pt, seed))
    if all(c in cs for c in ("c_pauli_upper", "c_pauli_lower_small", "c_pauli_lower_large")):
        rows += [_bound_row("bounds", rec, pt, seed) for rec in pauli_bounds(pt.alpha, pt.lambda_uv, pt.n, cs)]
    if all(c in cs for c in ("c_rel_lower_small", "c_rel_lower_large")):
        rows += [_bound_row("bounds", rec, pt, seed) for rec in rel_fermion_bounds(pt.n, pt.alpha, pt.lambda_uv, cs)]
    return rows


def _task_a2(cfg: SweepConfig, pt: GridPoint, seed: int) -> list[ResultRow]:
    from .lattice import lattice
    from .quad import a2_lower_bound, optimize_K

    lat = lattice(pt.alpha, pt.lambda_uv, pt.box_side)
    opt = optimize_K(lat, pt.alpha)
    up = ResultRow("a2", "a2", "single", "upper", pt.alpha, pt.lambda_uv, pt.box_side, pt.n, opt.energy.total,
                   "K_star", opt.K_star, seed)
    lo = a2_lower_bound(pt.alpha, pt.lambda_uv, lattice=lat)
    return [up, _bound_row("a2", lo, pt, seed, "R_star", box_side=pt.box_side)]


def _task_oracle(cfg: SweepConfig, pt: GridPoint, seed: int) -> list[ResultRow]:
    from .fock import convergence_study, uniform_density
    from .lattice import lattice

    model = cfg.options.get("model", "minimal")
    caps = cfg.options.get("caps", [1, 2])
    lat = lattice(pt.alpha, pt.lambda_uv, pt.box_side)
    rho = uniform_density(lat) if model == "density" else None
    tr = convergence_study(lat, pt.alpha, model, caps, rho_hat=rho, tol=cfg.tolerances.eig)
    cap, E0, residual = tr.entries[-1][:3]
    status = "ok" if tr.converged else "unconverged"
    return [ResultRow("oracle", model, "single", "estimate", pt.alpha, pt.lambda_uv, pt.box_side, pt.n, E0,
                      "residual", residual, seed, status)]


def _task_rel(cfg: SweepConfig, pt: GridPoint, seed: int) -> list[ResultRow]:
    from .bounds import rel_lower, rel_upper

    kernel = cfg.options.get("kernel", "double")
    lo = rel_lower(pt.alpha, pt.lambda_uv, kernel=kernel, tol=cfg.tolerances.quadrature)
    up = rel_upper(pt.alpha, pt.lambda_uv, cfg.constants_set())
    return [_bound_row("rel", lo, pt, seed, "ell_star"), _bound_row("rel", up, pt, seed)]


def _task_lt(cfg: SweepConfig, pt: GridPoint, seed: int) -> list[ResultRow]:
    from .lt import lt_ratio, orbital_set, sample_slater

    opts = cfg.options
    q = int(opts.get("q", 2))
    n_samples = int(opts.get("n_samples", 10_000))
    burn_in = int(opts.get("burn_in", 500))
    C = cfg.constants_set()["c_lt"]
    orb = orbital_set(pt.n, pt.box_side, q, polarized=bool(opts.get("polarized", True)))
    stats = sample_slater(orb, n_samples, burn_in, seed)
    rows = []
    for frac in opts.get("r_fractions", [0.125, 0.25]):
        for mode in opts.get("modes", ["nonrel", "rel"]):
            res = lt_ratio(orb, frac * pt.box_side, q, mode, samples=stats, C=C)
            rows.append(ResultRow("lt", mode, "fermion", f"R={frac:g}L", pt.alpha, pt.lambda_uv, pt.box_side,
                                  pt.n, res.ratio, "stderr", res.stderr, seed))
    return rows


EVALUATORS = {"bounds": _task_bounds, "a2": _task_a2, "oracle": _task_oracle, "rel": _task_rel, "lt": _task_lt}


def grid_points(cfg: SweepConfig) -> list[GridPoint]:
    prod = itertools.product(cfg.alpha, cfg.lambda_uv, cfg.box_side, cfg.n)
    return [GridPoint(i, float(a), float(l), float(L), int(n)) for i, (a, l, L, n) in enumerate(prod)]


def _status_of(exc: Exception) -> str:
    if isinstance(exc, (ConfigurationError, InvalidInputError)):
        return "config_error"
    if isinstance(exc, NumericalFailure):
        return "numerical_failure"
    return f"error:{type(exc).__name__}"


def _run_point(cfg: SweepConfig, pt: GridPoint) -> list[ResultRow]:
    seed = row_seed(cfg.seed, pt.index)
    try:
        return EVALUATORS[cfg.task](cfg, pt, seed)
    except Exception as exc:  # recorded in the row; the exit code reflects it
        log.warning("grid point %d failed: %s", pt.index, exc)
        return [ResultRow(cfg.task, "", "", "", pt.alpha, pt.lambda_uv, pt.box_side, pt.n, math.nan,
                          seed=seed, status=_status_of(exc))]


def run(cfg: SweepConfig, threads: int = 1) -> list[ResultRow]:
    """Evaluate every grid point; rows come back in grid order."""
    if cfg.task in ("fit", "accept"):
        raise ConfigurationError(f"task {cfg.task!r} is not a grid sweep")
    pts = grid_points(cfg)
    if threads <= 1:
        chunks = [_run_point(cfg, p) for p in pts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda p: _run_point(cfg, p), pts))
    return [r for chunk in chunks for r in chunk]


def run_fit(cfg: SweepConfig) -> tuple[PowerLawFit, list[ResultRow]]:
    """Fit task: options {source, x_field, y_field, filter}."""
    opts = cfg.options
    if "source" not in opts or "x_field" not in opts:
        raise ConfigurationError("fit task needs options.source and options.x_field")
    rows = read_csv(opts["source"])
    fit = fit_powerlaw(rows, opts["x_field"], opts.get("y_field", "value"), opts.get("filter"))
    row = ResultRow("fit", "", "", opts["x_field"], math.nan, math.nan, math.nan, None, fit.exponent,
                    "stderr", fit.stderr, cfg.seed)
    return fit, [row]


def exit_code(rows) -> int:
    statuses = {r.status for r in rows}
    if "config_error" in statuses:
        return EXIT_CONFIG
    if any(s not in ("ok",) for s in statuses):
        return EXIT_NUMERICAL
    return EXIT_OK


def resolve_out(cfg: SweepConfig, out: str | None, suffix: str = "csv") -> Path:
    path = Path(out or cfg.out or f"{cfg.task}.{suffix}")
    base = os.environ.get(OUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def with_seed(cfg: SweepConfig, seed: int | None) -> SweepConfig:
    return cfg if seed is None else replace(cfg, seed=seed)
