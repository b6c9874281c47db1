"""The acceptance suite: twelve numbered checks with measured values.

Each check returns a :class:`CriterionResult`.  A check that raises is
recorded as ``error`` and the suite carries on.
"""

from __future__ import annotations

import json
import math
import time
import traceback
from functools import lru_cache
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .records import ConstantsSet

TWO_PI = 2 * math.pi
LATTICE_18 = (1.5, TWO_PI)  # Lambda, L: the 18 modes with |n|^2 in {1, 2}


@dataclass
class CriterionResult:
    criterion_id: int
    name: str
    status: str  # pass | fail | error
    measured: dict
    expected: dict
    tolerance: dict
    runtime_s: float = 0.0
    budget_s: float = math.inf
    seed: int = 0
    tool_version: str = __version__
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def line(self) -> str:
        failed = [k for k, ok in self.checks.items() if not ok]
        extra = f"  failed: {', '.join(failed)}" if failed else ""
        return f"criterion {self.criterion_id:2d} {self.name:<32s} {self.status.upper():5s} {self.runtime_s:8.2f}s{extra}"


@dataclass(frozen=True)
class AcceptanceContext:
    constants: ConstantsSet
    seed: int = 0


def _result(cid, name, checks, measured, expected, tolerance, budget):
    status = "pass" if all(checks.values()) else "fail"
    return CriterionResult(cid, name, status, measured, expected, tolerance, budget_s=budget,
                           checks={k: bool(v) for k, v in checks.items()})


def _slope(x, y):
    from .harness import fit_powerlaw

    return fit_powerlaw([{"x": a, "y": b} for a, b in zip(x, y)], "x", "y").exponent


def _lat18(alpha):
    from .lattice import lattice

    return lattice(alpha, *LATTICE_18)


def c01_closed_forms(ctx):
    from .bounds import rel_upper
    from .quad import commutator_lower_bound

    com = commutator_lower_bound(2.0, 1.0).value
    rel = rel_upper(4 * math.pi, 1.0, ctx.constants).value
    com_ref = 1 / (3 * math.pi) - 9 / 8
    checks = {"commutator": abs(com - com_ref) <= 1e-12, "rel_upper": abs(rel - 1) <= 1e-12}
    return _result(1, "closed-form constants", checks, {"commutator": com, "rel_upper": rel},
                   {"commutator": com_ref, "rel_upper": 1.0}, {"abs": 1e-12}, 1)


def c02_lattice_sums(ctx):
    from .lattice import lattice, transverse_sum, vacuum_A2

    lam = 8.0
    lat = lattice(0.0, lam, TWO_PI)
    T = np.diag(transverse_sum(lat))
    a2 = vacuum_A2(lat)
    T_ref, a2_ref = lam**3 / (9 * math.pi**2), lam**2 / (4 * math.pi**2)
    rT = T / T_ref
    checks = {"transverse_sum": bool(np.all(np.abs(rT - 1) <= 0.02)), "vacuum_A2": abs(a2 / a2_ref - 1) <= 0.02}
    return _result(2, "lattice-constant convergence", checks,
                   {"transverse_ratio_min": float(rT.min()), "transverse_ratio_max": float(rT.max()),
                    "vacuum_ratio": a2 / a2_ref},
                   {"ratio": 1.0}, {"rel": 0.02}, 10)


def c03_oracle_exact(ctx):
    from .fock import convergence_study, uniform_density

    measured, checks = {}, {}
    for alpha in (0.5, 1.0, 2.0):
        lat = _lat18(alpha)
        closed = 0.5 * math.fsum(np.sqrt(lat.pair_norm_k**2 + alpha / lat.volume) - lat.pair_norm_k)
        tr = convergence_study(lat, alpha, "density", [2, 3, 4], rho_hat=uniform_density(lat))
        rel = abs(tr.entries[-1][1] / closed - 1)
        measured[f"alpha={alpha}"] = {"oracle": tr.entries[-1][1], "closed_form": closed, "rel_dev": rel,
                                      "cap_converged": tr.converged}
        checks[f"alpha={alpha}"] = rel <= 1e-8 and tr.converged
    return _result(3, "oracle exactness", checks, measured, {"rel_dev": 0.0}, {"rel": 1e-8}, 60)


@lru_cache(maxsize=4)
def _sandwich_data(alphas=(0.5, 1.0, 2.0), caps=(2, 3, 4)):
    from .fock import convergence_study
    from .quad import commutator_lower_bound, optimize_K

    out = {}
    for alpha in alphas:
        lat = _lat18(alpha)
        up = optimize_K(lat, alpha)
        a2 = convergence_study(lat, alpha, "a2", caps)
        mc = convergence_study(lat, alpha, "minimal", caps)
        lo = commutator_lower_bound(alpha, LATTICE_18[0], lat)
        out[alpha] = {"upper": up.energy.total, "K_star": up.K_star, "a2_oracle": a2.energies[-1],
                      "minimal_oracle": mc.energies[-1], "commutator_lattice": lo.value}
    return out


def c04_oracle_vs_traceroot(ctx):
    data = _sandwich_data()
    checks = {f"alpha={a}": d["upper"] - d["a2_oracle"] >= 0 for a, d in data.items()}
    measured = {f"alpha={a}": {"upper": d["upper"], "a2_oracle": d["a2_oracle"], "gap": d["upper"] - d["a2_oracle"]}
                for a, d in data.items()}
    return _result(4, "oracle vs trace-root", checks, measured, {"gap": ">= 0"}, {"gap": 0.0}, 300)


def c05_sandwich(ctx):
    data = _sandwich_data()
    checks = {}
    for a, d in data.items():
        checks[f"alpha={a}:lower"] = d["commutator_lattice"] <= d["minimal_oracle"]
        checks[f"alpha={a}:upper"] = d["minimal_oracle"] <= d["upper"]
    return _result(5, "sandwich", checks, {f"alpha={a}": d for a, d in data.items()},
                   {"order": "commutator <= oracle <= variational"}, {}, 600)


LATTICE_SWEEP_ALPHA = 100.0


def c06_theorem_exponents(ctx):
    from .lattice import lattice
    from .quad import a2_lower_bound, optimize_K

    lams = np.geomspace(1e2, 1e4, 9)
    s_lam = _slope(lams, [a2_lower_bound(1.0, x).value for x in lams])
    alphas = np.geomspace(0.1, 10, 9)
    s_alpha = _slope(alphas, [a2_lower_bound(a, 1e3).value for a in alphas])
    r_ratio = [a2_lower_bound(1.0, x).aux["R_ratio"] for x in (1e2, 1e4)]
    rs = np.arange(4, 11)
    energies = [optimize_K(lattice(LATTICE_SWEEP_ALPHA, float(r), TWO_PI), LATTICE_SWEEP_ALPHA).energy.total
                for r in rs]
    s_lat = _slope(rs.astype(float), energies)
    checks = {"closed_form_lambda": abs(s_lam - 12 / 7) <= 0.05, "closed_form_alpha": abs(s_alpha - 2 / 7) <= 0.03,
              "lattice_lambda": 1.55 <= s_lat <= 1.90}
    return _result(6, "large-cutoff exponents", checks,
                   {"closed_form_lambda": s_lam, "closed_form_alpha": s_alpha, "lattice_lambda": s_lat,
                    "lattice_alpha": LATTICE_SWEEP_ALPHA, "lattice_energies": energies,
                    "R_ratio_at_lambda_1e2_1e4": r_ratio},
                   {"closed_form_lambda": 12 / 7, "closed_form_alpha": 2 / 7, "lattice_lambda": [1.55, 1.90]},
                   {"closed_form_lambda": 0.05, "closed_form_alpha": 0.03}, 900)


def c07_pt_slope(ctx):
    from .fock import pt_slope_check

    pt = pt_slope_check(_lat18(0.0))
    checks = {"ratio": 0.99 <= pt.ratio <= 1.01, "remainder_order": pt.remainder_order >= 1.8}
    return _result(7, "perturbation-theory slope", checks,
                   {"ratio": pt.ratio, "remainder_order": pt.remainder_order, "slope": pt.slope,
                    "reference": pt.reference},
                   {"ratio": 1.0, "remainder_order": 2.0}, {"ratio": 0.01, "remainder_order_min": 1.8}, 300)


REL_ALPHAS = (1e-4, 1e-3, 1e-2)
K_SAMPLES = [(a, l) for a in (1e-4, 1e-2, 1.0) for l in (0.5, 2.0, 10.0, 50.0, 300.0)]


def c08_relativistic(ctx):
    from .bounds import K_TOL, k_ell, k_ell_reference, rel_lower, rel_upper

    ks = []
    for a, l in K_SAMPLES:
        k = k_ell(a, l)
        ref_n = k_ell_reference(a, l)
        ref_2n = k_ell_reference(a, l, panels=2 * max(64, math.ceil(l)))
        ks.append({"alpha": a, "ell": l, "K": k.K_value, "reference": ref_2n, "dev": abs(k.K_value - ref_2n),
                   "ref_self_dev": abs(ref_2n - ref_n), "single_bound": k.K_single_integral_bound})
    lows = [rel_lower(a, 1.0) for a in REL_ALPHAS]
    ups = [rel_upper(a, 1.0, ctx.constants).value for a in REL_ALPHAS]
    slope = _slope(REL_ALPHAS, [r.value for r in lows])
    scaled = [r.aux["ell_star"] * math.sqrt(a) for r, a in zip(lows, REL_ALPHAS)]
    violations = [(s["alpha"], s["ell"]) for s in ks if s["K"] > s["single_bound"]]
    checks = {"k_ell_reproduced": all(s["dev"] <= 2 * K_TOL for s in ks),
              "K_below_single_bound": not violations,
              "alpha_exponent": 0.45 <= slope <= 0.55,
              "ell_star_scaling": max(scaled) / min(scaled) <= 2,
              "lower_below_upper": all(r.value <= u for r, u in zip(lows, ups))}
    measured = {"max_k_dev": max(s["dev"] for s in ks), "single_bound_violations": violations,
                "alpha_exponent": slope, "ell_star_sqrt_alpha": scaled, "rel_lower": [r.value for r in lows],
                "rel_upper": ups, "k_samples": ks}
    return _result(8, "relativistic pipeline", checks, measured,
                   {"alpha_exponent": 0.5, "ell_star_scaling_ratio": "<= 2"},
                   {"k_ell_abs": 2 * K_TOL, "alpha_exponent": 0.05}, 300)


def c09_binding(ctx):
    from .bounds import binding_window

    measured, checks = {}, {}
    for a in (0.01, 0.1, 1.0):
        for lam in (10.0, 100.0, 1000.0):
            w = binding_window(a, lam, ctx.constants)
            r = w.N_star / w.N_crossover
            measured[f"alpha={a},lambda={lam}"] = {"N_star": w.N_star, "N_crossover": w.N_crossover, "ratio": r}
            checks[f"alpha={a},lambda={lam}"] = 0.5 <= r <= 2
    return _result(9, "binding window", checks, measured, {"ratio": 1.0}, {"factor": 2}, 60)


PER_PARTICLE_KAPPA = 1e-6


def c10_per_particle(ctx):
    from .bounds import per_particle_min

    def value(a, lam):
        return per_particle_min(PER_PARTICLE_KAPPA * lam**2, math.sqrt(a) * lam**1.5).value

    lams = np.geomspace(1e2, 1e4, 9)
    alphas = np.geomspace(1e-2, 1.0, 9)
    s_lam = _slope(lams, [value(1.0, x) for x in lams])
    s_alpha = _slope(alphas, [value(a, 1e3) for a in alphas])
    checks = {"lambda": abs(s_lam - 12 / 7) <= 0.03, "alpha": abs(s_alpha - 2 / 7) <= 0.03}
    return _result(10, "per-particle minimization", checks,
                   {"lambda": s_lam, "alpha": s_alpha, "c_kin_prefactor": PER_PARTICLE_KAPPA},
                   {"lambda": 12 / 7, "alpha": 2 / 7}, {"abs": 0.03}, 60)


def c11_lieb_thirring(ctx):
    from .harness import row_seed
    from .lt import lt_ratio, orbital_set, sample_slater

    measured, checks = {}, {}
    C = ctx.constants["c_lt"]
    for i, N in enumerate((2, 4, 6)):
        orb = orbital_set(N, 1.0, q=2)
        stats = sample_slater(orb, 10_000, 500, row_seed(ctx.seed, 11, i))
        for frac in (0.125, 0.25):
            for mode in ("nonrel", "rel"):
                r = lt_ratio(orb, frac, 2, mode, samples=stats, C=C)
                key = f"N={N},R=L*{frac},{mode}"
                measured[key] = {"ratio": r.ratio, "stderr": r.stderr, "margin": r.margin,
                                 "conservative_ratio": r.conservative_ratio, "acceptance": r.acceptance_rate}
                checks[key] = r.margin > 1
    return _result(11, "neighbor-count kinetic inequality", checks, measured, {"margin": "> 1"},
                   {"sigmas": 3}, 600)


def c12_determinism(ctx):
    import contextlib
    import io
    import tempfile
    from pathlib import Path

    from .cli import main

    sink = io.StringIO()
    with tempfile.TemporaryDirectory() as tmp, contextlib.redirect_stdout(sink), contextlib.redirect_stderr(sink):
        tmp = Path(tmp)
        cfg = {"task": "lt", "grid": {"box_side": [1.0], "n": [2, 3]}, "seed": 12345,
               "options": {"n_samples": 300, "burn_in": 50}}
        (tmp / "lt.json").write_text(json.dumps(cfg))
        codes = [main(["lt", "--config", str(tmp / "lt.json"), "--out", str(tmp / f"lt{i}.csv"),
                       "--threads", str(t)]) for i, t in enumerate((1, 2))]
        same = (tmp / "lt0.csv").read_bytes() == (tmp / "lt1.csv").read_bytes()
        bad = {"task": "accept", "constants": {"c_rel_upper": 0.5}, "options": {"criteria": [1]}}
        (tmp / "bad.json").write_text(json.dumps(bad))
        forced = main(["accept", "--config", str(tmp / "bad.json"), "--out", str(tmp / "report.json")])
        report = json.loads((tmp / "report.json").read_text())
        named = [r["criterion_id"] for r in report if r["status"] != "pass"]
        (tmp / "empty.json").write_text(json.dumps({"task": "bounds", "grid": {"alpha": []}}))
        empty = main(["bounds", "--config", str(tmp / "empty.json"), "--out", str(tmp / "empty.csv")])
        no_file = not (tmp / "empty.csv").exists()
    checks = {"byte_identical": same, "sweep_exit_zero": codes == [0, 0], "forced_failure_exit": forced == 1,
              "failing_criterion_named": named == [1], "config_error_exit": empty == 2, "no_output_on_error": no_file}
    return _result(12, "harness determinism", checks,
                   {"exit_codes": codes, "forced_exit": forced, "named": named, "config_exit": empty},
                   {"forced_exit": 1, "config_exit": 2}, {}, 60)


CRITERIA = {1: c01_closed_forms, 2: c02_lattice_sums, 3: c03_oracle_exact, 4: c04_oracle_vs_traceroot,
            5: c05_sandwich, 6: c06_theorem_exponents, 7: c07_pt_slope, 8: c08_relativistic, 9: c09_binding,
            10: c10_per_particle, 11: c11_lieb_thirring, 12: c12_determinism}


def run_criterion(cid: int, ctx: AcceptanceContext) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        res = CRITERIA[cid](ctx)
    except Exception as exc:
        res = CriterionResult(cid, CRITERIA[cid].__name__[4:], "error", {"exception": repr(exc),
                              "traceback": traceback.format_exc()}, {}, {})
    res.runtime_s = time.perf_counter() - t0
    res.seed = ctx.seed
    if res.runtime_s > res.budget_s and res.status == "pass":
        res.status = "fail"
        res.checks["runtime"] = False
    return res


def run_suite(ctx: AcceptanceContext, criteria=None, echo=None) -> list[CriterionResult]:
    out = []
    for cid in criteria or sorted(CRITERIA):
        res = run_criterion(int(cid), ctx)
        if echo:
            echo(res.line())
        out.append(res)
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def report_json(results) -> str:
    rows = []
    for r in results:
        d = asdict(r)
        rows.append({k: _jsonable(d[k]) for k in ("criterion_id", "name", "status", "measured", "expected",
                                                 "tolerance", "runtime_s", "checks", "seed", "tool_version")})
    return json.dumps(rows, indent=2)
