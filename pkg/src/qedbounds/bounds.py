"""Theorem-level bound evaluators: relativistic, many-body, Pauli, binding.

Closed-form bounds take their unstated constants from a
:class:`~qedbounds.records.ConstantsSet`; each returned
:class:`~qedbounds.records.BoundRecord` lists the constants it used with
their provenance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, cubature, quad
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from scipy.special import erf, sici

from .errors import InvalidInputError, NumericalFailure
from .golden import golden_max
from .lattice import ModeLattice
from .records import BoundRecord, ConstantsSet

SHELL_FRACTION = 0.5
ELL_GRID_POINTS = 40
K_TOL = 1e-9


def _check_pos(**kw):
    for name, v in kw.items():
        if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v > 0):
            raise InvalidInputError(f"{name} must be finite and > 0, got {v!r}")


def _check_nonneg(**kw):
    for name, v in kw.items():
        if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v >= 0):
            raise InvalidInputError(f"{name} must be finite and >= 0, got {v!r}")


def _check_N(N):
    if int(N) != N or N < 1:
        raise InvalidInputError(f"N must be a positive integer, got {N!r}")
    return int(N)


# ------------------------------------------------------------ relativistic


def rel_upper(alpha: float, lambda_uv: float, constants: ConstantsSet | None = None) -> BoundRecord:
    """E0 <= c sqrt(alpha) Lambda, with c = 1/sqrt(4 pi) unless overridden."""
    _check_nonneg(alpha=alpha)
    _check_pos(lambda_uv=lambda_uv)
    cs = constants or ConstantsSet.defaults()
    c = cs["c_rel_upper"]
    return BoundRecord("rel", "single", "upper", c * math.sqrt(alpha) * lambda_uv,
                       {"alpha": alpha, "lambda": lambda_uv},
                       {"c_rel_upper": (c, cs.provenance("c_rel_upper"))})


class SineSquareIntegral:
    """J(u) = int_0^u (sin t / t)^2 dt, tabulated on an adaptive grid.

    Node values come from adaptive quadrature; between nodes J is a cubic
    Hermite interpolant using the exact derivative (sin u / u)^2.  Intervals
    are bisected until the interpolant matches quadrature at the midpoint to
    ``tol``.
    """

    def __init__(self, u_max: float, tol: float = 1e-12):
        self.u_max = max(float(u_max), 1e-12)
        # pieces no longer than a quarter period keep each quadrature easy
        start = np.linspace(0, self.u_max, int(math.ceil(self.u_max / 0.5)) + 1)
        nodes, values = [0.0], [0.0]
        for a, b in zip(start, start[1:]):
            self._refine(a, b, values[-1], values[-1] + self._piece(a, b), tol, nodes, values, 0)
        self.nodes = np.array(nodes)
        self.values = np.array(values)
        self._spline = CubicHermiteSpline(self.nodes, self.values, self.deriv(self.nodes))

    def _refine(self, a, b, Ja, Jb, tol, nodes, values, depth):
        mid = 0.5 * (a + b)
        Jm = Ja + self._piece(a, mid)
        h = b - a
        da, db = float(self.deriv(a)), float(self.deriv(b))
        hermite_mid = 0.5 * (Ja + Jb) + h * (da - db) / 8
        if abs(hermite_mid - Jm) > tol and depth < 40:
            self._refine(a, mid, Ja, Jm, tol, nodes, values, depth + 1)
            self._refine(mid, b, Jm, Jb, tol, nodes, values, depth + 1)
        else:
            nodes.append(b)
            values.append(Jb)

    @staticmethod
    def deriv(u):
        return np.sinc(np.asarray(u) / np.pi) ** 2

    @staticmethod
    def _piece(a, b):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _ = quad(lambda t: np.sinc(t / np.pi) ** 2, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)
        return val

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u > self.u_max * (1 + 1e-12)):
            raise InvalidInputError("J evaluated beyond its table")
        return self._spline(np.clip(u, 0, self.u_max))


def k_ell_single_bound(alpha: float, ell: float) -> float:
    """int_{-1/2}^{1/2} exp(-alpha ell^2 x^2 / 8 pi) dx."""
    b = alpha * ell * ell / (8 * math.pi)
    if b < 1e-12:
        return 1.0 - b / 12
    return math.sqrt(math.pi / b) * erf(math.sqrt(b) / 2)


@dataclass(frozen=True)
class KEll:
    K_value: float
    K_single_integral_bound: float
    error_estimate: float
    alpha: float
    ell: float


def _inner_tol(alpha, ell, tol):
    # an error dJ moves the integrand by at most alpha ell dJ / pi^2
    return min(max(0.1 * tol * math.pi**2 / (alpha * ell), 1e-13), 1e-7)


def k_ell(alpha: float, ell: float, tol: float = K_TOL, inner: SineSquareIntegral | None = None) -> KEll:
    """The double integral

        K = int_0^1 int_0^1 exp[-alpha (ell/pi^2) |x-y| J(|x-y| ell/4)] dx dy

    by adaptive 2-D Gauss-Kronrod cubature.  The square is folded onto the
    triangle y < x and mapped to the unit square with y = x v, which moves
    the kink on the diagonal to an edge.
    """
    _check_nonneg(alpha=alpha)
    _check_pos(ell=ell, tol=tol)
    bound = k_ell_single_bound(alpha, ell)
    if alpha == 0:
        return KEll(1.0, bound, 0.0, alpha, ell)
    J = inner if inner is not None and inner.u_max >= ell / 4 else SineSquareIntegral(ell / 4, _inner_tol(alpha, ell, tol))
    pref = alpha * ell / math.pi**2

    def f(p):
        x, v = p[:, 0], p[:, 1]
        s = x * (1 - v)
        return 2 * x * np.exp(-pref * s * J(s * ell / 4))

    res = cubature(f, [0.0, 0.0], [1.0, 1.0], rule="gk15", atol=tol, rtol=0.0, max_subdivisions=100_000)
    if res.status != "converged" or res.error > tol:
        raise NumericalFailure("K_ell cubature did not converge", detail=float(res.error))
    return KEll(float(res.estimate), bound, float(res.error), alpha, ell)


def sine_square_closed(u):
    """J(u) = Si(2u) - sin(u)^2 / u, exact antiderivative of (sin u / u)^2."""
    u = np.asarray(u, dtype=float)
    safe = np.where(u > 0, u, 1.0)
    return np.where(u > 0, sici(2 * safe)[0] - np.sin(safe) ** 2 / safe, 0.0)


def k_ell_reference(alpha: float, ell: float, panels: int | None = None, order: int = 16) -> float:
    """Independent evaluation of K_ell used as an oracle.

    Integrating out x + y leaves K = int_0^1 2 (1 - s) exp[-alpha (ell/pi^2) s J(s ell/4)] ds,
    done by composite Gauss-Legendre with J from the sine integral.  The
    default panel count resolves the sinc^2 oscillation of J' in s.
    """
    _check_nonneg(alpha=alpha)
    _check_pos(ell=ell)
    if panels is None:
        panels = max(64, int(math.ceil(ell)))
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    h = np.diff(edges)[:, None]
    s = edges[:-1, None] + 0.5 * h * (t + 1)
    vals = 2 * (1 - s) * np.exp(-alpha * ell / math.pi**2 * s * sine_square_closed(s * ell / 4))
    return float(math.fsum((0.5 * h * w * vals).ravel()))


def k_ell_small_coefficient(alpha_ell2_values=(1e-4, 2e-4, 4e-4)) -> dict:
    """Fit of (1 - K) against alpha ell^2 at small alpha ell^2 (ell = 1).

    Reported next to the printed coefficient 1/(96 pi) and the value
    1/(24 pi^2) from expanding the double integral; not an assertion.
    """
    xs = np.array(alpha_ell2_values, dtype=float)
    ys = np.array([1 - k_ell(a, 1.0, tol=1e-13).K_value for a in xs])
    coef = float(np.dot(xs, ys) / np.dot(xs, xs))
    return {"fitted": coef, "printed": 1 / (96 * math.pi), "expanded": 1 / (24 * math.pi**2),
            "rel_dev_printed": coef * 96 * math.pi - 1, "rel_dev_expanded": coef * 24 * math.pi**2 - 1}


def gap_root(ell: float, K: float) -> float:
    """Smallest root u of (1/ell - u)(1/2 - u) = sqrt(K)/(2 ell) in [0, min(1/2, 1/ell))."""
    a = 1 / ell + 0.5
    c = (1 - math.sqrt(K)) / (2 * ell)
    disc = (1 / ell - 0.5) ** 2 + 2 * math.sqrt(K) / ell
    return 2 * c / (a + math.sqrt(disc))


def rel_lower(alpha: float, lambda_uv: float, kernel: str = "double", tol: float = K_TOL) -> BoundRecord:
    """Gap-root lower bound Lambda * max_ell u(ell) for the one-body relativistic model.

    ``kernel="double"`` uses the double integral K_ell; ``kernel="single"``
    replaces it by its single-integral upper bound, a smaller admissible u.
    """
    _check_pos(alpha=alpha, lambda_uv=lambda_uv)
    if kernel not in ("double", "single"):
        raise InvalidInputError(f"unknown kernel {kernel!r}")
    grid = np.geomspace(0.1, 1e3 / math.sqrt(alpha), ELL_GRID_POINTS)
    if kernel == "double":
        J = SineSquareIntegral(grid[-1] / 4 * (1 + 1e-9), _inner_tol(alpha, grid[-1], tol))
        Kfun = lambda l: k_ell(alpha, l, tol, inner=J).K_value  # noqa: E731
    else:
        Kfun = lambda l: k_ell_single_bound(alpha, l)  # noqa: E731
    cache = {}

    def u_of(l):
        if l not in cache:
            K = min(max(Kfun(l), 0.0), 1.0)
            cache[l] = (gap_root(l, K), K)
        return cache[l][0]

    us = [u_of(float(l)) for l in grid]
    j = int(np.argmax(us))
    lo, hi = float(grid[max(j - 1, 0)]), float(grid[min(j + 1, len(grid) - 1)])
    best = golden_max(u_of, lo, hi, rtol=1e-3, log=True, x0=float(grid[j])) if hi > lo else None
    ell_star = best.x if best and best.fx >= us[j] else float(grid[j])
    u_star, K_star = cache[ell_star]
    resid = (1 / ell_star - u_star) * (0.5 - u_star) - math.sqrt(K_star) / (2 * ell_star)
    if abs(resid) > 1e-10:
        raise NumericalFailure("gap-root residual too large", detail=resid)
    degenerate = u_star <= 0
    return BoundRecord("rel", "single", "lower", lambda_uv * u_star, {"alpha": alpha, "lambda": lambda_uv},
                       regime="small alpha" if alpha < 1 else "large alpha",
                       aux={"ell_star": ell_star, "u_star": u_star, "K_star": K_star, "root_residual": resid,
                            "kernel": kernel},
                       degenerate=degenerate, note="bound vacuous" if degenerate else "")


# ------------------------------------------------- coherent gauge shifts


@dataclass(eq=False)
class CoherentShift:
    """Gauge-phase data f_lam(k, x) for displacements along the first axis.

    ``f_lam(k, x) = eps_lam(k)_1 |k|^{-1/2} (exp(-i k_1 x) - 1) / k_1`` on the
    shell ``shell * Lambda < |k| < Lambda`` of a mode lattice.
    """

    lattice: ModeLattice
    shell: float = SHELL_FRACTION
    k: np.ndarray = field(init=False, repr=False)
    weight: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lat = self.lattice
        keep = lat.norm_k > self.shell * lat.params.lambda_uv
        self.k = lat.k[keep]
        self.weight = lat.eps[keep][:, :, 0] / np.sqrt(lat.norm_k[keep])[:, None]  # (M, 2)

    @property
    def empty(self) -> bool:
        return len(self.k) == 0

    def table(self, x: float) -> np.ndarray:
        k1 = self.k[:, 0]
        safe = np.where(k1 == 0, 1.0, k1)
        phase = np.where(k1 == 0, -1j * x, (np.exp(-1j * k1 * x) - 1) / safe)
        return self.weight * phase[:, None]

    def exponent(self, alpha: float, x: float, y: float) -> float:
        """(alpha / 2V) sum over the shell and polarizations of |f(x) - f(y)|^2."""
        d = self.table(x) - self.table(y)
        return alpha / (2 * self.lattice.volume) * math.fsum((d.real**2 + d.imag**2).ravel())


@dataclass(frozen=True)
class OverlapExponent:
    value: float
    degenerate: bool


def overlap_exponent_lattice(alpha: float, ell: float, x: float, y: float, lat: ModeLattice) -> OverlapExponent:
    _check_nonneg(alpha=alpha)
    _check_pos(ell=ell)
    span = ell / lat.params.lambda_uv
    for v in (x, y):
        if not (0 <= v <= span * (1 + 1e-12)):
            raise InvalidInputError(f"positions must lie in [0, ell/Lambda] = [0, {span}]")
    cs = CoherentShift(lat)
    if cs.empty:
        return OverlapExponent(0.0, True)
    return OverlapExponent(cs.exponent(alpha, x, y), False)


def overlap_exponent_continuum(alpha: float, lambda_uv: float, d: float, shell: float = SHELL_FRACTION) -> float:
    """Infinite-volume limit of the shell sum at separation ``d``:

    (alpha / pi^2) int_{shell Lambda}^{Lambda} dk/k int_0^1 (1 - c^2) sin^2(k d c / 2) / c^2 dc.
    """
    if d == 0:
        return 0.0

    def inner(k):
        val, _ = quad(lambda c: (1 - c * c) * (np.sinc(k * d * c / (2 * np.pi)) * k * d / 2) ** 2, 0, 1,
                      epsabs=1e-13, epsrel=1e-11, limit=200)
        return val / k

    val, _ = quad(inner, shell * lambda_uv, lambda_uv, epsabs=1e-12, epsrel=1e-10, limit=200)
    return alpha / math.pi**2 * val


def k_ell_exponent(alpha: float, ell: float, s: float, J: Callable | None = None) -> float:
    """Exponent of the K_ell integrand at separation s = |x - y| in [0, 1]."""
    J = J or SineSquareIntegral(max(s * ell / 4, 1e-12))
    return alpha * ell / math.pi**2 * s * float(J(s * ell / 4))


# ----------------------------------------------------- many-body bounds


def _power_record(model, statistics, side, value, params, constants, names, regime=""):
    return BoundRecord(model, statistics, side, value, params, constants.subset(*names), regime=regime)


def nonrel_theorem_bounds(N: int, alpha: float, lambda_uv: float, constants: ConstantsSet | None = None,
                          statistics: str = "fermion") -> tuple[BoundRecord, BoundRecord]:
    """(lower, upper) scaling bounds for the nonrelativistic model.

    boson: C1 sqrt(N alpha) Lambda^{3/2} <= E0 <= C2 N^{5/7} alpha^{2/7} Lambda^{12/7};
    fermion: C1 N sqrt(alpha) Lambda^{3/2} <= E0 <= C2 N alpha^{2/7} Lambda^{12/7};
    single is fermion with N = 1.
    """
    N = _check_N(N)
    _check_nonneg(alpha=alpha)
    _check_pos(lambda_uv=lambda_uv)
    cs = constants or ConstantsSet.defaults()
    cs.require("c_nonrel_lower", "c_nonrel_upper")
    C1, C2 = cs["c_nonrel_lower"], cs["c_nonrel_upper"]
    if statistics == "single":
        N = 1
    if statistics == "boson":
        lo = C1 * math.sqrt(N) * math.sqrt(alpha) * lambda_uv**1.5
        up = C2 * N ** (5 / 7) * alpha ** (2 / 7) * lambda_uv ** (12 / 7)
    elif statistics in ("fermion", "single"):
        lo = C1 * N * math.sqrt(alpha) * lambda_uv**1.5
        up = C2 * N * alpha ** (2 / 7) * lambda_uv ** (12 / 7)
    else:
        raise InvalidInputError(f"unknown statistics {statistics!r}")
    p = {"alpha": alpha, "lambda": lambda_uv, "N": N}
    return (_power_record("nonrel", statistics, "lower", lo, p, cs, ["c_nonrel_lower"]),
            _power_record("nonrel", statistics, "upper", up, p, cs, ["c_nonrel_upper"]))


def pauli_bounds(alpha: float, lambda_uv: float, N: int = 1, constants: ConstantsSet | None = None) -> list[BoundRecord]:
    """upper C3 sqrt(alpha) Lambda^{3/2} N, lower C1 alpha Lambda N (small alpha),
    lower C2 alpha^{1/3} Lambda N (large alpha)."""
    N = _check_N(N)
    _check_nonneg(alpha=alpha)
    _check_pos(lambda_uv=lambda_uv)
    cs = constants or ConstantsSet.defaults()
    cs.require("c_pauli_upper", "c_pauli_lower_small", "c_pauli_lower_large")
    p = {"alpha": alpha, "lambda": lambda_uv, "N": N}
    return [
        _power_record("pauli", "fermion", "upper", cs["c_pauli_upper"] * math.sqrt(alpha) * lambda_uv**1.5 * N,
                      p, cs, ["c_pauli_upper"]),
        _power_record("pauli", "fermion", "lower", cs["c_pauli_lower_small"] * alpha * lambda_uv * N,
                      p, cs, ["c_pauli_lower_small"], regime="small alpha"),
        _power_record("pauli", "fermion", "lower", cs["c_pauli_lower_large"] * alpha ** (1 / 3) * lambda_uv * N,
                      p, cs, ["c_pauli_lower_large"], regime="large alpha"),
    ]


def rel_fermion_bounds(N: int, alpha: float, lambda_uv: float, constants: ConstantsSet | None = None) -> list[BoundRecord]:
    """upper C N sqrt(alpha) Lambda, lower C' N sqrt(alpha) Lambda (small alpha),
    lower C'' N Lambda (large alpha)."""
    N = _check_N(N)
    _check_nonneg(alpha=alpha)
    _check_pos(lambda_uv=lambda_uv)
    cs = constants or ConstantsSet.defaults()
    cs.require("c_rel_upper", "c_rel_lower_small", "c_rel_lower_large")
    p = {"alpha": alpha, "lambda": lambda_uv, "N": N}
    s = math.sqrt(alpha)
    return [
        _power_record("rel", "fermion", "upper", cs["c_rel_upper"] * N * s * lambda_uv, p, cs, ["c_rel_upper"]),
        _power_record("rel", "fermion", "lower", cs["c_rel_lower_small"] * N * s * lambda_uv, p, cs,
                      ["c_rel_lower_small"], regime="small alpha"),
        _power_record("rel", "fermion", "lower", cs["c_rel_lower_large"] * N * lambda_uv, p, cs,
                      ["c_rel_lower_large"], regime="large alpha"),
    ]


@dataclass(frozen=True)
class BindingWindow:
    N_star: int
    N_crossover: float
    delta_E: Callable
    constants_used: dict
    note: str


def binding_window(alpha: float, lambda_uv: float, constants: ConstantsSet | None = None,
                   N_max: int = 2**62) -> BindingWindow:
    """Least N at which the boson upper bound drops below N single-particle lower bounds.

    delta_E(N) returns (boson_lower(N) - N single_upper, boson_upper(N) - N single_lower).
    """
    _check_pos(alpha=alpha, lambda_uv=lambda_uv)
    cs = constants or ConstantsSet.defaults()
    cs.require("c_nonrel_lower", "c_nonrel_upper")

    def delta_E(N):
        b_lo, b_up = nonrel_theorem_bounds(N, alpha, lambda_uv, cs, "boson")
        s_lo, s_up = nonrel_theorem_bounds(1, alpha, lambda_uv, cs, "single")
        return b_lo.value - N * s_up.value, b_up.value - N * s_lo.value

    def binds(N):
        return delta_E(N)[1] < 0

    hi = 1
    while not binds(hi):
        if hi >= N_max:
            raise NumericalFailure("no binding below N_max", detail=hi)
        hi *= 2
    lo = hi // 2
    if binds(1):
        hi = 1
    else:
        while hi - lo > 1:  # invariant: not binds(lo), binds(hi)
            mid = (lo + hi) // 2
            lo, hi = (lo, mid) if binds(mid) else (mid, hi)
    ratio = cs["c_nonrel_upper"] / cs["c_nonrel_lower"]
    Nc = ratio**3.5 * alpha**-0.75 * lambda_uv**0.75
    return BindingWindow(hi, Nc, delta_E, cs.subset("c_nonrel_lower", "c_nonrel_upper"),
                         "boson upper bound uses N^{5/7} (theorem statement), not N^{2/7}")


@dataclass(frozen=True)
class PerParticleMin:
    n_star: int
    value: float
    n_stationary: float


SCAN_LIMIT = 1_000_000


def per_particle_min(c_kin: float, c_field: float) -> PerParticleMin:
    """argmin over integers n >= 0 of c_kin n^{2/3} + c_field (n+1)^{-1/2}.

    The derivative is positive near 0, and on n > 2/7 the function has at
    most one local minimum, the larger root of the stationarity condition.
    The integers up to that root plus a margin are scanned when there are at
    most a million of them; otherwise a window around the root is.
    """
    _check_pos(c_kin=c_kin)
    _check_nonneg(c_field=c_field)

    def f(n):
        n = np.asarray(n, dtype=float)
        return c_kin * n ** (2 / 3) + c_field / np.sqrt(n + 1)

    def h(n):  # stationarity: h(n) = c_field / 2
        return (2 / 3) * c_kin * n ** (-1 / 3) * (n + 1) ** 1.5

    n_stat = 0.0
    if c_field > 0 and h(2 / 7) < c_field / 2:
        hi = 1.0
        while h(hi) < c_field / 2:
            hi *= 2
        n_stat = brentq(lambda n: h(n) - c_field / 2, 2 / 7, hi, xtol=1e-12, rtol=1e-15)
    if n_stat + 10 <= SCAN_LIMIT:
        ns = np.arange(0, int(math.ceil(n_stat)) + 11)
    else:
        c = int(n_stat)
        ns = np.concatenate([[0], np.arange(max(c - 5, 1), c + 6)])
    vals = f(ns)
    j = int(np.argmin(vals))
    return PerParticleMin(int(ns[j]), float(vals[j]), float(n_stat))
