"""Exactly solvable A^2 model: trace-root energies, the variational upper
bound with a smooth compact trial profile, and two lower bounds.

For a fixed real electron profile ``phi`` the field part of the A^2 model is
a set of coupled oscillators with frequency-squared matrix

    M[(k,lam),(k',lam')] = |k|^2 delta + alpha (eps.eps') g(k - k'),

where ``g`` is the Fourier transform of ``phi^2`` divided by the volume.  Its
ground energy relative to the free field is ``(Tr sqrt M - sum |k|) / 2``.

The mode lattice is invariant under the eight axis reflections, and with
the polarization convention of :mod:`qedbounds.lattice` every reflection
maps a polarization vector to plus or minus the polarization vector of the
image mode.  ``M`` therefore splits into eight character blocks of roughly
an eighth of the size each, which is how :func:`traceroot_gap` gets its
eigenvalues.
"""

from __future__ import annotations

import itertools
import math
import weakref
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.signal import fftconvolve

from .errors import CapacityError, DegenerateProfileError, InvalidInputError, NumericalFailure
from .golden import golden_max, golden_min
from .lattice import (
    ModeLattice,
    count_lattice_points,
    lattice_points,
    mode_weighted_sums,
    transverse_continuum,
    transverse_sum,
    S_k_continuum,
)
from .records import BoundRecord

HERMITIAN_RTOL = 1e-12
PSD_RTOL = 1e-10
TRACE_RTOL = 1e-10
MAX_DENSE_DIM = 20_000
K_RTOL = 1e-3

GROUP = np.array(list(itertools.product((1, -1), repeat=3)))  # axis reflections
# CHARACTERS[c, g] = chi_c(g) = prod over reflected axes of GROUP[c]
CHARACTERS = np.prod(np.where(GROUP[None, :, :] == -1, GROUP[:, None, :], 1), axis=2)


# ---------------------------------------------------------------- profiles


@dataclass(frozen=True, eq=False)
class TrialProfile:
    """Real nonnegative Fourier coefficients of a normalized electron profile.

    ``m`` holds the integer dual-grid points (``q = 2 pi m / L``) and
    ``fourier_coeffs`` the matching coefficients with sum of squares 1.
    """

    K: float
    box_side: float
    m: np.ndarray
    fourier_coeffs: np.ndarray
    norm_const: float

    def __post_init__(self):
        c = self.fourier_coeffs
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise InvalidInputError("profile coefficients must be finite and nonnegative")
        if abs(math.fsum(c * c) - 1) > 1e-10:
            raise InvalidInputError("profile is not normalized")

    @property
    def q(self) -> np.ndarray:
        return self.m * (2 * math.pi / self.box_side)

    @cached_property
    def grad_term(self) -> float:
        """Half the squared gradient norm, sum |q|^2 c_q^2 / 2."""
        q2 = np.einsum("ij,ij->i", self.q, self.q)
        return 0.5 * math.fsum(q2 * self.fourier_coeffs**2)

    @cached_property
    def g_hat(self) -> tuple[np.ndarray, int]:
        """Autoconvolution of the coefficients over the volume, on a cube.

        Returns ``(table, offset)`` with ``g(n) = table[n + offset]``.
        """
        r = int(np.abs(self.m).max()) if len(self.m) else 0
        cube = np.zeros((2 * r + 1,) * 3)
        idx = self.m + r
        cube[idx[:, 0], idx[:, 1], idx[:, 2]] = self.fourier_coeffs
        if cube.size <= 27:
            conv = _direct_autoconv(cube)
        else:
            conv = fftconvolve(cube, cube, mode="full")
            conv[np.abs(conv) < 1e-15 * conv.max()] = 0.0
        return conv / self.box_side**3, 2 * r

    def g_at(self, n: np.ndarray) -> np.ndarray:
        """``g`` at integer difference vectors ``n`` of shape (..., 3)."""
        table, off = self.g_hat
        n = np.asarray(n)
        out = np.zeros(n.shape[:-1])
        inside = np.all(np.abs(n) <= off, axis=-1)
        j = n[inside] + off
        out[inside] = table[j[:, 0], j[:, 1], j[:, 2]]
        return out

    @classmethod
    def uniform(cls, box_side: float) -> "TrialProfile":
        """The constant profile ``V^{-1/2}``: only the q = 0 coefficient."""
        return cls(0.0, box_side, np.zeros((1, 3), dtype=int), np.ones(1), 1.0)


def _direct_autoconv(cube):
    s = cube.shape[0]
    out = np.zeros((2 * s - 1,) * 3)
    for i, j, k in zip(*np.nonzero(cube)):
        out[i : i + s, j : j + s, k : k + s] += cube[i, j, k] * cube
    return out


def trial_profile(K: float, lat: ModeLattice | float) -> TrialProfile:
    """Coefficients proportional to ``(1 - |q|/K)^3`` for ``|q| < K``, normalized.

    ``lat`` may be a lattice or just the box side.
    """
    if not (math.isfinite(K) and K > 0):
        raise InvalidInputError(f"K must be > 0, got {K}")
    L = lat.params.box_side if isinstance(lat, ModeLattice) else float(lat)
    m = lattice_points(K * L / (2 * math.pi), include_origin=True)
    if len(m) <= 1:
        raise DegenerateProfileError(f"no nonzero dual-grid point lies in |q| < K = {K}")
    q = np.linalg.norm(m, axis=1) * (2 * math.pi / L)
    raw = (1 - q / K) ** 3
    norm = math.sqrt(math.fsum(raw * raw))
    return TrialProfile(float(K), L, m, raw / norm, 1.0 / norm)


# ------------------------------------------------------- symmetry blocks


@dataclass(frozen=True)
class _Sector:
    rows: np.ndarray  # pair indices of the representatives spanning the sector
    basis: sp.csc_matrix  # n_pairs x len(rows), orthonormal columns
    norms: np.ndarray  # |P_chi e_row|


_SECTOR_CACHE: "weakref.WeakKeyDictionary[ModeLattice, list[_Sector]]" = weakref.WeakKeyDictionary()


def reflection_sectors(lat: ModeLattice) -> list[_Sector]:
    """Split the pair basis into the eight characters of the reflection group."""
    if lat in _SECTOR_CACHE:
        return _SECTOR_CACHE[lat]
    N = lat.n_modes
    n = lat.n
    r = int(np.abs(n).max())
    cube = -np.ones((2 * r + 1,) * 3, dtype=np.int64)
    cube[n[:, 0] + r, n[:, 1] + r, n[:, 2] + r] = np.arange(N)

    reps = np.flatnonzero(np.all(n >= 0, axis=1))
    images = n[reps][:, None, :] * GROUP[None, :, :]  # (A, 8, 3)
    targets = cube[images[..., 0] + r, images[..., 1] + r, images[..., 2] + r]
    if np.any(targets < 0):
        raise NumericalFailure("mode lattice is not reflection symmetric")
    # rho(g) eps_lam(k) = g * eps_lam(k) must equal sign * eps_lam(g k)
    moved = lat.eps[reps][:, None, :, :] * GROUP[None, :, None, :]  # (A, 8, 2, 3)
    at_image = lat.eps[targets]  # (A, 8, 2, 3)
    overlap = np.einsum("agld,agmd->aglm", moved, at_image)
    signs = np.einsum("aglm->agl", overlap * np.eye(2))
    offdiag = np.abs(overlap[..., 0, 1]).max(initial=0) + np.abs(overlap[..., 1, 0]).max(initial=0)
    if offdiag > 1e-10 or np.abs(np.abs(signs) - 1).max(initial=0) > 1e-10:
        raise NumericalFailure("polarization frames are not reflection covariant", detail=offdiag)
    signs = np.rint(signs)

    cols = [[] for _ in range(8)]  # per character: (row pair, target pairs, coefficients)
    for a, m0 in enumerate(reps):
        uniq, inv = np.unique(targets[a], return_inverse=True)
        for lam in (0, 1):
            w = CHARACTERS * signs[a, :, lam][None, :] / 8.0  # (8 chars, 8 g)
            coef = np.zeros((8, len(uniq)))
            np.add.at(coef.T, inv, w.T)
            for c in range(8):
                nrm = math.sqrt(float(coef[c] @ coef[c]))
                if nrm > 1e-12:
                    cols[c].append((2 * m0 + lam, 2 * uniq + lam, coef[c] / nrm, nrm))
    sectors = []
    for c in range(8):
        rows = np.array([t[0] for t in cols[c]], dtype=np.int64)
        ri = np.concatenate([t[1] for t in cols[c]]) if cols[c] else np.zeros(0, int)
        ci = np.concatenate([np.full(len(t[1]), j) for j, t in enumerate(cols[c])]) if cols[c] else np.zeros(0, int)
        vals = np.concatenate([t[2] for t in cols[c]]) if cols[c] else np.zeros(0)
        basis = sp.csc_matrix((vals, (ri, ci)), shape=(lat.n_pairs, len(rows)))
        sectors.append(_Sector(rows, basis, np.array([t[3] for t in cols[c]])))
    if sum(len(s.rows) for s in sectors) != lat.n_pairs:
        raise NumericalFailure("reflection sectors do not span the pair basis")
    _SECTOR_CACHE[lat] = sectors
    return sectors


# ---------------------------------------------------------- quadratic form


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """The matrix ``M`` on the pair basis of ``lattice``, built on demand."""

    lattice: ModeLattice
    alpha: float
    profile: TrialProfile

    @property
    def dim(self) -> int:
        return self.lattice.n_pairs

    def rows(self, pairs: np.ndarray) -> np.ndarray:
        """Rows of ``M`` for the given pair indices, shape (len(pairs), n_pairs)."""
        lat = self.lattice
        pairs = np.asarray(pairs, dtype=np.int64)
        modes, lams = pairs // 2, pairs % 2
        g = self.profile.g_at(lat.n[modes][:, None, :] - lat.n[None, :, :])  # (r, N)
        dots = np.einsum("rd,nmd->rnm", lat.eps[modes, lams], lat.eps)  # (r, N, 2)
        out = (self.alpha * g[:, :, None] * dots).reshape(len(pairs), -1)
        out[np.arange(len(pairs)), pairs] += lat.pair_norm_k[pairs] ** 2
        return out

    @cached_property
    def matrix(self) -> np.ndarray:
        if self.dim > MAX_DENSE_DIM:
            raise CapacityError(f"dense matrix of dimension {self.dim} exceeds {MAX_DENSE_DIM}")
        return self.rows(np.arange(self.dim))

    def hermiticity_residual(self) -> float:
        M = self.matrix
        scale = np.abs(M).max(initial=0) or 1.0
        return float(np.abs(M - M.T).max(initial=0) / scale)

    def blocks(self) -> list[np.ndarray]:
        """The eight reflection-character blocks of ``M``."""
        out = []
        for s in reflection_sectors(self.lattice):
            if len(s.rows) == 0:
                continue
            R = self.rows(s.rows)
            B = np.asarray((s.basis.T @ R.T).T) / s.norms[:, None]
            out.append(0.5 * (B + B.T))
        return out

    def trace(self) -> float:
        lat = self.lattice
        return math.fsum(lat.pair_norm_k**2) + self.alpha * lat.n_pairs * float(self.profile.g_at(np.zeros(3, int)))


def assemble_dressing_matrix(lat: ModeLattice, alpha: float, profile: TrialProfile) -> QuadraticForm:
    if not (math.isfinite(alpha) and alpha >= 0):
        raise InvalidInputError("alpha must be >= 0")
    if not math.isclose(profile.box_side, lat.params.box_side, rel_tol=1e-12):
        raise InvalidInputError("profile and lattice have different box sides")
    return QuadraticForm(lat, float(alpha), profile)


def _eigvalsh(A: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        resid = float(np.abs(A - A.T).max(initial=0))
        raise NumericalFailure(f"symmetric eigensolver failed: {exc}", detail=resid) from exc


def dressed_frequencies_squared(form: QuadraticForm, method: str = "blocks") -> np.ndarray:
    """All eigenvalues of ``M``; ``method`` is ``"blocks"`` or ``"dense"``."""
    if form.dim == 0:
        return np.zeros(0)
    if method == "dense":
        ev = _eigvalsh(form.matrix)
    elif method == "blocks":
        ev = np.concatenate([_eigvalsh(B) for B in form.blocks()])
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    tr = form.trace()
    if abs(math.fsum(ev) - tr) > TRACE_RTOL * abs(tr):
        raise NumericalFailure("eigenvalue sum disagrees with the trace", detail=math.fsum(ev) - tr)
    norm = np.abs(ev).max()
    if ev.min() < -PSD_RTOL * norm:
        raise InvalidInputError(f"quadratic form is not positive semidefinite (min eig {ev.min():.3e})")
    return np.clip(ev, 0.0, None)


def traceroot_gap(form: QuadraticForm, lat: ModeLattice | None = None, method: str = "blocks") -> float:
    """(Tr sqrt M - sum |k|) / 2 over the pair basis."""
    lat = lat or form.lattice
    if lat is not form.lattice:
        raise InvalidInputError("form was assembled on a different lattice")
    if form.alpha == 0:
        return 0.0
    ev = dressed_frequencies_squared(form, method)
    return 0.5 * (math.fsum(np.sqrt(ev)) - math.fsum(lat.pair_norm_k))


# ------------------------------------------------------ variational bound


@dataclass(frozen=True)
class EnergyBreakdown:
    grad_term: float
    traceroot_term: float
    total: float
    K: float = float("nan")


def profile_energy(lat: ModeLattice, alpha: float, profile: TrialProfile, method: str = "blocks") -> EnergyBreakdown:
    gap = traceroot_gap(assemble_dressing_matrix(lat, alpha, profile), lat, method)
    return EnergyBreakdown(profile.grad_term, gap, profile.grad_term + gap, profile.K)


def a2_variational_energy(lat: ModeLattice, alpha: float, K: float, method: str = "blocks") -> EnergyBreakdown:
    """Product-state energy of the A^2 model with the trial profile of width ``K``."""
    return profile_energy(lat, alpha, trial_profile(K, lat), method)


@dataclass(frozen=True)
class OptimizeKResult:
    K_star: float
    energy: EnergyBreakdown
    n_evals: int
    bracket: tuple


def optimize_K(lat: ModeLattice, alpha: float, rtol: float = K_RTOL) -> OptimizeKResult:
    """Golden-section minimization of the variational energy over log K in [2 pi/L, 2 Lambda]."""
    if not (math.isfinite(alpha) and alpha > 0):
        raise InvalidInputError("optimize_K needs alpha > 0")
    lo, hi = lat.spacing, 2 * lat.params.lambda_uv
    try:
        trial_profile(lo, lat)
    except DegenerateProfileError:
        lo *= 1 + rtol
        trial_profile(lo, lat)  # a second failure propagates
    if not lo < hi:
        raise DegenerateProfileError("K bracket is empty: cutoff below the first dual shell")
    cache = {}

    def total(K):
        cache[K] = a2_variational_energy(lat, alpha, K)
        return cache[K].total

    res = golden_min(total, lo, hi, rtol=rtol, log=True)
    return OptimizeKResult(res.x, cache[res.x], res.n_evals, (lo, hi))


def calibrate_nonrel_upper(alpha=100.0, lambda_uv=10.0, box_side=2 * math.pi) -> float:
    """Ratio of the optimized A^2 variational energy to alpha^{2/7} Lambda^{12/7}."""
    from .lattice import lattice

    res = optimize_K(lattice(alpha, lambda_uv, box_side), alpha)
    return res.energy.total / (alpha ** (2 / 7) * lambda_uv ** (12 / 7))


# ------------------------------------------------------------ lower bounds


def commutator_lower_bound(alpha: float, lambda_uv: float, lattice: ModeLattice | None = None) -> BoundRecord:
    """Lower bound from the field commutator and a Schwarz inequality.

    Continuum: ``sqrt(alpha/2) Lambda^{3/2} / (3 pi) - 9 Lambda / 8``.  On a
    lattice the same chain runs with ``T`` replaced by the per-axis
    transverse sums and the field constant by ``S_k``:
    ``sqrt(alpha/2) min_j T_j / sqrt(max_j T_j) - S_k / max_j T_j``.
    """
    if not (math.isfinite(alpha) and alpha >= 0):
        raise InvalidInputError("alpha must be >= 0")
    if not (math.isfinite(lambda_uv) and lambda_uv > 0):
        raise InvalidInputError("lambda_uv must be > 0")
    params = {"alpha": alpha, "lambda": lambda_uv}
    if lattice is None:
        first = math.sqrt(alpha / 2) * lambda_uv**1.5 / (3 * math.pi)
        second = 9 * lambda_uv / 8
        return BoundRecord("nonrel", "single", "lower", first - second, params, regime="continuum",
                           aux={"first_term": first, "second_term": second})
    params["box_side"] = lattice.params.box_side
    sums = mode_weighted_sums(lattice)
    if lattice.n_modes == 0:
        return BoundRecord("nonrel", "single", "lower", 0.0, params, regime="lattice",
                           aux={"first_term": 0.0, "second_term": 0.0}, degenerate=True,
                           note="empty mode lattice")
    tmin, tmax = min(sums.S_perp), max(sums.S_perp)
    first = math.sqrt(alpha / 2) * tmin / math.sqrt(tmax)
    second = sums.S_k / tmax
    return BoundRecord("nonrel", "single", "lower", first - second, params, regime="lattice",
                       aux={"first_term": first, "second_term": second, "T_min": tmin, "T_max": tmax, "S_k": sums.S_k})


C_W = 3 / (4 * math.pi)  # makes the smearing function peak at 1


def _ball_weight(R: float, lattice: ModeLattice | None) -> float:
    """w-hat(0) of the smearing function whose transform is constant on |p| < R."""
    if lattice is None:
        return C_W * (2 * math.pi) ** 3 / R**3
    count = count_lattice_points(R * lattice.params.box_side / (2 * math.pi))
    return lattice.volume / count


def a2_lower_bound(alpha: float, lambda_uv: float, lattice: ModeLattice | None = None) -> BoundRecord:
    """Uncertainty-principle lower bound for the A^2 model with explicit constants.

    For a smearing ball of radius ``R`` the bound is
    ``min(kappa sqrt(w0), R^2/2) - 3 S_k w0`` with ``kappa = sqrt(alpha/8) T``
    and ``w0`` the weight of the ball; it is maximized over ``R`` by
    golden-section search on log R starting from ``Lambda^{6/7}``.
    """
    if not (math.isfinite(alpha) and alpha > 0):
        raise InvalidInputError("alpha must be > 0")
    if not (math.isfinite(lambda_uv) and lambda_uv > 0):
        raise InvalidInputError("lambda_uv must be > 0")
    if lattice is None:
        T, S_k = transverse_continuum(lambda_uv), S_k_continuum(lambda_uv)
    else:
        T, S_k = float(np.diag(transverse_sum(lattice)).min()), mode_weighted_sums(lattice).S_k
    kappa = math.sqrt(alpha / 8) * T

    def bound(R):
        w0 = _ball_weight(R, lattice)
        return min(kappa * math.sqrt(w0), R * R / 2) - 3 * S_k * w0

    R0 = lambda_uv ** (6 / 7)
    lo, hi = R0 * 1e-3, R0 * 1e3
    if lattice is not None:
        lo = max(lo, lattice.spacing * (1 + 1e-9))
    res = golden_max(bound, lo, hi, rtol=K_RTOL, log=True, x0=R0)
    params = {"alpha": alpha, "lambda": lambda_uv}
    if lattice is not None:
        params["box_side"] = lattice.params.box_side
    return BoundRecord("a2", "single", "lower", res.fx, params,
                       regime="continuum" if lattice is None else "lattice",
                       aux={"R_star": res.x, "R_ratio": res.x / R0, "kappa": kappa, "T": T, "S_k": S_k})


def a2_leading_symbol_bound(alpha: float, lambda_uv: float) -> BoundRecord:
    """The bound without the smearing subtraction: max_R min(kappa sqrt(w0), R^2/2).

    Informational only; it carries the pure alpha^{2/7} Lambda^{12/7} scaling.
    """
    kappa = math.sqrt(alpha / 8) * transverse_continuum(lambda_uv)
    a = kappa * math.sqrt(C_W * (2 * math.pi) ** 3)
    R = (2 * a) ** (2 / 7)
    return BoundRecord("a2", "single", "lower", R * R / 2, {"alpha": alpha, "lambda": lambda_uv},
                       regime="leading-symbol", aux={"R_star": R, "R_ratio": R / lambda_uv ** (6 / 7)})
