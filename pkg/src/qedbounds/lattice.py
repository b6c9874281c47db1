"""Finite-volume photon mode lattices with an ultraviolet cutoff.

Units: energies in mc^2, lengths in Compton wavelengths.  A box of side
``L`` carries the photon momenta ``k = 2*pi*n/L`` with ``n`` a nonzero
integer vector and ``|k| < Lambda``.  Every mode has two transverse
polarization vectors; a (mode, polarization) pair is the unit of the
one-photon basis and is addressed by a contiguous ``pair_index``
``2*mode + lam``.

All lattice sums go through :func:`math.fsum` in pair order, so they are
correctly rounded and independent of summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidInputError

# |n|^2 within this relative distance of (Lambda L / 2 pi)^2 counts as on the
# cutoff sphere and is excluded.
BOUNDARY_RTOL = 1e-12
AXIS_TOL = 1e-10


@dataclass(frozen=True)
class PhysParams:
    alpha: float
    lambda_uv: float
    box_side: float
    n_particles: int = 1

    def __post_init__(self):
        vals = (self.alpha, self.lambda_uv, self.box_side)
        if not all(math.isfinite(float(v)) for v in vals):
            raise InvalidInputError(f"non-finite parameters: {vals}")
        if self.alpha < 0:
            raise InvalidInputError("alpha must be >= 0")
        if self.lambda_uv <= 0 or self.box_side <= 0:
            raise InvalidInputError("lambda_uv and box_side must be > 0")
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise InvalidInputError("n_particles must be a positive integer")

    @property
    def volume(self) -> float:
        return self.box_side**3

    @property
    def resolution(self) -> float:
        """Cutoff radius in units of the lattice spacing, Lambda L / 2 pi."""
        return self.lambda_uv * self.box_side / (2 * math.pi)


@dataclass(frozen=True)
class Mode:
    n: tuple
    k: np.ndarray
    norm_k: float


@dataclass(frozen=True)
class PolarizationPair:
    eps1: np.ndarray
    eps2: np.ndarray


def polarization(k) -> PolarizationPair:
    """Right-handed transverse frame for a single momentum.

    ``eps1 = k x z / |k x z|`` and ``eps2 = khat x eps1``; for ``k`` along
    the z axis ``eps1`` is x, so the frame is (x, y) on +z and (x, -y) on -z.
    """
    k = np.asarray(k, dtype=float)
    if k.shape != (3,) or not np.all(np.isfinite(k)) or not np.any(k):
        raise InvalidInputError(f"polarization needs a finite nonzero 3-vector, got {k!r}")
    e = polarization_frames(k[None, :])[0]
    return PolarizationPair(e[0], e[1])


def polarization_frames(k: np.ndarray) -> np.ndarray:
    """Vectorized :func:`polarization`; returns an array of shape (M, 2, 3)."""
    k = np.asarray(k, dtype=float)
    nk = np.linalg.norm(k, axis=1)
    if np.any(nk == 0):
        raise InvalidInputError("k = 0 has no transverse frame")
    khat = k / nk[:, None]
    zhat = np.array([0.0, 0.0, 1.0])
    c = np.cross(k, zhat)
    nc = np.linalg.norm(c, axis=1)
    on_axis = nc <= AXIS_TOL * nk
    e1 = np.empty_like(k)
    e1[~on_axis] = c[~on_axis] / nc[~on_axis, None]
    e1[on_axis] = (1.0, 0.0, 0.0)
    e2 = np.cross(khat, e1)
    return np.stack([e1, e2], axis=1)


@dataclass(frozen=True, eq=False)
class ModeLattice:
    """Photon modes ``0 < |k| < Lambda`` of a periodic box, lexicographic in ``n``.

    ``n`` is an (M, 3) integer array, ``k`` and ``norm_k`` the momenta and
    their lengths, ``eps`` the (M, 2, 3) polarization frames.
    """

    params: PhysParams
    n: np.ndarray
    k: np.ndarray
    norm_k: np.ndarray
    eps: np.ndarray
    _lookup: dict = field(default_factory=dict, repr=False)

    @property
    def n_modes(self) -> int:
        return len(self.n)

    @property
    def n_pairs(self) -> int:
        return 2 * len(self.n)

    @property
    def volume(self) -> float:
        return self.params.volume

    @property
    def spacing(self) -> float:
        return 2 * math.pi / self.params.box_side

    @cached_property
    def modes(self) -> list[Mode]:
        return [Mode(tuple(int(v) for v in n), k, float(nk)) for n, k, nk in zip(self.n, self.k, self.norm_k)]

    @cached_property
    def pols(self) -> list[PolarizationPair]:
        return [PolarizationPair(e[0], e[1]) for e in self.eps]

    # pair_index is 2*mode + lam
    def pair_index(self, mode: int, lam: int) -> int:
        if not (0 <= mode < self.n_modes and lam in (0, 1)):
            raise InvalidInputError(f"no pair ({mode}, {lam})")
        return 2 * mode + lam

    def pair_of(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.n_pairs:
            raise InvalidInputError(f"pair index {index} out of range")
        return divmod(index, 2)

    def mode_index(self, n) -> int:
        """Position of integer vector ``n`` in the mode list, or -1."""
        if not self._lookup:
            self._lookup.update({tuple(int(v) for v in row): i for i, row in enumerate(self.n)})
        return self._lookup.get(tuple(int(v) for v in n), -1)

    @property
    def pair_k(self) -> np.ndarray:
        return np.repeat(self.k, 2, axis=0)

    @property
    def pair_n(self) -> np.ndarray:
        return np.repeat(self.n, 2, axis=0)

    @property
    def pair_norm_k(self) -> np.ndarray:
        return np.repeat(self.norm_k, 2)

    @property
    def pair_eps(self) -> np.ndarray:
        return self.eps.reshape(-1, 3)


def lattice_points(radius: float, include_origin: bool = False) -> np.ndarray:
    """Integer vectors with ``|n| < radius`` (strict, boundary-tolerant), lexicographic."""
    r2 = float(radius) ** 2
    m = int(math.floor(radius)) + 1
    ax = np.arange(-m, m + 1)
    g = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    n2 = np.einsum("ij,ij->i", g, g)
    keep = n2 < r2 * (1 - BOUNDARY_RTOL)
    if not include_origin:
        keep &= n2 > 0
    return g[keep]


def count_lattice_points(radius: float, include_origin: bool = True) -> int:
    """``len(lattice_points(radius, include_origin))`` in O(radius) memory.

    Counts column by column: for each (a, b) the admissible c form a
    symmetric run of odd length.
    """
    r2 = float(radius) ** 2 * (1 - BOUNDARY_RTOL)
    m = int(math.floor(radius)) + 1
    b = np.arange(-m, m + 1)
    total = 0
    for a in range(-m, m + 1):
        rem = r2 - a * a - b * b
        ok = rem > 0
        cmax = np.floor(np.sqrt(np.where(ok, rem, 0.0))).astype(np.int64)
        cmax -= (cmax * cmax >= rem) & ok  # strict inequality c^2 < rem
        total += int(np.sum(np.where(ok, 2 * cmax + 1, 0)))
    return total if include_origin else total - (r2 > 0)


def build_lattice(params: PhysParams) -> ModeLattice:
    if not isinstance(params, PhysParams):
        raise InvalidInputError("build_lattice expects PhysParams")
    n = lattice_points(params.resolution)
    k = n * (2 * math.pi / params.box_side)
    if len(n):
        nk = np.linalg.norm(k, axis=1)
        eps = polarization_frames(k)
    else:
        nk = np.zeros(0)
        eps = np.zeros((0, 2, 3))
    for arr in (n, k, nk, eps):
        arr.setflags(write=False)
    return ModeLattice(params, n, k, nk, eps)


def lattice(alpha=0.0, lambda_uv=1.0, box_side=2 * math.pi, n_particles=1) -> ModeLattice:
    """Shorthand for ``build_lattice(PhysParams(...))``."""
    return build_lattice(PhysParams(alpha, lambda_uv, box_side, n_particles))


@dataclass(frozen=True)
class FieldOperatorSpec:
    """Ladder coefficients of ``A(0)`` and ``Pi(0)`` per pair index.

    ``A(0) = sum a_coeff[i] (a_i + a_i^*)`` and
    ``Pi(0) = sum pi_coeff[i] a_i + conj(pi_coeff[i]) a_i^*``.
    """

    a_coeff: np.ndarray
    pi_coeff: np.ndarray


def field_operator_spec(lat: ModeLattice) -> FieldOperatorSpec:
    V = lat.volume
    nk = lat.pair_norm_k
    eps = lat.pair_eps
    a = eps / np.sqrt(2 * V * nk)[:, None]
    pi = -1j * eps * np.sqrt(nk / (2 * V))[:, None]
    return FieldOperatorSpec(a, pi)


def vacuum_A2(lat: ModeLattice) -> float:
    """<0|A(x)^2|0> = (1/2V) sum_{k,lam} 1/|k|."""
    if lat.n_modes == 0:
        return 0.0
    return math.fsum(1.0 / lat.pair_norm_k) / (2 * lat.volume)


def transverse_sum(lat: ModeLattice) -> np.ndarray:
    """T_ij = (1/V) sum_k (delta_ij - k_i k_j / |k|^2), the scale of i[Pi_i(x), A_j(x)]."""
    out = np.zeros((3, 3))
    if lat.n_modes == 0:
        return out
    khat = lat.k / lat.norm_k[:, None]
    for i in range(3):
        for j in range(i, 3):
            terms = float(i == j) - khat[:, i] * khat[:, j]
            out[i, j] = out[j, i] = math.fsum(terms) / lat.volume
    return out


@dataclass(frozen=True)
class ModeSums:
    S_inv: float
    S_k: float
    S_perp: tuple


def mode_weighted_sums(lat: ModeLattice) -> ModeSums:
    """S_inv = (1/2V) sum_{k,lam} 1/|k|, S_k = (1/V) sum_k |k|,
    S_perp[j] = (1/V) sum_k (1 - k_j^2/|k|^2)."""
    if lat.n_modes == 0:
        return ModeSums(0.0, 0.0, (0.0, 0.0, 0.0))
    V = lat.volume
    khat2 = (lat.k / lat.norm_k[:, None]) ** 2
    perp = tuple(math.fsum(1.0 - khat2[:, j]) / V for j in range(3))
    return ModeSums(vacuum_A2(lat), math.fsum(lat.norm_k) / V, perp)


# continuum values of the sums above
def vacuum_A2_continuum(lambda_uv: float) -> float:
    return lambda_uv**2 / (4 * math.pi**2)


def transverse_continuum(lambda_uv: float) -> float:
    return lambda_uv**3 / (9 * math.pi**2)


def S_k_continuum(lambda_uv: float) -> float:
    return lambda_uv**4 / (8 * math.pi**2)
