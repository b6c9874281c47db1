"""Exact diagonalization on truncated Fock spaces at fixed total momentum.

Translation invariance lets the electron coordinate be eliminated: in the
fiber of total momentum ``P`` the electron momentum is ``P - P_f`` with
``P_f = sum k n`` the photon momentum, and the field is evaluated at the
origin.  The minimal-coupling fiber Hamiltonian is

    H(P) = (P - P_f + sqrt(alpha) A(0))^2 / 2 + H_f.

Truncation keeps the occupation vectors with at most ``cap_per_pair``
photons in every pair and ``cap_total`` in all.  That set is closed under
lowering, so the compressions of ``a_i a_j`` and ``a_i^* a_j`` are exact
products of compressed lowering matrices; quadratic terms are assembled
that way rather than by squaring a compressed ``A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from .errors import CapacityError, InvalidInputError, NumericalFailure
from .lattice import ModeLattice, field_operator_spec, vacuum_A2

DEFAULT_CAPACITY = 2_000_000
DENSE_THRESHOLD = 2000
MODELS = ("minimal", "a2", "density")


# ------------------------------------------------------------------ basis


@lru_cache(maxsize=None)
def _count(n_pairs: int, total: int, cap: int) -> int:
    """Number of occupation vectors of ``n_pairs`` entries in [0, cap] summing to ``total``."""
    if n_pairs == 0:
        return int(total == 0)
    return sum(_count(n_pairs - 1, total - v, cap) for v in range(min(cap, total) + 1))


def basis_dimension(n_pairs: int, cap_per_pair: int, cap_total: int) -> int:
    return sum(_count(n_pairs, t, cap_per_pair) for t in range(cap_total + 1))


def _compositions(n_pairs: int, total: int, cap: int) -> np.ndarray:
    """All occupation vectors with the given total, in descending lexicographic order."""
    if n_pairs == 0:
        return np.zeros((int(total == 0), 0), dtype=np.uint8)
    if n_pairs == 1:
        return np.array([[total]] if total <= cap else np.zeros((0, 1)), dtype=np.uint8)
    parts = []
    for v in range(min(cap, total), -1, -1):
        rest = _compositions(n_pairs - 1, total - v, cap)
        if len(rest):
            head = np.full((len(rest), 1), v, dtype=np.uint8)
            parts.append(np.hstack([head, rest]))
    return np.vstack(parts) if parts else np.zeros((0, n_pairs), dtype=np.uint8)


@dataclass(eq=False)
class OccupationBasis:
    """Occupation vectors of a fiber, by photon number then descending lex order."""

    lattice: ModeLattice
    cap_per_pair: int
    cap_total: int
    total_momentum: np.ndarray
    states: np.ndarray  # (dim, n_pairs) uint8
    _keys: np.ndarray = field(default=None, repr=False)
    _order: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def photon_number(self) -> np.ndarray:
        return self.states.sum(axis=1, dtype=np.int64)

    @property
    def photon_momentum(self) -> np.ndarray:
        if self.lattice.n_pairs == 0:
            return np.zeros((self.dim, 3))
        return self.states.astype(float) @ self.lattice.pair_k

    @property
    def electron_momentum(self) -> np.ndarray:
        return self.total_momentum[None, :] - self.photon_momentum

    def index_of(self, states: np.ndarray) -> np.ndarray:
        """Row numbers of the given occupation vectors, -1 where absent."""
        if self._keys is None:
            keys = np.ascontiguousarray(self.states).view(f"V{self.states.shape[1]}").ravel()
            self._order = np.argsort(keys, kind="stable")
            self._keys = keys[self._order]
        q = np.ascontiguousarray(states, dtype=np.uint8).view(f"V{self.states.shape[1]}").ravel()
        pos = np.searchsorted(self._keys, q)
        pos = np.minimum(pos, len(self._keys) - 1)
        hit = self._keys[pos] == q
        return np.where(hit, self._order[pos], -1)


def enumerate_basis(lat: ModeLattice, cap_per_pair: int, cap_total: int, total_momentum=(0.0, 0.0, 0.0),
                    capacity: int = DEFAULT_CAPACITY) -> OccupationBasis:
    if cap_per_pair < 0 or cap_total < 0 or int(cap_per_pair) != cap_per_pair or int(cap_total) != cap_total:
        raise InvalidInputError("caps must be nonnegative integers")
    if cap_per_pair > 255:
        raise InvalidInputError("cap_per_pair above 255 is not supported")
    P = np.asarray(total_momentum, dtype=float)
    if P.shape != (3,) or not np.all(np.isfinite(P)):
        raise InvalidInputError("total_momentum must be a finite 3-vector")
    n = lat.n_pairs
    if n == 0 and (cap_total > 0 and cap_per_pair > 0):
        raise InvalidInputError("empty lattice needs zero caps")
    dim = basis_dimension(n, cap_per_pair, cap_total)
    if dim > capacity:
        raise CapacityError(f"basis dimension {dim} exceeds the limit {capacity}")
    blocks = [_compositions(n, t, cap_per_pair) for t in range(cap_total + 1)]
    states = np.vstack(blocks) if n else np.zeros((1, 0), dtype=np.uint8)
    states.setflags(write=False)
    return OccupationBasis(lat, int(cap_per_pair), int(cap_total), P, states)


def lowering_matrix(basis: OccupationBasis, i: int) -> sp.csr_matrix:
    """Compression of ``a_i`` to the basis (exact: the basis is closed under lowering)."""
    occ = basis.states[:, i]
    src = np.flatnonzero(occ)
    lowered = basis.states[src].copy()
    lowered[:, i] -= 1
    dst = basis.index_of(lowered)
    if np.any(dst < 0):
        raise NumericalFailure("basis is not closed under lowering")
    vals = np.sqrt(occ[src].astype(float))
    return sp.csr_matrix((vals, (dst, src)), shape=(basis.dim, basis.dim))


# ----------------------------------------------------------- Hamiltonian


@dataclass(eq=False)
class SectorHamiltonian:
    basis: OccupationBasis
    model: str
    alpha: float
    matrix: sp.csr_matrix

    def hermiticity_residual(self) -> float:
        M = self.matrix
        scale = abs(M).max() if M.nnz else 1.0
        diff = M - M.T
        return float(abs(diff).max() / scale) if diff.nnz else 0.0


def _density_weights(lat: ModeLattice, rho_hat):
    """W0[i,j] = c_i.c_j rho(k_i - k_j) and Wm[i,j] = c_i.c_j rho(k_i + k_j)."""
    c = field_operator_spec(lat).a_coeff
    dots = c @ c.T
    n = lat.pair_n
    if callable(rho_hat):
        f = rho_hat
    else:
        table = dict(rho_hat)

        def f(m):
            return np.array([table.get(tuple(int(v) for v in row), 0.0) for row in m.reshape(-1, 3)]).reshape(m.shape[:-1])

    W0 = dots * f(n[:, None, :] - n[None, :, :])
    Wm = dots * f(n[:, None, :] + n[None, :, :])
    return 0.5 * (W0 + W0.T), 0.5 * (Wm + Wm.T)


def _low_rank(W, rtol=1e-14):
    mu, U = np.linalg.eigh(W)
    keep = np.abs(mu) > rtol * max(np.abs(mu).max(initial=0), 1e-300)
    return mu[keep], U[:, keep]


def uniform_density(lat: ModeLattice):
    """rho-hat of the constant density 1/V: the Kronecker delta at q = 0."""
    return {(0, 0, 0): 1.0}


def profile_density(profile):
    """rho-hat of phi^2 for a :class:`qedbounds.quad.TrialProfile`."""
    V = profile.box_side**3
    return lambda m: V * profile.g_at(m)


def assemble_hamiltonian(basis: OccupationBasis, alpha: float, model: str = "minimal", rho_hat=None) -> SectorHamiltonian:
    """Fiber Hamiltonian on the truncated basis.

    ``minimal``: (P - P_f + sqrt(alpha) A(0))^2 / 2 + H_f.
    ``a2``: (P - P_f)^2 / 2 + alpha A(0)^2 / 2 + H_f.
    ``density``: H_f + (alpha/2) int rho A^2 for a fixed classical density
    with transform ``rho_hat`` (a dict keyed by integer dual vectors or a
    vectorized callable); the electron carries no kinetic operator here.
    """
    if model not in MODELS:
        raise InvalidInputError(f"unknown model {model!r}; expected one of {MODELS}")
    if not (math.isfinite(alpha) and alpha >= 0):
        raise InvalidInputError("alpha must be >= 0")
    if model == "density" and rho_hat is None:
        raise InvalidInputError("density model needs rho_hat")
    if model != "density" and rho_hat is not None:
        raise InvalidInputError("rho_hat is only meaningful for the density model")
    lat = basis.lattice
    dim = basis.dim
    H_f = basis.states.astype(float) @ lat.pair_norm_k if lat.n_pairs else np.zeros(dim)
    Q = basis.electron_momentum
    diag = H_f.copy()
    if model != "density":
        diag += 0.5 * np.einsum("ij,ij->i", Q, Q)
    H = sp.diags(diag).tocsr()
    if alpha == 0 or lat.n_pairs == 0:
        return SectorHamiltonian(basis, model, float(alpha), H)

    B = [lowering_matrix(basis, i) for i in range(lat.n_pairs)]

    def combo(u):
        out = sp.csr_matrix((dim, dim))
        for i in np.flatnonzero(u):
            out = out + u[i] * B[i]
        return out

    c = field_operator_spec(lat).a_coeff  # (pairs, 3)
    if model == "density":
        W0, Wm = _density_weights(lat, rho_hat)
        const = float(np.trace(W0))
        mu0, U0 = _low_rank(W0)
        mum, Um = _low_rank(Wm)
        F = [combo(U0[:, r]) for r in range(len(mu0))]
        E = [combo(Um[:, s]) for s in range(len(mum))]
        quad = sp.csr_matrix((dim, dim))
        for m, Fr in zip(mu0, F):
            quad = quad + 2 * m * (Fr.T @ Fr)
        for m, Es in zip(mum, E):
            EE = Es @ Es
            quad = quad + m * (EE + EE.T)
        quad = quad + const * sp.identity(dim, format="csr")
    else:
        D = [combo(c[:, d]) for d in range(3)]
        quad = sp.csr_matrix((dim, dim))
        for Dd in D:
            DD = Dd @ Dd
            quad = quad + DD + DD.T + 2 * (Dd.T @ Dd)
        quad = quad + float(np.sum(c * c)) * sp.identity(dim, format="csr")
    H = H + 0.5 * alpha * quad

    if model == "minimal":
        cross = sp.csr_matrix((dim, dim))
        for d in range(3):
            A = D[d] + D[d].T
            Qd = sp.diags(Q[:, d])
            cross = cross + Qd @ A + A @ Qd
        H = H + 0.5 * math.sqrt(alpha) * cross
    H = (0.5 * (H + H.T)).tocsr()
    H.eliminate_zeros()
    return SectorHamiltonian(basis, model, float(alpha), H)


# ------------------------------------------------------------- eigensolve


@dataclass(frozen=True)
class GroundState:
    E0: float
    residual: float
    vector: np.ndarray = field(repr=False, default=None)


def ground_energy(h: SectorHamiltonian, tol: float = 1e-10, seed: int = 0, maxiter: int | None = None) -> GroundState:
    """Smallest eigenvalue; dense below :data:`DENSE_THRESHOLD`, Lanczos above."""
    if not tol > 0:
        raise InvalidInputError("tol must be > 0")
    M = h.matrix
    dim = M.shape[0]
    if dim < DENSE_THRESHOLD:
        w, v = np.linalg.eigh(M.toarray())
        E0, vec = float(w[0]), v[:, 0]
    else:
        v0 = np.random.default_rng(seed).standard_normal(dim)
        try:
            w, v = eigsh(M, k=1, which="SA", v0=v0, tol=tol * 1e-2, maxiter=maxiter or 20 * dim)
        except (ArpackNoConvergence, ArpackError) as exc:
            best = getattr(exc, "eigenvalues", None)
            raise NumericalFailure(f"Lanczos did not converge: {exc}", detail=best) from exc
        E0, vec = float(w[0]), v[:, 0]
    residual = float(np.linalg.norm(M @ vec - E0 * vec))
    if residual > tol * max(1.0, abs(E0)):
        raise NumericalFailure(f"eigen residual {residual:.3e} above tolerance", detail=residual)
    return GroundState(E0, residual, vec)


def oracle_energy(lat: ModeLattice, alpha: float, model: str = "minimal", cap: int = 2, rho_hat=None,
                  total_momentum=(0.0, 0.0, 0.0), tol: float = 1e-10) -> GroundState:
    """Convenience wrapper: basis with both caps equal to ``cap``, then the ground energy."""
    basis = enumerate_basis(lat, cap, cap, total_momentum)
    return ground_energy(assemble_hamiltonian(basis, alpha, model, rho_hat), tol)


@dataclass
class ConvergenceTrace:
    entries: list  # (cap_total, E0, residual)
    converged: bool
    threshold: float = 1e-8

    @property
    def energies(self):
        return [e[1] for e in self.entries]


def convergence_study(lat: ModeLattice, alpha: float, model: str, caps, rho_hat=None,
                      threshold: float = 1e-8, floor: float = 1e-12, tol: float = 1e-11) -> ConvergenceTrace:
    caps = list(caps)
    if any(b <= a for a, b in zip(caps, caps[1:])):
        raise InvalidInputError("caps must be strictly increasing")
    entries = []
    for cap in caps:
        g = oracle_energy(lat, alpha, model, cap, rho_hat, tol=tol)
        entries.append((cap, g.E0, g.residual))
    converged = False
    if len(entries) >= 2:
        dE = abs(entries[-1][1] - entries[-2][1])
        converged = dE <= max(threshold * max(1.0, abs(entries[-1][1])), floor)
    return ConvergenceTrace(entries, converged, threshold)


@dataclass(frozen=True)
class PTSlope:
    slope: float
    reference: float
    ratio: float
    remainder_order: float
    energies: tuple


def pt_slope_check(lat: ModeLattice, alphas=(1e-3, 5e-4), cap: int = 2) -> PTSlope:
    """First-order perturbation check at P = 0 for the minimal-coupling model.

    The slope of E0 at alpha = 0 should equal vacuum_A2 / 2 (the cross term
    enters only at second order and vanishes at P = 0 by transversality).
    The slope is a Richardson extrapolation of E0(alpha)/alpha from the two
    smallest couplings; the remainder order compares |E0 - alpha*ref| at the
    two largest.
    """
    alphas = sorted(float(a) for a in alphas)
    if len(alphas) < 2 or alphas[0] <= 0 or alphas[-1] > 1e-3:
        raise InvalidInputError("pt_slope_check needs at least two couplings in (0, 1e-3]")
    ref = 0.5 * vacuum_A2(lat)
    E = [oracle_energy(lat, a, "minimal", cap, tol=1e-13).E0 for a in alphas]
    a1, a2 = alphas[0], alphas[1]
    s1, s2 = E[0] / a1, E[1] / a2
    slope = s1 - (s2 - s1) / (a2 - a1) * a1
    d1, d2 = abs(E[-2] - alphas[-2] * ref), abs(E[-1] - alphas[-1] * ref)
    order = math.log(d2 / d1) / math.log(alphas[-1] / alphas[-2])
    return PTSlope(slope, ref, slope / ref, order, tuple(E))
