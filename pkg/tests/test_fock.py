import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from qedbounds import fock
from qedbounds.errors import CapacityError, InvalidInputError
from qedbounds.fock import (assemble_hamiltonian, basis_dimension, convergence_study, enumerate_basis,
                            ground_energy, lowering_matrix, oracle_energy, pt_slope_check, uniform_density)
from qedbounds.lattice import lattice, vacuum_A2

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def lat6():
    return lattice(1.0, 1.2, TWO_PI)  # the six |n| = 1 modes


@given(st.integers(0, 6), st.integers(0, 3), st.integers(0, 4))
def test_dimension_formula(n, cap, total):
    from math import comb

    d = basis_dimension(n, cap, total)
    if cap >= total:  # per-pair cap inactive: stars and bars
        assert d == comb(n + total, total)
    assert d == basis_dimension(n, min(cap, total), total)


def test_basis_matches_dimension(lat6):
    b = enumerate_basis(lat6, 2, 3)
    assert b.dim == basis_dimension(12, 2, 3)
    assert np.all(np.diff(b.photon_number) >= 0)
    assert len({s.tobytes() for s in b.states}) == b.dim
    assert np.all(b.states.max(axis=1) <= 2)


def test_index_of_roundtrip(lat6):
    b = enumerate_basis(lat6, 2, 2)
    idx = b.index_of(b.states)
    assert np.array_equal(idx, np.arange(b.dim))
    missing = np.full((1, 12), 3, dtype=np.uint8)
    assert b.index_of(missing)[0] == -1


def test_canonical_commutator_below_cap(lat6):
    b = enumerate_basis(lat6, 3, 3)
    a = lowering_matrix(b, 4)
    comm = (a @ a.T - a.T @ a).toarray()
    low = np.flatnonzero(b.photon_number < 3)  # raising stays inside the basis there
    assert np.allclose(comm[np.ix_(low, low)], np.eye(len(low)))


def test_capacity_guard(lat18):
    with pytest.raises(CapacityError):
        enumerate_basis(lat18, 6, 6, capacity=1000)


@pytest.mark.parametrize("kw", [dict(cap_per_pair=-1, cap_total=1), dict(cap_per_pair=1, cap_total=1.5)])
def test_bad_caps(lat6, kw):
    with pytest.raises(InvalidInputError):
        enumerate_basis(lat6, **kw)


@pytest.mark.parametrize("model", fock.MODELS)
def test_hamiltonian_symmetric(lat6, model):
    b = enumerate_basis(lat6, 2, 2, total_momentum=(0.3, 0.0, 0.1))
    rho = uniform_density(lat6) if model == "density" else None
    h = assemble_hamiltonian(b, 0.7, model, rho)
    assert h.hermiticity_residual() < 1e-14


def test_free_ground_state_is_bare_electron(lat6):
    P = np.array([0.2, 0.1, 0.0])
    g = oracle_energy(lat6, 0.0, "minimal", 2, total_momentum=P)
    assert g.E0 == pytest.approx(0.5 * P @ P, abs=1e-14)


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_uniform_density_closed_form(lat6, alpha):
    closed = 0.5 * math.fsum(np.sqrt(lat6.pair_norm_k**2 + alpha / lat6.volume) - lat6.pair_norm_k)
    tr = convergence_study(lat6, alpha, "density", [3, 4, 5], rho_hat=uniform_density(lat6))
    assert tr.converged
    assert tr.energies[-1] == pytest.approx(closed, rel=1e-8)


def test_density_model_rejects_missing_density(lat6):
    b = enumerate_basis(lat6, 1, 1)
    with pytest.raises(InvalidInputError):
        assemble_hamiltonian(b, 1.0, "density")
    with pytest.raises(InvalidInputError):
        assemble_hamiltonian(b, 1.0, "a2", uniform_density(lat6))


def test_lanczos_agrees_with_dense(lat18, monkeypatch):
    b = enumerate_basis(lat18, 2, 2)
    h = assemble_hamiltonian(b, 1.0, "minimal")
    dense = ground_energy(h).E0
    monkeypatch.setattr(fock, "DENSE_THRESHOLD", 10)
    lanczos = ground_energy(h, seed=3)
    assert lanczos.E0 == pytest.approx(dense, abs=1e-10)


def test_variational_monotone_in_cap(lat6):
    e = [oracle_energy(lat6, 1.0, "minimal", c).E0 for c in (1, 2, 3)]
    assert e[0] >= e[1] >= e[2]


def test_pt_slope(lat18):
    pt = pt_slope_check(lat18)
    assert pt.reference == pytest.approx(0.5 * vacuum_A2(lat18))
    assert abs(pt.ratio - 1) < 1e-3
    assert pt.remainder_order > 1.8


def test_lowering_matrix_is_sparse(lat6):
    a = lowering_matrix(enumerate_basis(lat6, 2, 2), 0)
    assert sp.issparse(a) and a.nnz > 0
