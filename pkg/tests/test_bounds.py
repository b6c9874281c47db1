import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qedbounds.bounds import (K_TOL, SineSquareIntegral, binding_window, gap_root, k_ell, k_ell_reference,
                              k_ell_single_bound, k_ell_small_coefficient, nonrel_theorem_bounds,
                              overlap_exponent_continuum, overlap_exponent_lattice, pauli_bounds,
                              per_particle_min, rel_fermion_bounds, rel_lower, rel_upper, sine_square_closed)
from qedbounds.errors import ConfigurationError, InvalidInputError
from qedbounds.lattice import lattice
from qedbounds.records import ConstantsSet

TWO_PI = 2 * math.pi


def test_rel_upper_exact():
    assert rel_upper(4 * math.pi, 1.0).value == pytest.approx(1.0, abs=1e-12)
    cs = ConstantsSet.defaults().with_overrides({"c_rel_upper": 0.5})
    rec = rel_upper(4 * math.pi, 1.0, cs)
    assert rec.value == pytest.approx(math.sqrt(4 * math.pi) / 2)
    assert rec.constants_used["c_rel_upper"] == (0.5, "user")


@pytest.fixture(scope="module")
def J40():
    return SineSquareIntegral(40.0, tol=1e-12)


@given(st.floats(0.0, 40.0))
def test_sine_square_table_matches_sine_integral(J40, u):
    assert float(J40(u)) == pytest.approx(float(sine_square_closed(u)), abs=1e-11)


def test_sine_square_limits(J40):
    assert float(sine_square_closed(1e7)) == pytest.approx(math.pi / 2, abs=1e-6)
    with pytest.raises(InvalidInputError):
        J40(41.0)


def test_single_bound_small_argument():
    assert k_ell_single_bound(0.0, 5.0) == 1.0
    b = 1e-9
    assert k_ell_single_bound(8 * math.pi * b, 1.0) == pytest.approx(1 - b / 12, abs=1e-15)


@given(st.floats(1e-3, 2.0), st.floats(0.1, 40.0))
def test_k_ell_matches_reference(alpha, ell):
    k = k_ell(alpha, ell)
    assert 0 < k.K_value <= 1
    assert abs(k.K_value - k_ell_reference(alpha, ell)) <= 2 * K_TOL


def test_k_ell_decreases_with_coupling():
    ks = [k_ell(a, 3.0).K_value for a in (0.1, 0.5, 2.0)]
    assert ks[0] > ks[1] > ks[2]


def test_k_ell_small_coefficient_matches_expansion():
    c = k_ell_small_coefficient()
    assert abs(c["rel_dev_expanded"]) < 0.01


@given(st.floats(0.01, 100.0), st.floats(0.0, 1.0))
def test_gap_root_solves_quadratic(ell, K):
    u = gap_root(ell, K)
    assert 0 <= u <= min(0.5, 1 / ell) + 1e-15
    assert (1 / ell - u) * (0.5 - u) == pytest.approx(math.sqrt(K) / (2 * ell), rel=1e-9, abs=1e-15)


def test_rel_lower_single_kernel_exponent():
    alphas = [1e-4, 1e-3, 1e-2]
    vals = [rel_lower(a, 1.0, kernel="single").value for a in alphas]
    slope = np.polyfit(np.log(alphas), np.log(vals), 1)[0]
    assert abs(slope - 0.5) < 0.05


def test_rel_lower_below_upper():
    lo = rel_lower(0.1, 2.0)
    assert 0 < lo.value <= rel_upper(0.1, 2.0).value
    assert abs(lo.aux["root_residual"]) < 1e-10
    with pytest.raises(InvalidInputError):
        rel_lower(0.1, 2.0, kernel="triple")


def test_overlap_exponent_lattice_tracks_continuum():
    lat = lattice(1.0, 10.0, TWO_PI)
    d = 0.3
    lat_val = overlap_exponent_lattice(1.0, 10.0, 0.0, d, lat).value
    cont = overlap_exponent_continuum(1.0, 10.0, d)
    assert lat_val == pytest.approx(cont, rel=0.02)


def test_overlap_exponent_validation():
    lat = lattice(1.0, 3.0, TWO_PI)
    with pytest.raises(InvalidInputError):
        overlap_exponent_lattice(1.0, 1.0, 0.0, 1.0, lat)
    empty = overlap_exponent_lattice(1.0, 0.1, 0.0, 0.1, lattice(1.0, 0.5, TWO_PI))
    assert empty.degenerate and empty.value == 0.0


@given(st.integers(1, 1000), st.floats(1e-3, 10), st.floats(1, 1e4))
def test_nonrel_bound_order(N, alpha, lam):
    for stats in ("boson", "fermion"):
        lo, up = nonrel_theorem_bounds(N, alpha, lam, statistics=stats)
        assert lo.side == "lower" and up.side == "upper"
        assert lo.value > 0 and up.value > 0


def test_optional_constants_required():
    with pytest.raises(ConfigurationError):
        pauli_bounds(1.0, 10.0)
    with pytest.raises(ConfigurationError):
        rel_fermion_bounds(2, 1.0, 10.0)
    cs = ConstantsSet.defaults().with_overrides({"c_rel_lower_small": 0.01, "c_rel_lower_large": 0.02})
    assert len(rel_fermion_bounds(2, 1.0, 10.0, cs)) == 3


def test_binding_window_is_least_binding_N():
    w = binding_window(0.1, 100.0)
    assert w.delta_E(w.N_star)[1] < 0
    assert w.N_star == 1 or w.delta_E(w.N_star - 1)[1] >= 0
    assert 0.5 <= w.N_star / w.N_crossover <= 2


def test_per_particle_min_examples():
    assert (per_particle_min(1.0, 1.0).n_star, per_particle_min(1.0, 1.0).value) == (0, 1.0)
    assert per_particle_min(1.0, 0.0).value == 0.0


@given(st.floats(1e-3, 10), st.floats(0, 500))
def test_per_particle_min_brute_force(c_kin, c_field):
    res = per_particle_min(c_kin, c_field)
    n = np.arange(0, 2_000_000)
    brute = np.min(c_kin * n ** (2 / 3) + c_field * (n + 1) ** -0.5)
    assert res.value == pytest.approx(brute, rel=1e-12, abs=1e-300)
