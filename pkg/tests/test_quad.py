import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qedbounds.errors import DegenerateProfileError, InvalidInputError
from qedbounds.lattice import lattice
from qedbounds.quad import (TrialProfile, a2_leading_symbol_bound, a2_lower_bound, a2_variational_energy,
                            assemble_dressing_matrix, commutator_lower_bound, dressed_frequencies_squared,
                            optimize_K, trial_profile, traceroot_gap)

TWO_PI = 2 * math.pi


def closed_uniform(lat, alpha):
    return 0.5 * math.fsum(np.sqrt(lat.pair_norm_k**2 + alpha / lat.volume) - lat.pair_norm_k)


@pytest.mark.parametrize("alpha", [0.1, 1.0, 30.0])
@pytest.mark.parametrize("lam", [1.5, 3.0])
def test_uniform_profile_closed_form(alpha, lam):
    lat = lattice(alpha, lam, TWO_PI)
    form = assemble_dressing_matrix(lat, alpha, TrialProfile.uniform(TWO_PI))
    assert traceroot_gap(form) == pytest.approx(closed_uniform(lat, alpha), rel=1e-10)


@pytest.mark.parametrize("K", [1.2, 2.5, 4.0])
def test_blocks_match_dense(K):
    lat = lattice(3.0, 3.5, TWO_PI)
    form = assemble_dressing_matrix(lat, 3.0, trial_profile(K, lat))
    assert form.hermiticity_residual() < 1e-14
    ev_b = np.sort(dressed_frequencies_squared(form, "blocks"))
    ev_d = np.sort(dressed_frequencies_squared(form, "dense"))
    assert np.allclose(ev_b, ev_d, rtol=1e-11, atol=1e-11)
    assert math.fsum(ev_d) == pytest.approx(form.trace(), rel=1e-10)


@given(st.floats(1.01, 6.0))
def test_trial_profile_normalized(K):
    p = trial_profile(K, TWO_PI)
    assert math.fsum(p.fourier_coeffs**2) == pytest.approx(1.0, abs=1e-12)
    assert np.all(p.fourier_coeffs >= 0)
    # g(0) is the mean square density: 1/V for a normalized profile
    assert float(p.g_at(np.zeros(3, int))) == pytest.approx(1 / TWO_PI**3, rel=1e-12)


def test_degenerate_profile():
    with pytest.raises(DegenerateProfileError):
        trial_profile(0.999, TWO_PI)
    with pytest.raises(InvalidInputError):
        trial_profile(-1.0, TWO_PI)


def test_box_mismatch_rejected(lat18):
    with pytest.raises(InvalidInputError):
        assemble_dressing_matrix(lat18, 1.0, trial_profile(2.0, 5.0))


def test_energy_grows_with_alpha(lat18):
    e = [a2_variational_energy(lat18, a, 2.0).traceroot_term for a in (0.5, 1.0, 2.0)]
    assert 0 < e[0] < e[1] < e[2]


def test_optimize_K_beats_bracket_ends(lat18):
    res = optimize_K(lat18, 1.0)
    lo, hi = res.bracket
    assert res.energy.total <= a2_variational_energy(lat18, 1.0, lo).total + 1e-15
    assert res.energy.total <= a2_variational_energy(lat18, 1.0, hi).total + 1e-15


def test_commutator_continuum_examples():
    v = commutator_lower_bound(2.0, 1.0).value
    assert v == pytest.approx(1 / (3 * math.pi) - 9 / 8, abs=1e-12)
    assert commutator_lower_bound(1.0, 1.0).value == pytest.approx(math.sqrt(0.5) / (3 * math.pi) - 9 / 8, abs=1e-14)
    lam_star = (27 * math.pi / 8) ** 2 * 2
    assert lam_star == pytest.approx(224.8, abs=0.1)
    assert commutator_lower_bound(1.0, lam_star * 0.999).value < 0 < commutator_lower_bound(1.0, lam_star * 1.001).value


@given(st.floats(0.01, 100), st.floats(0.1, 1e3), st.floats(0.1, 10))
def test_commutator_scaling(alpha, lam, s):
    a, b = commutator_lower_bound(alpha, lam), commutator_lower_bound(alpha, s * lam)
    assert b.aux["first_term"] == pytest.approx(s**1.5 * a.aux["first_term"], rel=1e-12)
    assert b.aux["second_term"] == pytest.approx(s * a.aux["second_term"], rel=1e-12)
    assert commutator_lower_bound(2 * alpha, lam).value > a.value


def test_commutator_lattice_close_to_continuum():
    for r in (8.0, 10.0):
        lat = lattice(100.0, r, TWO_PI)
        ratio = commutator_lower_bound(100.0, r, lat).value / commutator_lower_bound(100.0, r).value
        assert abs(ratio - 1) < 0.05


def test_commutator_empty_lattice_flagged():
    rec = commutator_lower_bound(1.0, 0.5, lattice(1.0, 0.5, TWO_PI))
    assert rec.degenerate and rec.value == 0.0


def test_a2_lower_bound_seeded_at_natural_radius():
    rec = a2_lower_bound(1.0, 100.0)
    lead = a2_leading_symbol_bound(1.0, 100.0)
    assert 0 < rec.value <= lead.value
    # with explicit constants the optimum sits well above Lambda^{6/7}
    assert rec.aux["R_ratio"] == pytest.approx(11.58, abs=0.05)


@given(st.floats(0.1, 10), st.floats(10, 1e4))
def test_leading_symbol_exact_scaling(alpha, lam):
    v = a2_leading_symbol_bound(alpha, lam).value
    w = a2_leading_symbol_bound(2 * alpha, 3 * lam).value
    assert w / v == pytest.approx(2 ** (2 / 7) * 3 ** (12 / 7), rel=1e-10)


def test_a2_lower_below_variational_upper(lat18):
    for alpha in (0.5, 1.0, 2.0):
        lo = a2_lower_bound(alpha, 1.5, lattice=lat18).value
        up = optimize_K(lat18, alpha).energy.total
        assert lo <= up
