import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import kstest

from qedbounds.errors import InvalidInputError
from qedbounds.lt import (Configuration, OrbitalSet, batch_means, lowest_momenta, lt_ratio, neighbor_counts,
                          orbital_set, sample_slater)


def test_neighbor_counts_examples():
    assert list(neighbor_counts(np.zeros((1, 3)), 1.0)) == [0]
    assert list(neighbor_counts(np.array([[0, 0, 0], [0.5, 0, 0]]), 1.0)) == [1, 1]
    line = np.array([[0, 0, 0], [0.9, 0, 0], [1.8, 0, 0]])
    assert list(neighbor_counts(line, 1.0)) == [1, 2, 1]


def test_neighbor_counts_minimum_image():
    X = np.array([[0.05, 0, 0], [0.95, 0, 0]])
    assert list(neighbor_counts(X, 0.2, box_side=1.0)) == [1, 1]
    assert list(neighbor_counts(X, 0.2)) == [0, 0]


@given(st.integers(2, 8), st.floats(0.01, 0.6), st.integers(0, 2**32 - 1))
def test_neighbor_counts_symmetric_total(N, R, seed):
    X = np.random.default_rng(seed).uniform(0, 1, (N, 3))
    c = neighbor_counts(X, R, 1.0)
    assert c.sum() % 2 == 0 and np.all(c <= N - 1)


def test_configuration_must_be_in_box():
    with pytest.raises(InvalidInputError):
        Configuration(np.array([[1.0, 0, 0]]), 1.0)


def test_repeated_momentum_rejected():
    with pytest.raises(InvalidInputError):
        OrbitalSet(1.0, (((0, 0, 0), (0, 0, 0)),))


def test_lowest_momenta_shell_order():
    ms = lowest_momenta(7)
    assert ms[0] == (0, 0, 0)
    assert all(sum(v * v for v in m) == 1 for m in ms[1:])


def test_kinetic_energy_values():
    orb = orbital_set(2, 1.0)
    assert orb.kinetic("nonrel") == pytest.approx((2 * math.pi) ** 2)
    assert orb.kinetic("rel") == pytest.approx(2 * math.pi)
    unpol = orbital_set(2, 1.0, q=2, polarized=False)
    assert unpol.kinetic("nonrel") == 0.0


def test_single_particle_samples_uniform():
    st_ = sample_slater(orbital_set(1, 1.0), 4000, burn_in=200, seed=5)
    for axis in range(3):
        assert kstest(st_.samples[::4, 0, axis], "uniform").pvalue > 1e-3


def test_pair_suppressed_at_short_distance():
    orb = orbital_set(2, 1.0)
    st_ = sample_slater(orb, 5000, burn_in=300, seed=1)
    d = st_.samples[:, 0] - st_.samples[:, 1]
    d -= np.rint(d)
    r = np.linalg.norm(d, axis=1)
    # uniform pairs would land within 0.15 with probability 4/3 pi 0.15^3 = 0.014
    assert np.mean(r < 0.15) < 0.004


def test_sampler_reproducible():
    orb = orbital_set(3, 1.0)
    a = sample_slater(orb, 200, burn_in=50, seed=9)
    b = sample_slater(orb, 200, burn_in=50, seed=9)
    assert np.array_equal(a.samples, b.samples)
    assert 0.05 < a.acceptance_rate < 0.9


def test_batch_means_iid():
    x = np.random.default_rng(0).standard_normal(20000)
    m, se = batch_means(x)
    assert abs(m) < 4 * se and se == pytest.approx(1 / math.sqrt(20000), rel=0.3)


def test_lt_single_particle_infinite_ratio():
    r = lt_ratio(orbital_set(1, 1.0), 0.25, n_samples=50, burn_in=10)
    assert math.isinf(r.ratio)


@pytest.mark.parametrize("mode", ["nonrel", "rel"])
def test_lt_inequality_holds_for_four_particles(mode):
    r = lt_ratio(orbital_set(4, 1.0), 0.25, q=2, mode=mode, n_samples=3000, seed=2)
    assert r.margin > 1
    assert r.conservative_ratio > 1


def test_lt_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        lt_ratio(orbital_set(2, 1.0), 0.0)
    with pytest.raises(InvalidInputError):
        lt_ratio(orbital_set(2, 1.0), 0.1, mode="ultra")
