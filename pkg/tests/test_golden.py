import math

from hypothesis import given
from hypothesis import strategies as st

from qedbounds.golden import golden_max, golden_min


@given(st.floats(-5, 5))
def test_parabola(c):
    r = golden_min(lambda x: (x - c) ** 2, -10, 10, rtol=1e-8)
    assert abs(r.x - c) < 1e-6


@given(st.floats(-3, 3))
def test_log_search(logc):
    c = math.exp(logc)
    r = golden_min(lambda x: (math.log(x) - logc) ** 2, 1e-3, 1e3, rtol=1e-6, log=True)
    assert abs(r.x / c - 1) < 1e-5


def test_boundary_minimum_returned():
    r = golden_min(lambda x: x, 1.0, 2.0)
    assert r.x == 1.0


def test_seed_point_does_not_derail_search():
    # strongly asymmetric peak with a poor initial guess
    f = lambda R: min(50 * R ** -1.5, R * R / 2) - 30 * R ** -3  # noqa: E731
    plain = golden_max(f, 0.01, 100, log=True)
    seeded = golden_max(f, 0.01, 100, log=True, x0=0.05)
    assert abs(seeded.x / plain.x - 1) < 2e-3
    assert seeded.fx >= plain.fx - 1e-9
