import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("qed", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qed")

TWO_PI = 2 * math.pi


@pytest.fixture(scope="session")
def lat18():
    from qedbounds.lattice import lattice

    return lattice(1.0, 1.5, TWO_PI)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
