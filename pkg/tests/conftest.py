import numpy as np
import pytest

from carleman_lab import geometry, partition, velocity, weight

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def unit_disk():
    return geometry.Domain.disk()


@pytest.fixture
def disk_fixture():
    """Unit disk, H = (1, 0), S* = 0.8, r = 2 over [0, 2] cut at t = 1."""
    dom = geometry.Domain.disk()
    fld = velocity.constant([1.0, 0.0], 2.0)
    part = partition.from_times(fld, [0.0, 1.0, 2.0], 0.8)
    w = weight.build_weight(dom, fld, part, r=2.0)
    return dom, fld, part, w


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
