import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_degrees(points, rows, radius):
    """Oracle: degrees from an explicit double loop over pairs."""
    pts = np.asarray(points, dtype=float)
    out = []
    for i in rows:
        count = 0
        for j in range(len(pts)):
            if j != i and np.sqrt(np.sum((pts[i] - pts[j]) ** 2)) <= radius:
                count += 1
        out.append(count)
    return np.array(out)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
