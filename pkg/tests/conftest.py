import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ccsmcp.model import Instance, generate_random

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def running_example():
    """Three columns at p=0.9, demand 2, risk 0.1; only x=(1,1,1) is feasible."""
    return Instance.from_dense([1, 1, 1], [[0.9, 0.9, 0.9]], [2], [0.1])


@pytest.fixture
def small_instances():
    """A mixed bag of small random instances, some with a budget."""
    out = []
    for s in range(12):
        rng = np.random.default_rng(s)
        n, m = int(rng.integers(5, 10)), int(rng.integers(2, 5))
        budget = int(rng.integers(n // 2, n + 1)) if s % 3 == 0 else None
        out.append(generate_random(n, m, seed=s, max_support=5, budget=budget))
    return out


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance lines at the end of the run."""
    import sys

    lines = []
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance"):
            lines = getattr(mod, "REPORT", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
