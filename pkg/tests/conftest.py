import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dmotlab.core import GlobalLabel, LabelledEstimate

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def est(x, y, node, alpha=0, s=1, vx=0.0, vy=0.0):
    return LabelledEstimate(np.array([x, vx, y, vy], float), GlobalLabel(s, alpha, node))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Ten estimates from three nodes laid out like the worked clustering example:
# (node, index) -> position
FIG3 = {
    (1, 1): (0, 0), (1, 2): (50, 40), (1, 3): (-40, 60),
    (2, 1): (100, 0), (2, 2): (53, 42), (2, 3): (3, 1), (2, 4): (20, -60),
    (3, 1): (130, 70), (3, 2): (48, 43), (3, 3): (102, -3),
}


def fig3_pool():
    return [est(x, y, node, alpha) for (node, alpha), (x, y) in FIG3.items()]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.REPORT, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
