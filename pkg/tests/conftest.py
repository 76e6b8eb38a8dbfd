import numpy as np
import pytest

from tildelab import PureState


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def bell(d=2):
    t = np.eye(d) / np.sqrt(d)
    return PureState((d, d), t.ravel())


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
