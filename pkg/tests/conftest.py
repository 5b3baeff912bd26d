import numpy as np
import pytest

_CRITERION_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report_criterion():
    """Collects acceptance lines so they appear in the terminal summary even when output is captured."""
    return _CRITERION_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERION_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
