import numpy as np
import pytest

from bedgames.board import BoardConfig

SMALL = BoardConfig(rows=4, cols=4, ships=(("red", 2), ("green", 3)))


@pytest.fixture
def small():
    return SMALL


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
