import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_int_patch(rng, max_side=8, max_value=7):
    h, w = rng.integers(1, max_side + 1, size=2)
    return rng.integers(0, max_value + 1, size=(h, w)).astype(float)


# digit "8": dark (0) strokes on a bright (1) background
DIGIT_EIGHT = np.array([
    [1, 1, 1, 1, 1],
    [1, 0, 0, 0, 1],
    [1, 0, 1, 0, 1],
    [1, 0, 0, 0, 1],
    [1, 0, 1, 0, 1],
    [1, 0, 0, 0, 1],
    [1, 1, 1, 1, 1],
], dtype=float)

RING = np.array([[0, 0, 0], [0, 5, 0], [0, 0, 0]], dtype=float)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
