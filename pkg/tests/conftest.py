import math

import numpy as np
import pytest

from eigendetect.array_signal import ArrayConfig, ScenarioConfig


@pytest.fixture
def array64():
    return ArrayConfig(64, 0.5)


@pytest.fixture
def weak_source():
    return ScenarioConfig(snr_db=-18.0, theta_rad=math.pi / 6, n_snapshots=200)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_line(request):
    """Record one 'criterion k: PASS|FAIL ...' line, shown in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
