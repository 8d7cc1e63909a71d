import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from artifact.domain import DeviceSpec, DeviceState, EnergySource, ScheduleProblem, SourceKind, TimeGrid  # noqa: E402
from artifact.energy import grid_source  # noqa: E402
from artifact.policies import TotalPolicy  # noqa: E402

_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


def two_state(device_id, on_w, policy, off_w=0.0):
    return DeviceSpec(device_id, (DeviceState("off", off_w), DeviceState("on", on_w)), policy)


def grid_only(prices):
    return [[grid_source(p)] for p in prices]


@pytest.fixture
def tiny_problem():
    """One 100 W device needing one slot on, cheap then expensive grid."""
    grid = TimeGrid(2, 0.25)
    dev = two_state("lamp", 100.0, TotalPolicy("t", "on", 1))
    return ScheduleProblem(grid, [dev], grid_only([0.10, 0.50]))


@pytest.fixture
def pv_source():
    return EnergySource("pv", SourceKind.PV, 0.06, 0.5)
