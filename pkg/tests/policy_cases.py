"""Parameter sweeps for the exhaustive policy checks."""

from itertools import product

from artifact.domain import BatterySpec, EfficiencyMode
from artifact.policies import (
    BatteryPolicy,
    ContinuousPolicy,
    MultiplePolicy,
    PatternPolicy,
    RepeatPolicy,
    SleepPolicy,
    StrictPolicy,
    TotalPolicy,
)

STATES = ("S0", "S1")
ACTIONS = ("idle", "charge", "discharge")


def policies_for(horizon, fixed_columns=()):
    """Every small parameterisation of each variant at ``horizon``."""
    out = {v: [] for v in ("total", "continuous", "repeat", "multiple", "strict", "pattern", "sleep", "battery")}
    for n in range(horizon + 1):
        out["total"].append(TotalPolicy("t", "S1", n))
        out["continuous"].append(ContinuousPolicy("c", "S1", n))
    for period in range(1, horizon + 1):
        for on in range(period + 1):
            out["repeat"].append(RepeatPolicy("r", "S1", on, period))
    for jobs in range(0, horizon + 1):
        for length in range(1, horizon + 1):
            if jobs * length + max(0, jobs - 1) <= horizon:
                out["multiple"].append(MultiplePolicy("m", "S1", jobs, length))
    for col in fixed_columns:
        out["strict"].append(StrictPolicy("s", col))
        out["pattern"].append(PatternPolicy("p", col))
    for start in range(horizon + 1):
        for end in range(start, horizon + 1):
            out["sleep"].append(SleepPolicy("z", "S0", start, end))
    for cap, eta, init, enforce, mode in product(
        (0.75, 1.5, 2.66), (1.0, 0.8), (0.0, 0.75), (True, False), EfficiencyMode
    ):
        if init <= cap:
            spec = BatterySpec(cap, 0.0, 3000.0, 3000.0, eta, init, enforce, mode)
            out["battery"].append(BatteryPolicy("b", spec=spec))
    return out
