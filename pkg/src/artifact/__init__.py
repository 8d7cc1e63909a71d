"""Cost-optimal scheduling of office appliances over mixed energy sources."""

from artifact.domain import (
    BatteryAction,
    BatterySpec,
    DeviceSpec,
    DeviceState,
    EfficiencyMode,
    EnergySource,
    Schedule,
    ScheduleProblem,
    SourceKind,
    TimeGrid,
    validate_problem,
)

__all__ = [
    "BatteryAction",
    "BatterySpec",
    "DeviceSpec",
    "DeviceState",
    "EfficiencyMode",
    "EnergySource",
    "Schedule",
    "ScheduleProblem",
    "SourceKind",
    "TimeGrid",
    "validate_problem",
]
