"""Core data model: time grid, devices, energy sources, battery, schedules.

All types are frozen dataclasses and safe to share between workers.
Power is in watts, energy in kWh, durations in hours; integer micro-unit
views (see :mod:`artifact.units`) are what the search and dispatch code
actually compute with.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import TYPE_CHECKING, Optional, Sequence

from artifact.units import energy_micro_kwh, from_micro, kwh_to_micro, to_micro

if TYPE_CHECKING:
    from artifact.policies import Policy


class SourceKind(str, enum.Enum):
    WIND = "wind"
    PV = "pv"
    PROSUMER = "prosumer"
    GRID = "grid"
    BATTERY = "battery-internal"


class BatteryAction(str, enum.Enum):
    # declaration order is the expansion order in the search
    IDLE = "idle"
    CHARGE = "charge"
    DISCHARGE = "discharge"


class EfficiencyMode(str, enum.Enum):
    SYMMETRIC = "symmetric"  # divide by efficiency on both charge and discharge
    PHYSICAL = "physical"  # multiply on charge, divide on discharge


@dataclass(frozen=True)
class TimeGrid:
    horizon_slots: int
    slot_duration: float = 0.25
    start_label: datetime = datetime(2022, 2, 8, tzinfo=timezone.utc)

    def slot_start(self, slot: int) -> datetime:
        return self.start_label + timedelta(hours=self.slot_duration * slot)

    @property
    def slots_per_hour(self) -> float:
        return 1.0 / self.slot_duration


@dataclass(frozen=True)
class DeviceState:
    state_id: str
    power: float  # watts


@dataclass(frozen=True)
class DeviceSpec:
    device_id: str
    states: tuple[DeviceState, ...]
    policy: "Policy"

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))

    def state(self, state_id: str) -> DeviceState:
        for s in self.states:
            if s.state_id == state_id:
                return s
        raise KeyError(f"device {self.device_id!r} has no state {state_id!r}")

    def state_index(self, state_id: str) -> int:
        for i, s in enumerate(self.states):
            if s.state_id == state_id:
                return i
        raise KeyError(f"device {self.device_id!r} has no state {state_id!r}")

    @property
    def state_ids(self) -> tuple[str, ...]:
        return tuple(s.state_id for s in self.states)


@dataclass(frozen=True)
class EnergySource:
    """A per-slot supply offer. ``energy=None`` marks an unbounded source."""

    source_id: str
    kind: SourceKind
    cost: float  # currency-units per kWh
    energy: Optional[float]  # kWh, None = unbounded
    cost_micro: int = field(init=False, repr=False, compare=False)
    energy_micro: Optional[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", SourceKind(self.kind))
        object.__setattr__(self, "cost_micro", to_micro(self.cost))
        object.__setattr__(
            self, "energy_micro", None if self.energy is None else kwh_to_micro(self.energy)
        )

    @property
    def unbounded(self) -> bool:
        return self.energy is None


@dataclass(frozen=True)
class BatterySpec:
    capacity_max: float  # kWh
    capacity_min: float = 0.0  # kWh
    charge_rate_max: float = 3000.0  # W
    discharge_rate_max: float = 3000.0  # W
    efficiency: float = 1.0
    initial_charge: float = 0.0  # kWh
    enforce_end_equals_start: bool = True
    efficiency_mode: EfficiencyMode = EfficiencyMode.SYMMETRIC

    def __post_init__(self):
        object.__setattr__(self, "efficiency_mode", EfficiencyMode(self.efficiency_mode))

    # Integer views used by the search; all in micro-kWh.
    @property
    def min_micro(self) -> int:
        return kwh_to_micro(self.capacity_min)

    @property
    def max_micro(self) -> int:
        return kwh_to_micro(self.capacity_max)

    @property
    def initial_micro(self) -> int:
        return kwh_to_micro(self.initial_charge)

    def charge_draw_micro(self, duration_h: float) -> int:
        """Energy taken from the sources during one charge slot."""
        return energy_micro_kwh(self.charge_rate_max, duration_h)

    def discharge_supply_micro(self, duration_h: float) -> int:
        """Energy delivered to the loads during one discharge slot."""
        return energy_micro_kwh(self.discharge_rate_max, duration_h)

    def charge_step_micro(self, duration_h: float) -> int:
        """Change of stored charge for one charge slot."""
        draw = self.charge_rate_max * duration_h * 1000.0
        if self.efficiency_mode is EfficiencyMode.SYMMETRIC:
            return int(round(draw / self.efficiency))
        return int(round(draw * self.efficiency))

    def discharge_step_micro(self, duration_h: float) -> int:
        """Decrease of stored charge for one discharge slot."""
        return int(round(self.discharge_rate_max * duration_h * 1000.0 / self.efficiency))

    def step_micro(self, action: BatteryAction, duration_h: float) -> int:
        if action is BatteryAction.CHARGE:
            return self.charge_step_micro(duration_h)
        if action is BatteryAction.DISCHARGE:
            return -self.discharge_step_micro(duration_h)
        return 0


@dataclass(frozen=True)
class ScheduleProblem:
    grid: TimeGrid
    devices: tuple[DeviceSpec, ...]
    sources_per_slot: tuple[tuple[EnergySource, ...], ...]
    battery: Optional[BatterySpec] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        object.__setattr__(
            self, "sources_per_slot", tuple(tuple(s) for s in self.sources_per_slot)
        )

    @property
    def device_ids(self) -> tuple[str, ...]:
        return tuple(d.device_id for d in self.devices)

    def without_battery(self) -> "ScheduleProblem":
        return ScheduleProblem(self.grid, self.devices, self.sources_per_slot, None, self.name)


@dataclass(frozen=True)
class Schedule:
    """A complete assignment with its replayed cost breakdown.

    Costs are integer micro-currency-units, energies and charges integer
    micro-kWh. ``battery_trajectory`` has ``horizon + 1`` boundary values
    (empty when the problem has no battery).
    """

    device_ids: tuple[str, ...]
    assignments: tuple[tuple[str, ...], ...]
    battery_actions: Optional[tuple[BatteryAction, ...]]
    per_slot_cost: tuple[int, ...]
    total_cost: int
    battery_trajectory: tuple[int, ...]
    per_slot_demand: tuple[int, ...]

    @property
    def horizon(self) -> int:
        return len(self.assignments)

    @property
    def total_cost_value(self) -> float:
        return from_micro(self.total_cost)

    @property
    def battery_activity(self) -> int:
        if not self.battery_actions:
            return 0
        return sum(a is not BatteryAction.IDLE for a in self.battery_actions)

    def column(self, device_id: str) -> tuple[str, ...]:
        i = self.device_ids.index(device_id)
        return tuple(row[i] for row in self.assignments)

    def demand_kwh(self) -> list[float]:
        return [from_micro(e) for e in self.per_slot_demand]


@dataclass(frozen=True)
class Violation:
    where: str
    field: str
    message: str

    def __str__(self):
        return f"{self.where}: {self.field}: {self.message}"


def validate_problem(problem: ScheduleProblem) -> list[Violation]:
    """Report every broken invariant; an empty list means well-formed."""
    out: list[Violation] = []
    grid = problem.grid
    if grid.horizon_slots < 1:
        out.append(Violation("grid", "horizon_slots", "must be >= 1"))
    if not grid.slot_duration > 0:
        out.append(Violation("grid", "slot_duration", "must be > 0"))

    seen: set[str] = set()
    for dev in problem.devices:
        where = f"device {dev.device_id}"
        if dev.device_id in seen:
            out.append(Violation(where, "device_id", "duplicate device id"))
        seen.add(dev.device_id)
        if not dev.states:
            out.append(Violation(where, "states", "at least one state required"))
        ids = [s.state_id for s in dev.states]
        if len(set(ids)) != len(ids):
            out.append(Violation(where, "states", "duplicate state id"))
        for s in dev.states:
            if not s.power >= 0:
                out.append(Violation(where, "power", f"state {s.state_id} has negative power {s.power}"))
        policy = dev.policy
        if policy is None or isinstance(policy, (list, tuple)):
            out.append(Violation(where, "policy", "exactly one policy per device is required"))
            continue
        for msg in policy.problems(dev, grid):
            out.append(Violation(where, "policy", msg))

    if len(problem.sources_per_slot) != grid.horizon_slots:
        out.append(
            Violation(
                "sources",
                "sources_per_slot",
                f"{len(problem.sources_per_slot)} slots of sources for a {grid.horizon_slots}-slot grid",
            )
        )
    for t, sources in enumerate(problem.sources_per_slot):
        n_unbounded = 0
        for src in sources:
            if src.cost < 0:
                out.append(Violation(f"slot {t}", "cost", f"source {src.source_id} has negative cost"))
            if src.energy is None:
                n_unbounded += 1
                if src.kind is not SourceKind.GRID:
                    out.append(
                        Violation(f"slot {t}", "energy", f"source {src.source_id} is unbounded but not grid")
                    )
            elif src.energy < 0:
                out.append(Violation(f"slot {t}", "energy", f"source {src.source_id} has negative energy"))
        n_grid = sum(src.kind is SourceKind.GRID for src in sources)
        if n_unbounded == 0:
            out.append(Violation(f"slot {t}", "sources", f"no unbounded source at slot {t}"))
        if n_grid != 1:
            out.append(Violation(f"slot {t}", "sources", f"expected exactly one grid source, found {n_grid}"))

    b = problem.battery
    if b is not None:
        if not 0 <= b.capacity_min <= b.capacity_max:
            out.append(Violation("battery", "capacity", "need 0 <= capacity_min <= capacity_max"))
        if not (b.charge_rate_max > 0 and b.discharge_rate_max > 0):
            out.append(Violation("battery", "rates", "charge and discharge rates must be > 0"))
        if not 0 < b.efficiency <= 1:
            out.append(Violation("battery", "efficiency", "must lie in (0, 1]"))
        if not b.capacity_min <= b.initial_charge <= b.capacity_max:
            out.append(Violation("battery", "initial_charge", "outside [capacity_min, capacity_max]"))
    return out


def device_energy_micro(device: DeviceSpec, state_id: str, grid: TimeGrid) -> int:
    return energy_micro_kwh(device.state(state_id).power, grid.slot_duration)


def schedule_energy(
    schedule: Schedule,
    grid: TimeGrid,
    devices: Sequence[DeviceSpec],
    battery: Optional[BatterySpec] = None,
) -> list[float]:
    """Per-slot energy bought from the sources, in kWh.

    Device loads are ``power * duration``; a charging battery adds its draw
    and a discharging battery offsets load down to zero.
    """
    return [from_micro(e) for e in schedule_energy_micro(schedule, grid, devices, battery)]


def schedule_energy_micro(
    schedule: Schedule,
    grid: TimeGrid,
    devices: Sequence[DeviceSpec],
    battery: Optional[BatterySpec] = None,
) -> list[int]:
    from artifact.dispatch import net_demand_micro

    by_id = {d.device_id: d for d in devices}
    out = []
    for t, row in enumerate(schedule.assignments):
        loads = [
            device_energy_micro(by_id[dev_id], sid, grid)
            for dev_id, sid in zip(schedule.device_ids, row)
        ]
        action = BatteryAction.IDLE
        amount = 0
        if schedule.battery_actions is not None:
            action = schedule.battery_actions[t]
            if battery is None:
                raise ValueError("schedule has battery actions but no battery spec was given")
            if action is BatteryAction.CHARGE:
                amount = battery.charge_draw_micro(grid.slot_duration)
            elif action is BatteryAction.DISCHARGE:
                amount = battery.discharge_supply_micro(grid.slot_duration)
        out.append(net_demand_micro(loads, action, amount))
    return out
