"""Scheduling policies.

Each policy answers two questions:

* ``satisfied(column)`` -- does a complete per-slot state column obey it?
* ``step(digest, state, slot, horizon)`` -- the incremental form used by the
  search. A digest is the smallest summary of a prefix that decides which
  completions remain admissible; ``step`` returns ``None`` once no
  completion can satisfy the policy (sound pruning).

Two prefixes of a device with equal digests are interchangeable for the
rest of the horizon, which is what the search's dominance check relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import groupby
from typing import Any, ClassVar, Hashable, Optional, Sequence

from artifact.domain import BatteryAction, BatterySpec, DeviceSpec, TimeGrid
from artifact.units import from_micro

Digest = Hashable


class UnknownPolicyError(ValueError):
    pass


def _runs(column: Sequence[str], target: str) -> list[int]:
    return [len(list(g)) for key, g in groupby(column) if key == target]


@dataclass(frozen=True)
class Policy:
    policy_id: str

    variant: ClassVar[str] = ""

    def problems(self, device: DeviceSpec, grid: TimeGrid) -> list[str]:
        return []

    def satisfied(self, column: Sequence[str], grid: TimeGrid) -> bool:
        raise NotImplementedError

    def forced_state(self, slot: int) -> Optional[str]:
        """State the device must take at ``slot``, or None if it is free."""
        return None

    def initial(self) -> Digest:
        return 0

    def step(self, digest: Digest, state: str, slot: int, horizon: int) -> Optional[Digest]:
        forced = self.forced_state(slot)
        if forced is not None and state != forced:
            return None
        return digest

    def finished(self, digest: Digest) -> bool:
        return True

    def params(self) -> dict[str, Any]:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        return {"policy_id": self.policy_id, "variant": self.variant, **self.params()}


def _check_state(device: DeviceSpec, state: str, label: str = "target_state") -> list[str]:
    if state not in device.state_ids:
        return [f"{label} {state!r} is not a state of {device.device_id}"]
    return []


def _check_count(value: int, horizon: int, label: str) -> list[str]:
    if not 0 <= value <= horizon:
        return [f"{label}={value} outside [0, {horizon}]"]
    return []


@dataclass(frozen=True)
class TotalPolicy(Policy):
    """Exactly ``slots_required`` slots in ``target_state``, in any order."""

    target_state: str = ""
    slots_required: int = 0
    variant: ClassVar[str] = "total"

    def problems(self, device, grid):
        return _check_state(device, self.target_state) + _check_count(
            self.slots_required, grid.horizon_slots, "slots_required"
        )

    def satisfied(self, column, grid):
        return sum(s == self.target_state for s in column) == self.slots_required

    def step(self, count, state, slot, horizon):
        if state == self.target_state:
            count += 1
            if count > self.slots_required:
                return None
        if count + (horizon - slot - 1) < self.slots_required:
            return None
        return count

    def finished(self, count):
        return count == self.slots_required

    def params(self):
        return {"target_state": self.target_state, "slots_required": self.slots_required}


@dataclass(frozen=True)
class ContinuousPolicy(Policy):
    """A single uninterrupted run of exactly ``slots_required`` slots."""

    target_state: str = ""
    slots_required: int = 0
    variant: ClassVar[str] = "continuous"

    def problems(self, device, grid):
        return _check_state(device, self.target_state) + _check_count(
            self.slots_required, grid.horizon_slots, "slots_required"
        )

    def satisfied(self, column, grid):
        runs = _runs(column, self.target_state)
        if self.slots_required == 0:
            return not runs
        return runs == [self.slots_required]

    def initial(self):
        return (0, False)

    def step(self, digest, state, slot, horizon):
        count, in_run = digest
        need = self.slots_required
        remaining = horizon - slot - 1
        if state == self.target_state:
            if not in_run and count > 0:
                return None
            count += 1
            if count > need:
                return None
            in_run = True
        else:
            if in_run and count < need:
                return None
            in_run = False
        if count == 0 and remaining < need:
            return None
        if in_run and need - count > remaining:
            return None
        if count == need:
            in_run = False if state != self.target_state else in_run
        return (count, in_run)

    def finished(self, digest):
        return digest[0] == self.slots_required

    def params(self):
        return {"target_state": self.target_state, "slots_required": self.slots_required}


@dataclass(frozen=True)
class RepeatPolicy(Policy):
    """At least ``slots_on`` target slots in every full window of ``period_slots``.

    Windows slide one slot at a time; windows truncated by the end of the
    horizon are not checked.
    """

    target_state: str = ""
    slots_on: int = 1
    period_slots: int = 4
    variant: ClassVar[str] = "repeat"

    def problems(self, device, grid):
        out = _check_state(device, self.target_state)
        if self.period_slots < 1:
            out.append(f"period_slots={self.period_slots} must be >= 1")
        if not 0 <= self.slots_on <= self.period_slots:
            out.append(f"slots_on={self.slots_on} outside [0, period_slots]")
        return out

    def satisfied(self, column, grid):
        p, m = self.period_slots, self.slots_on
        hits = [s == self.target_state for s in column]
        return all(sum(hits[i : i + p]) >= m for i in range(len(hits) - p + 1))

    def initial(self):
        return ()

    # The digest holds the ages (slots since occurrence) of the most recent
    # ``slots_on`` target slots that can still fall inside an open window.
    def step(self, ages, state, slot, horizon):
        p, m = self.period_slots, self.slots_on
        if m == 0:
            return ()
        aged = [a + 1 for a in ages]
        if state == self.target_state:
            aged.insert(0, 0)
        aged = aged[:m]
        if slot >= p - 1 and sum(a <= p - 1 for a in aged) < m:
            return None
        # windows ending f slots ahead can gain at most f further hits
        for f in range(1, m):
            end = slot + f
            if end > horizon - 1:
                break
            if end < p - 1:
                continue
            if sum(a <= p - 1 - f for a in aged) + f < m:
                return None
        return tuple(a for a in aged if a <= p - 2)

    def params(self):
        return {"target_state": self.target_state, "slots_on": self.slots_on, "period_slots": self.period_slots}


@dataclass(frozen=True)
class MultiplePolicy(Policy):
    """Exactly ``job_count`` separate runs, each exactly ``job_length_slots`` long.

    Two jobs cannot abut; at least one other state separates them.
    """

    target_state: str = ""
    job_count: int = 1
    job_length_slots: int = 1
    variant: ClassVar[str] = "multiple"

    def problems(self, device, grid):
        out = _check_state(device, self.target_state)
        if self.job_count < 0:
            out.append("job_count must be >= 0")
        if self.job_count > 0 and self.job_length_slots < 1:
            out.append("job_length_slots must be >= 1")
        need = self.job_count * self.job_length_slots + max(0, self.job_count - 1)
        if need > grid.horizon_slots:
            out.append(f"{self.job_count} jobs of {self.job_length_slots} slots do not fit the horizon")
        return out

    def satisfied(self, column, grid):
        runs = _runs(column, self.target_state)
        return len(runs) == self.job_count and all(r == self.job_length_slots for r in runs)

    def initial(self):
        return (0, 0)

    def step(self, digest, state, slot, horizon):
        done, run = digest
        jobs, length = self.job_count, self.job_length_slots
        if state == self.target_state:
            if run == 0 and done >= jobs:
                return None
            run += 1
            if run > length:
                return None
        elif run:
            if run != length:
                return None
            done, run = done + 1, 0
        remaining = horizon - slot - 1
        if run:
            need = (length - run) + (jobs - done - 1) * (length + 1)
        else:
            left = jobs - done
            need = left * length + max(0, left - 1)
        if need > remaining:
            return None
        return (done, run)

    def finished(self, digest):
        done, run = digest
        if run:
            return run == self.job_length_slots and done + 1 == self.job_count
        return done == self.job_count

    def params(self):
        return {
            "target_state": self.target_state,
            "job_count": self.job_count,
            "job_length_slots": self.job_length_slots,
        }


@dataclass(frozen=True)
class StrictPolicy(Policy):
    """The full column is fixed ahead of time."""

    state_per_slot: tuple[str, ...] = ()
    variant: ClassVar[str] = "strict"

    def __post_init__(self):
        object.__setattr__(self, "state_per_slot", tuple(self.state_per_slot))

    def problems(self, device, grid):
        out = []
        if len(self.state_per_slot) != grid.horizon_slots:
            out.append(f"state_per_slot has {len(self.state_per_slot)} entries, horizon is {grid.horizon_slots}")
        for s in sorted(set(self.state_per_slot)):
            out += _check_state(device, s, "state_per_slot entry")
        return out

    def satisfied(self, column, grid):
        return tuple(column) == self.state_per_slot

    def forced_state(self, slot):
        return self.state_per_slot[slot]

    def params(self):
        return {"state_per_slot": list(self.state_per_slot)}


@dataclass(frozen=True)
class PatternPolicy(StrictPolicy):
    """Expected usage of an uncontrollable device; scheduled like Strict."""

    variant: ClassVar[str] = "pattern"


@dataclass(frozen=True)
class SleepPolicy(Policy):
    """Device held in ``target_state`` for slots in ``[window_start_slot, window_end_slot)``."""

    target_state: str = ""
    window_start_slot: int = 0
    window_end_slot: int = 0
    variant: ClassVar[str] = "sleep"

    def problems(self, device, grid):
        out = _check_state(device, self.target_state)
        if not 0 <= self.window_start_slot <= self.window_end_slot <= grid.horizon_slots:
            out.append(
                f"sleep window [{self.window_start_slot}, {self.window_end_slot}) not inside [0, {grid.horizon_slots}]"
            )
        return out

    def satisfied(self, column, grid):
        return all(s == self.target_state for s in column[self.window_start_slot : self.window_end_slot])

    def forced_state(self, slot):
        if self.window_start_slot <= slot < self.window_end_slot:
            return self.target_state
        return None

    def params(self):
        return {
            "target_state": self.target_state,
            "window_start_slot": self.window_start_slot,
            "window_end_slot": self.window_end_slot,
        }


@dataclass(frozen=True)
class BatteryPolicy(Policy):
    """Device acts as storage; its column is a sequence of battery actions."""

    spec: BatterySpec = field(default_factory=lambda: BatterySpec(capacity_max=0.0))
    variant: ClassVar[str] = "battery"

    def problems(self, device, grid):
        return ["battery devices must be supplied as the problem battery, not as a scheduled device"]

    def satisfied(self, column, grid):
        return battery_feasible(self.spec, column, grid)[0]

    def params(self):
        from dataclasses import asdict

        d = asdict(self.spec)
        d["efficiency_mode"] = self.spec.efficiency_mode.value
        return {"spec": d}


POLICY_TYPES: dict[str, type[Policy]] = {
    cls.variant: cls
    for cls in (
        TotalPolicy,
        ContinuousPolicy,
        RepeatPolicy,
        MultiplePolicy,
        StrictPolicy,
        PatternPolicy,
        SleepPolicy,
        BatteryPolicy,
    )
}


def policy_from_dict(data: dict[str, Any], default_id: str = "") -> Policy:
    data = dict(data)
    variant = str(data.pop("variant", "")).lower()
    if variant not in POLICY_TYPES:
        raise UnknownPolicyError(f"unknown policy variant {variant!r}")
    policy_id = data.pop("policy_id", default_id or variant)
    if variant == "battery":
        return BatteryPolicy(policy_id, spec=BatterySpec(**data.pop("spec", data)))
    return POLICY_TYPES[variant](policy_id, **data)


# ---------------------------------------------------------------------------
# module-level operations


def satisfied(policy: Policy, device_column: Sequence[str], grid: TimeGrid) -> bool:
    if len(device_column) != grid.horizon_slots:
        raise ValueError(f"column has {len(device_column)} slots, horizon is {grid.horizon_slots}")
    return policy.satisfied(device_column, grid)


def prefix_viable(policy: Policy, device_prefix: Sequence[str], grid: TimeGrid) -> bool:
    """False only when no completion of ``device_prefix`` can satisfy ``policy``."""
    if isinstance(policy, BatteryPolicy):
        return battery_feasible(policy.spec, device_prefix, grid)[0]
    horizon = grid.horizon_slots
    digest = policy.initial()
    for slot, state in enumerate(device_prefix):
        digest = policy.step(digest, state, slot, horizon)
        if digest is None:
            return False
    if len(device_prefix) == horizon:
        return policy.finished(digest)
    return True


def restorable(spec: BatterySpec, charge: int, remaining: int, duration_h: float) -> bool:
    """Can ``remaining`` more actions bring ``charge`` back to the initial charge?"""
    if not spec.enforce_end_equals_start:
        return True
    gap = spec.initial_micro - charge
    if gap == 0:
        return True
    up = spec.charge_step_micro(duration_h)
    down = spec.discharge_step_micro(duration_h)
    for n_up in range(remaining + 1):
        rest = n_up * up - gap
        if rest < 0 or rest % down:
            continue
        if n_up + rest // down <= remaining:
            return True
    return False


def battery_walk(
    spec: BatterySpec, actions: Sequence[BatteryAction | str], grid: TimeGrid
) -> tuple[bool, list[int]]:
    """Step the charge through ``actions``; integer micro-kWh trajectory."""
    dt = grid.slot_duration
    lo, hi = spec.min_micro, spec.max_micro
    charge = spec.initial_micro
    trajectory = [charge]
    ok = lo <= charge <= hi
    for a in actions:
        charge += spec.step_micro(BatteryAction(a), dt)
        trajectory.append(charge)
        if not lo <= charge <= hi:
            ok = False
    if ok:
        remaining = grid.horizon_slots - len(actions)
        ok = restorable(spec, charge, remaining, dt)
    return ok, trajectory


def battery_feasible(
    spec: BatterySpec, action_prefix: Sequence[BatteryAction | str], grid: TimeGrid
) -> tuple[bool, list[float]]:
    """Viability of a battery action prefix and its charge trajectory in kWh.

    A prefix is viable when the charge stays within capacity at every
    boundary and, if the end charge must equal the start, the remaining
    slots can still restore it (for a complete column: it already equals it).
    """
    ok, trajectory = battery_walk(spec, action_prefix, grid)
    return ok, [from_micro(c) for c in trajectory]
