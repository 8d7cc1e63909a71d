"""Per-slot cost function: merit-order allocation of demand over sources."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from artifact.domain import (
    BatteryAction,
    EnergySource,
    Schedule,
    ScheduleProblem,
    device_energy_micro,
)
from artifact.units import from_micro, kwh_to_micro, pico_to_micro


class InfeasibleSlotError(ValueError):
    """Demand exceeds everything on offer and no source is unbounded."""


@dataclass(frozen=True)
class SlotAllocation:
    draws: tuple[tuple[str, int], ...]  # (source_id, micro-kWh drawn)
    slot_cost: int  # micro-currency
    unserved: int  # micro-kWh

    @property
    def slot_cost_value(self) -> float:
        return from_micro(self.slot_cost)

    def drawn_kwh(self) -> dict[str, float]:
        return {sid: from_micro(e) for sid, e in self.draws}


def merit_order(sources: Sequence[EnergySource]) -> list[EnergySource]:
    return sorted(sources, key=lambda s: (s.cost_micro, s.source_id))


def allocate_micro(sources: Sequence[EnergySource], demand: int) -> SlotAllocation:
    if demand < 0:
        raise ValueError(f"negative demand {demand}")
    remaining = demand
    pico = 0
    draws = []
    for src in merit_order(sources):
        if remaining == 0:
            break
        take = remaining if src.energy_micro is None else min(remaining, src.energy_micro)
        if take <= 0:
            continue
        draws.append((src.source_id, take))
        pico += take * src.cost_micro
        remaining -= take
    if remaining > 0:
        raise InfeasibleSlotError(
            f"demand of {from_micro(demand):.6f} kWh exceeds available supply by {from_micro(remaining):.6f} kWh"
        )
    return SlotAllocation(tuple(draws), pico_to_micro(pico), 0)


def slot_cost(sources: Sequence[EnergySource], demand_kwh: float) -> SlotAllocation:
    """Fill ``demand_kwh`` cheapest-first; ties broken by source id."""
    return allocate_micro(sources, kwh_to_micro(demand_kwh))


class SlotPricer:
    """Memoised merit-order cost for one slot's fixed source list."""

    __slots__ = ("_steps", "_cache")

    def __init__(self, sources: Sequence[EnergySource]):
        self._steps = [(s.energy_micro, s.cost_micro) for s in merit_order(sources)]
        self._cache: dict[int, int] = {}

    def __call__(self, demand: int) -> int:
        cost = self._cache.get(demand)
        if cost is not None:
            return cost
        remaining = demand
        pico = 0
        for cap, price in self._steps:
            if remaining == 0:
                break
            take = remaining if cap is None or cap > remaining else cap
            pico += take * price
            remaining -= take
        if remaining > 0:
            raise InfeasibleSlotError(f"slot demand {demand} micro-kWh exceeds supply")
        cost = pico_to_micro(pico)
        self._cache[demand] = cost
        return cost


def net_demand_micro(device_energies: Sequence[int], action: BatteryAction, battery_energy: int) -> int:
    total = sum(device_energies)
    if action is BatteryAction.CHARGE:
        total += battery_energy
    elif action is BatteryAction.DISCHARGE:
        # no export: surplus discharge is forfeited
        total = max(0, total - battery_energy)
    return total


def net_demand(
    device_energies: Sequence[float], battery_action: BatteryAction | str, battery_energy_kwh: float
) -> float:
    action = BatteryAction(battery_action)
    micro = net_demand_micro([kwh_to_micro(e) for e in device_energies], action, kwh_to_micro(battery_energy_kwh))
    return from_micro(micro)


def evaluate_schedule(
    problem: ScheduleProblem,
    assignments: Sequence[Sequence[str]],
    battery_actions: Optional[Sequence[BatteryAction]] = None,
) -> Schedule:
    """Replay an assignment matrix through dispatch and the battery model.

    No feasibility checks are made here beyond the slot supply; use the
    policy predicates for that.
    """
    grid = problem.grid
    devices = problem.devices
    battery = problem.battery
    dt = grid.slot_duration
    if battery_actions is not None and battery is None:
        raise ValueError("battery actions given for a problem without battery")
    if battery is not None and battery_actions is None:
        battery_actions = [BatteryAction.IDLE] * grid.horizon_slots

    costs = []
    demands = []
    trajectory = []
    charge = battery.initial_micro if battery is not None else 0
    if battery is not None:
        trajectory.append(charge)
    for t, row in enumerate(assignments):
        loads = [device_energy_micro(d, sid, grid) for d, sid in zip(devices, row)]
        action = BatteryAction.IDLE
        amount = 0
        if battery is not None:
            action = BatteryAction(battery_actions[t])
            if action is BatteryAction.CHARGE:
                amount = battery.charge_draw_micro(dt)
            elif action is BatteryAction.DISCHARGE:
                amount = battery.discharge_supply_micro(dt)
            charge += battery.step_micro(action, dt)
            trajectory.append(charge)
        demand = net_demand_micro(loads, action, amount)
        demands.append(demand)
        costs.append(allocate_micro(problem.sources_per_slot[t], demand).slot_cost)
    return Schedule(
        device_ids=problem.device_ids,
        assignments=tuple(tuple(r) for r in assignments),
        battery_actions=None if battery is None else tuple(BatteryAction(a) for a in battery_actions),
        per_slot_cost=tuple(costs),
        total_cost=sum(costs),
        battery_trajectory=tuple(trajectory),
        per_slot_demand=tuple(demands),
    )
