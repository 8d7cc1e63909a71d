"""Exhaustive reference solver for small problems.

Enumerates every state column of every device, keeps those accepted by the
complete-column policy predicates, and evaluates the cross product of the
survivors with the merit-order dispatch. Shares nothing with the search
code beyond the problem data, the policy predicates and ``allocate_micro``.
"""

from __future__ import annotations

import time
from itertools import product

import numpy as np

from artifact.dispatch import allocate_micro, evaluate_schedule
from artifact.domain import BatteryAction, Schedule, ScheduleProblem, validate_problem
from artifact.policies import battery_walk
from artifact.search.space import InvalidProblemError, NoSolutionError, SearchStats
from artifact.units import energy_micro_kwh

MAX_DEVICES = 4
MAX_HORIZON = 8
MAX_COMBINATIONS = 5_000_000


class OracleRefused(ValueError):
    """The problem is too large for exhaustive enumeration."""


def feasible_columns(problem: ScheduleProblem) -> tuple[list[list[tuple[str, ...]]], list[tuple]]:
    """Per-device accepted columns and accepted battery columns (``[()]`` without battery)."""
    grid = problem.grid
    horizon = grid.horizon_slots
    device_cols = []
    for dev in problem.devices:
        cols = [c for c in product(dev.state_ids, repeat=horizon) if dev.policy.satisfied(c, grid)]
        device_cols.append(cols)
    if problem.battery is None:
        battery_cols: list[tuple] = [()]
    else:
        battery_cols = [c for c in product(tuple(BatteryAction), repeat=horizon) if battery_walk(problem.battery, c, grid)[0]]
    return device_cols, battery_cols


def solve_oracle(problem: ScheduleProblem) -> tuple[Schedule, SearchStats]:
    issues = validate_problem(problem)
    if issues:
        raise InvalidProblemError("; ".join(str(v) for v in issues))
    grid = problem.grid
    horizon = grid.horizon_slots
    if len(problem.devices) > MAX_DEVICES or horizon > MAX_HORIZON:
        raise OracleRefused(f"oracle limited to {MAX_DEVICES} devices and {MAX_HORIZON} slots")
    start = time.perf_counter()
    device_cols, battery_cols = feasible_columns(problem)
    sizes = [len(c) for c in device_cols] + [len(battery_cols)]
    n_total = int(np.prod(sizes, dtype=object))
    if n_total == 0:
        raise NoSolutionError("no combination of columns satisfies every policy")
    if n_total > MAX_COMBINATIONS:
        raise OracleRefused(f"{n_total} candidate schedules exceed the enumeration limit")

    # load[combo, t] accumulated by broadcasting one device at a time
    load = np.zeros((1, horizon), dtype=np.int64)
    for dev, cols in zip(problem.devices, device_cols):
        e = {s.state_id: energy_micro_kwh(s.power, grid.slot_duration) for s in dev.states}
        mat = np.array([[e[s] for s in col] for col in cols], dtype=np.int64).reshape(len(cols), horizon)
        load = (load[:, None, :] + mat[None, :, :]).reshape(-1, horizon)

    if problem.battery is not None:
        b = problem.battery
        draw = b.charge_draw_micro(grid.slot_duration)
        supply = b.discharge_supply_micro(grid.slot_duration)
        delta_of = {BatteryAction.IDLE: 0, BatteryAction.CHARGE: draw, BatteryAction.DISCHARGE: -supply}
        delta = np.array([[delta_of[a] for a in col] for col in battery_cols], dtype=np.int64)
        activity = np.array([sum(a is not BatteryAction.IDLE for a in col) for col in battery_cols])
        demand = np.maximum(0, load[:, None, :] + delta[None, :, :]).reshape(-1, horizon)
        activity = np.broadcast_to(activity[None, :], (load.shape[0], len(battery_cols))).reshape(-1)
    else:
        demand = load
        activity = np.zeros(load.shape[0], dtype=np.int64)

    total = np.zeros(demand.shape[0], dtype=np.int64)
    for t in range(horizon):
        values, inverse = np.unique(demand[:, t], return_inverse=True)
        slot_costs = np.array(
            [allocate_micro(problem.sources_per_slot[t], int(v)).slot_cost for v in values], dtype=np.int64
        )
        total += slot_costs[inverse.reshape(-1)]

    order = np.lexsort((np.arange(total.size), activity, total))
    best = int(order[0])
    # unravel the flat index back into per-device and battery column choices
    idx = np.unravel_index(best, sizes)
    rows = [tuple(device_cols[i][idx[i]][t] for i in range(len(problem.devices))) for t in range(horizon)]
    actions = list(battery_cols[idx[-1]]) if problem.battery is not None else None
    schedule = evaluate_schedule(problem, rows, actions)
    if schedule.total_cost != int(total[best]):
        raise AssertionError("oracle replay disagrees with its vectorised evaluation")
    stats = SearchStats(
        variant="oracle",
        threads=1,
        duration_ms=(time.perf_counter() - start) * 1000.0,
        nodes_expanded=n_total,
        total_cost=schedule.total_cost,
    )
    return schedule, stats
