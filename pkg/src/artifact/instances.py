"""Seeded random problem generator for equivalence sweeps and benchmarks."""

from __future__ import annotations

import random
from typing import Optional

from artifact.domain import BatterySpec, DeviceSpec, DeviceState, EnergySource, ScheduleProblem, SourceKind, TimeGrid
from artifact.policies import (
    ContinuousPolicy,
    MultiplePolicy,
    PatternPolicy,
    RepeatPolicy,
    SleepPolicy,
    StrictPolicy,
    TotalPolicy,
)

VARIANTS = ("total", "continuous", "repeat", "multiple", "strict", "pattern", "sleep")


def random_policy(rng: random.Random, states: tuple[str, ...], horizon: int, variant: Optional[str] = None):
    variant = variant or rng.choice(VARIANTS)
    target = states[-1]
    pid = f"p-{variant}"
    if variant == "total":
        return TotalPolicy(pid, target, rng.randint(0, min(3, horizon)))
    if variant == "continuous":
        return ContinuousPolicy(pid, target, rng.randint(1, min(3, horizon)))
    if variant == "repeat":
        period = rng.randint(2, min(4, horizon))
        return RepeatPolicy(pid, target, rng.randint(1, min(2, period)), period)
    if variant == "multiple":
        length = rng.randint(1, 2)
        jobs = rng.randint(1, 2)
        while jobs * length + jobs - 1 > horizon:
            jobs -= 1
        return MultiplePolicy(pid, target, jobs, length)
    if variant in ("strict", "pattern"):
        cls = StrictPolicy if variant == "strict" else PatternPolicy
        return cls(pid, tuple(rng.choice(states) for _ in range(horizon)))
    start = rng.randint(0, horizon - 1)
    end = rng.randint(start, horizon)
    return SleepPolicy(pid, states[0], start, end)


def candidate_count(problem: ScheduleProblem) -> int:
    """Number of complete schedules the exhaustive oracle would evaluate."""
    from artifact.search.oracle import feasible_columns

    device_cols, battery_cols = feasible_columns(problem)
    n = len(battery_cols)
    for cols in device_cols:
        n *= len(cols)
    return n


def random_problem(
    seed: int,
    max_devices: int = 3,
    max_slots: int = 8,
    max_sources: int = 3,
    battery: Optional[bool] = None,
    min_slots: int = 2,
) -> ScheduleProblem:
    """One random instance, fully determined by ``seed``."""
    rng = random.Random(seed)
    horizon = rng.randint(min_slots, max_slots)
    grid = TimeGrid(horizon, 0.25)
    devices = []
    for i in range(rng.randint(1, max_devices)):
        n_states = 3 if rng.random() < 0.15 else 2
        powers = sorted(round(rng.uniform(0, 50), 2) if k == 0 else round(rng.uniform(100, 3000), 2) for k in range(n_states))
        states = tuple(DeviceState(f"S{k}", p) for k, p in enumerate(powers))
        policy = random_policy(rng, tuple(s.state_id for s in states), horizon)
        devices.append(DeviceSpec(f"dev{i}", states, policy))

    sources = []
    for t in range(horizon):
        slot = []
        for k in range(rng.randint(0, max_sources - 1)):
            kind = rng.choice((SourceKind.WIND, SourceKind.PV, SourceKind.PROSUMER))
            slot.append(EnergySource(f"{kind.value}-{k}", kind, round(rng.uniform(0.0, 0.4), 4), round(rng.uniform(0, 1.2), 3)))
        slot.append(EnergySource("grid", SourceKind.GRID, round(rng.uniform(0.3, 0.6), 4), None))
        sources.append(slot)

    if battery is None:
        battery = rng.random() < 0.5
    spec = None
    if battery:
        rate = rng.choice((1000.0, 2000.0, 3000.0))
        quantum = rate * 0.25 / 1000.0
        levels = rng.randint(1, 3)
        efficiency = rng.choice((1.0, 1.0, 0.9))
        step = quantum / efficiency
        spec = BatterySpec(
            capacity_max=round(step * levels + rng.uniform(0, step * 0.9), 4),
            capacity_min=0.0,
            charge_rate_max=rate,
            discharge_rate_max=rate,
            efficiency=efficiency,
            initial_charge=0.0 if rng.random() < 0.7 else round(step, 6),
            enforce_end_equals_start=rng.random() < 0.8,
        )
    return ScheduleProblem(grid, devices, sources, spec, name=f"random-{seed}")


def random_problems(count: int, start_seed: int = 0, max_candidates: int = 50_000, **kwargs) -> list[ScheduleProblem]:
    """``count`` instances small enough to enumerate, skipping oversize seeds."""
    out = []
    seed = start_seed
    while len(out) < count:
        problem = random_problem(seed, **kwargs)
        seed += 1
        if candidate_count(problem) <= max_candidates:
            out.append(problem)
    return out
