"""Compiled view of a ScheduleProblem used by every search variant.

A node is identified for dominance purposes by ``(depth, digests, charge)``:
the slot reached, the per-device policy digests and the battery charge in
micro-kWh. Two prefixes with the same identity have identical sets of
admissible completions at identical costs, so only the cheaper one needs
to survive.

Costs are ordered as ``(money, battery_activity)``: among schedules of equal
money cost the one that cycles the battery least is preferred.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Optional

from artifact.dispatch import SlotPricer
from artifact.domain import BatteryAction, ScheduleProblem, validate_problem
from artifact.policies import restorable
from artifact.units import energy_micro_kwh

BATTERY_ACTIONS = tuple(BatteryAction)  # idle, charge, discharge
COMBO_CACHE_LIMIT = 20_000


class NoSolutionError(RuntimeError):
    """No schedule satisfies every policy and the battery constraints."""


class NodeBudgetExceeded(RuntimeError):
    """Search expanded more nodes than allowed."""

    def __init__(self, expanded: int, best_bound: Optional[int]):
        super().__init__(f"node budget exhausted after {expanded} expansions (cost lower bound {best_bound})")
        self.expanded = expanded
        self.best_bound = best_bound


class InvalidProblemError(ValueError):
    pass


@dataclass
class SearchStats:
    variant: str = ""
    threads: int = 1
    duration_ms: float = 0.0
    nodes_expanded: int = 0
    nodes_generated: int = 0
    nodes_pruned_policy: int = 0
    nodes_pruned_dominance: int = 0
    total_cost: Optional[int] = None
    popped_costs: Optional[list] = field(default=None, repr=False)

    def merge_counts(self, other: "SearchStats") -> None:
        self.nodes_expanded += other.nodes_expanded
        self.nodes_generated += other.nodes_generated
        self.nodes_pruned_policy += other.nodes_pruned_policy
        self.nodes_pruned_dominance += other.nodes_pruned_dominance


class SearchSpace:
    """Successor generation with policy pruning; no frontier logic here."""

    def __init__(self, problem: ScheduleProblem, check: bool = True):
        if check:
            issues = validate_problem(problem)
            if issues:
                raise InvalidProblemError("; ".join(str(v) for v in issues))
        self.problem = problem
        grid = problem.grid
        self.horizon = grid.horizon_slots
        dt = grid.slot_duration
        self.devices = problem.devices
        self.policies = [d.policy for d in self.devices]
        self.state_ids = [d.state_ids for d in self.devices]
        self.energy = [[energy_micro_kwh(s.power, dt) for s in d.states] for d in self.devices]
        self.pricers = [SlotPricer(srcs) for srcs in problem.sources_per_slot]

        b = problem.battery
        self.battery = b
        if b is not None:
            self.b_lo, self.b_hi, self.b_start = b.min_micro, b.max_micro, b.initial_micro
            self.b_up, self.b_down = b.charge_step_micro(dt), b.discharge_step_micro(dt)
            self.b_draw, self.b_supply = b.charge_draw_micro(dt), b.discharge_supply_micro(dt)
            self.b_enforce = b.enforce_end_equals_start
            self._restore_cache: dict = {}
        self._dev_cache: dict = {}
        self._combo_cache: dict = {}
        self._bat_cache: dict = {}

    # -- identities -------------------------------------------------------

    def root(self) -> tuple[tuple, int]:
        digests = tuple(p.initial() for p in self.policies)
        charge = self.b_start if self.battery is not None else 0
        return digests, charge

    def is_goal(self, depth: int, digests: tuple, charge: int) -> bool:
        if depth != self.horizon:
            return False
        if not all(p.finished(d) for p, d in zip(self.policies, digests)):
            return False
        if self.battery is not None and self.b_enforce and charge != self.b_start:
            return False
        return True

    # -- per-dimension options ---------------------------------------------

    def device_options(self, i: int, slot: int, digest) -> tuple[list, int]:
        """Admissible ``(state_index, next_digest)`` pairs and the branching they replace."""
        key = (i, slot, digest)
        hit = self._dev_cache.get(key)
        if hit is not None:
            return hit
        policy = self.policies[i]
        forced = policy.forced_state(slot)
        candidates = range(len(self.state_ids[i]))
        if forced is not None:
            candidates = [self.state_ids[i].index(forced)]
        opts = []
        last = slot == self.horizon - 1
        for s in candidates:
            nxt = policy.step(digest, self.state_ids[i][s], slot, self.horizon)
            if nxt is None or (last and not policy.finished(nxt)):
                continue
            opts.append((s, nxt))
        hit = (opts, len(candidates))
        self._dev_cache[key] = hit
        return hit

    def _restorable(self, charge: int, remaining: int) -> bool:
        key = (charge, remaining)
        hit = self._restore_cache.get(key)
        if hit is None:
            hit = restorable(self.battery, charge, remaining, self.problem.grid.slot_duration)
            self._restore_cache[key] = hit
        return hit

    def battery_options(self, slot: int, charge: int) -> list[tuple[int, int, int]]:
        """Admissible ``(action_index, next_charge, demand_delta)`` for the battery."""
        key = (slot, charge)
        hit = self._bat_cache.get(key)
        if hit is not None:
            return hit
        remaining = self.horizon - slot - 1
        opts = []
        for a, (step, delta) in enumerate(((0, 0), (self.b_up, self.b_draw), (-self.b_down, -self.b_supply))):
            nxt = charge + step
            if not self.b_lo <= nxt <= self.b_hi:
                continue
            if self.b_enforce and not self._restorable(nxt, remaining):
                continue
            opts.append((a, nxt, delta))
        self._bat_cache[key] = opts
        return opts

    def device_combos(self, slot: int, digests: tuple) -> tuple[list, int]:
        """Cross product of device options: ``(states, next_digests, load)`` and full branching."""
        key = (slot, digests)
        hit = self._combo_cache.get(key)
        if hit is not None:
            return hit
        per_dev = []
        full = 1
        for i, d in enumerate(digests):
            opts, n = self.device_options(i, slot, d)
            full *= n
            energy = self.energy[i]
            per_dev.append([(s, nd, energy[s]) for s, nd in opts])
        combos = []
        for combo in product(*per_dev):
            combos.append(
                (
                    tuple(c[0] for c in combo),
                    tuple(c[1] for c in combo),
                    sum(c[2] for c in combo),
                )
            )
        hit = (combos, full)
        if len(self._combo_cache) >= COMBO_CACHE_LIMIT:
            self._combo_cache.clear()
        self._combo_cache[key] = hit
        return hit

    def successors(self, depth: int, digests: tuple, charge: int) -> tuple[list[tuple], int]:
        """All policy-admissible children of a node and the number pruned.

        Each child is ``(choice, digests, charge, edge_cost, activity)`` where
        ``choice`` holds the state index of every device followed by the
        battery action index.
        """
        combos, full = self.device_combos(depth, digests)
        pricer = self.pricers[depth]
        out = []
        if self.battery is None:
            for states, nd, load in combos:
                out.append((states + (0,), nd, 0, pricer(load), 0))
            return out, full - len(out)
        bat = self.battery_options(depth, charge)
        for states, nd, load in combos:
            for a, nc, delta in bat:
                demand = load + delta
                if demand < 0:
                    demand = 0
                out.append((states + (a,), nd, nc, pricer(demand), 1 if a else 0))
        return out, full * len(BATTERY_ACTIONS) - len(out)

    # -- output -------------------------------------------------------------

    def choices_to_columns(self, choices: list[tuple]) -> tuple[list[tuple[str, ...]], Optional[list[BatteryAction]]]:
        rows = []
        actions = [] if self.battery is not None else None
        for ch in choices:
            rows.append(tuple(self.state_ids[i][s] for i, s in enumerate(ch[:-1])))
            if actions is not None:
                actions.append(BATTERY_ACTIONS[ch[-1]])
        return rows, actions


@dataclass(frozen=True)
class SearchNode:
    """A schedule prefix. ``path`` is a chain of ``(choice, parent_path)`` cells."""

    depth: int
    digests: tuple
    charge: int
    cost: int
    activity: int = 0
    path: Optional[tuple] = None

    @property
    def key(self) -> tuple:
        return (self.depth, self.digests, self.charge)

    def choices(self) -> list[tuple]:
        return path_choices(self.path)


def path_choices(path: Optional[tuple]) -> list[tuple]:
    out = []
    while path is not None:
        choice, path = path
        out.append(choice)
    out.reverse()
    return out


def root_node(space: SearchSpace) -> SearchNode:
    digests, charge = space.root()
    return SearchNode(0, digests, charge, 0, 0, None)


def expand(space: SearchSpace, node: SearchNode) -> list[SearchNode]:
    """Children of ``node`` that survive policy and battery pruning."""
    if node.depth >= space.horizon:
        return []
    children, _ = space.successors(node.depth, node.digests, node.charge)
    return [
        SearchNode(node.depth + 1, nd, nc, node.cost + ec, node.activity + ea, (choice, node.path))
        for choice, nd, nc, ec, ea in children
    ]


def reconstruct(space: SearchSpace, choices: list[tuple], expected_cost: Optional[int] = None):
    """Replay a complete choice sequence into a Schedule.

    The replay goes through the dispatch module independently of the
    costs accumulated during search; a mismatch is a bug and raises.
    """
    from artifact.dispatch import evaluate_schedule

    rows, actions = space.choices_to_columns(choices)
    schedule = evaluate_schedule(space.problem, rows, actions)
    if expected_cost is not None and schedule.total_cost != expected_cost:
        raise AssertionError(
            f"replayed cost {schedule.total_cost} differs from search cost {expected_cost}"
        )
    return schedule
