"""Single-threaded uniform-cost search.

Two variants explore nodes in exactly the same order:

* ``memory_optimized=False`` keeps a node object per frontier entry holding
  a full copy of its assignment prefix and battery trajectory.
* ``memory_optimized=True`` keeps flat tuples and shares prefixes through
  parent links, so an expansion allocates one small cell per child.
"""

from __future__ import annotations

import time
from heapq import heappop, heappush
from typing import Optional

from artifact.domain import Schedule, ScheduleProblem
from artifact.search.space import (
    NodeBudgetExceeded,
    NoSolutionError,
    SearchSpace,
    SearchStats,
    path_choices,
    reconstruct,
)

DEFAULT_NODE_BUDGET = 50_000_000


class _Node:
    __slots__ = ("cost", "activity", "depth", "digests", "charge", "prefix", "trajectory")

    def __init__(self, cost, activity, depth, digests, charge, prefix, trajectory):
        self.cost = cost
        self.activity = activity
        self.depth = depth
        self.digests = digests
        self.charge = charge
        self.prefix = prefix
        self.trajectory = trajectory


def solve_sequential(
    problem: ScheduleProblem,
    memory_optimized: bool = True,
    *,
    dominance: bool = True,
    node_budget: int = DEFAULT_NODE_BUDGET,
    record_pops: bool = False,
    space: Optional[SearchSpace] = None,
) -> tuple[Schedule, SearchStats]:
    """Optimal schedule by uniform-cost search.

    Frontier order is ``(cost, battery activity, deeper first, insertion)``.
    With ``dominance`` enabled a child is dropped when another prefix with
    the same depth, policy digests and battery charge is at least as cheap.
    """
    space = space or SearchSpace(problem)
    stats = SearchStats(variant="memopt" if memory_optimized else "sequential", threads=1)
    if record_pops:
        stats.popped_costs = []
    start = time.perf_counter()
    run = _run_memopt if memory_optimized else _run_copying
    try:
        cost, choices = run(space, stats, dominance, node_budget)
    finally:
        stats.duration_ms = (time.perf_counter() - start) * 1000.0
    schedule = reconstruct(space, choices, cost)
    stats.total_cost = schedule.total_cost
    return schedule, stats


def _run_memopt(space: SearchSpace, stats: SearchStats, dominance: bool, budget: int):
    horizon = space.horizon
    successors = space.successors
    digests, charge = space.root()
    root_key = (0, digests, charge)
    heap = [(0, 0, 0, 0, root_key, None)]
    best = {root_key: (0, 0, 0)}
    seq = 0
    expanded = generated = pruned_policy = pruned_dom = 0
    pops = stats.popped_costs
    try:
        while heap:
            cost, act, negd, sq, key, path = heappop(heap)
            if dominance and best[key][2] != sq:
                pruned_dom += 1
                continue
            if pops is not None:
                pops.append(cost)
            depth = -negd
            if depth == horizon:
                if space.is_goal(depth, key[1], key[2]):
                    return cost, path_choices(path)
                continue
            if expanded >= budget:
                raise NodeBudgetExceeded(expanded, cost)
            expanded += 1
            children, pruned = successors(depth, key[1], key[2])
            pruned_policy += pruned
            nd = depth + 1
            nnegd = -nd
            for choice, cd, cc, ec, ea in children:
                c = cost + ec
                a = act + ea
                seq += 1
                ck = (nd, cd, cc)
                if dominance:
                    e = best.get(ck)
                    if e is not None and (e[0] < c or (e[0] == c and e[1] <= a)):
                        pruned_dom += 1
                        continue
                    best[ck] = (c, a, seq)
                generated += 1
                heappush(heap, (c, a, nnegd, seq, ck, (choice, path)))
    finally:
        stats.nodes_expanded += expanded
        stats.nodes_generated += generated
        stats.nodes_pruned_policy += pruned_policy
        stats.nodes_pruned_dominance += pruned_dom
    raise NoSolutionError("no schedule satisfies all policies")


def _run_copying(space: SearchSpace, stats: SearchStats, dominance: bool, budget: int):
    horizon = space.horizon
    digests, charge = space.root()
    root = _Node(0, 0, 0, digests, charge, [], [charge])
    heap = [(0, 0, 0, 0, root)]
    best: dict[tuple, tuple] = {(0, digests, charge): (0, 0, 0)}
    seq = 0
    pops = stats.popped_costs
    while heap:
        cost, act, _, sq, node = heappop(heap)
        key = (node.depth, node.digests, node.charge)
        if dominance and best[key][2] != sq:
            stats.nodes_pruned_dominance += 1
            continue
        if pops is not None:
            pops.append(cost)
        if node.depth == horizon:
            if space.is_goal(node.depth, node.digests, node.charge):
                return cost, list(node.prefix)
            continue
        if stats.nodes_expanded >= budget:
            raise NodeBudgetExceeded(stats.nodes_expanded, cost)
        stats.nodes_expanded += 1
        children, pruned = space.successors(node.depth, node.digests, node.charge)
        stats.nodes_pruned_policy += pruned
        nd = node.depth + 1
        for choice, cd, cc, ec, ea in children:
            c = cost + ec
            a = act + ea
            seq += 1
            ck = (nd, cd, cc)
            if dominance:
                e = best.get(ck)
                if e is not None and (e[0], e[1]) <= (c, a):
                    stats.nodes_pruned_dominance += 1
                    continue
                best[ck] = (c, a, seq)
            child = _Node(c, a, nd, cd, cc, node.prefix + [choice], node.trajectory + [cc])
            stats.nodes_generated += 1
            heappush(heap, (c, a, -nd, seq, child))
    raise NoSolutionError("no schedule satisfies all policies")
