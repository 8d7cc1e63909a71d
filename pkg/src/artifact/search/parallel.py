"""Parallel uniform-cost search with a shared global frontier.

The calling process acts as coordinator: it owns the global priority queue
and the global dominance map, and is the only place either is mutated.
Workers are forked processes, each with a private local queue and local
dominance map. A worker

* takes a batch of seed nodes from the global queue when it is idle, along
  with the cost of the cheapest node left behind,
* expands best-first locally, pruning by policy and by its dominance map,
* hands its whole local queue (and its dominance updates) back to the
  coordinator once the queue grows past ``merge_threshold`` or its cheapest
  node costs more than the bound it was seeded with,
* reports a goal as a candidate and stops.

The bound keeps speculative expansion close to the sequential order; with
one worker the expansion order is exactly that of the sequential search.

A candidate is only accepted at a quiescent point: every worker is asked to
flush its local queue into the global one, and the candidate wins if no
frontier node anywhere is cheaper. Otherwise it is pushed back and the
search resumes.

Frontier entries are ``(cost, activity, -depth, worker, seq, key, link)``;
``(worker, seq)`` names a node uniquely across processes and ``link`` is
``(choice, parent_id)``. Shipping whole prefixes with every node would
dominate the message volume, so workers instead report the link of each
node they expand and the coordinator rebuilds the winning prefix from those.
"""

from __future__ import annotations

import multiprocessing as mp
import time
from heapq import heappop, heappush
from multiprocessing.connection import wait
from typing import Optional

from artifact.domain import Schedule, ScheduleProblem
from artifact.search.sequential import DEFAULT_NODE_BUDGET
from artifact.search.space import (
    NodeBudgetExceeded,
    NoSolutionError,
    SearchSpace,
    SearchStats,
    reconstruct,
)

DEFAULT_MERGE_THRESHOLD = 64

_SEED, _FLUSH, _STOP = "seed", "flush", "stop"
_NEED, _GOAL, _FLUSHED, _STATS = "need", "goal", "flushed", "stats"


def _entry(node: tuple) -> tuple:
    return (node[0], node[1], node[3], node[4])


def _worker(
    wid: int,
    space: SearchSpace,
    conn,
    threshold: int,
    merge_when_small: bool,
    dominance: bool,
) -> None:
    horizon = space.horizon
    successors = space.successors
    local: list = []
    best: dict = {}
    dirty: dict = {}
    links: list = []
    seq = 0
    bound = None
    counts = [0, 0, 0, 0]  # expanded, generated, pruned_policy, pruned_dominance
    running = False

    def hand_over(kind, *head):
        nonlocal local, dirty, links
        conn.send((kind, *head, local, dirty, links, counts))
        local, dirty, links = [], {}, []

    while True:
        if not running:
            msg = conn.recv()
            if msg[0] == _SEED:
                _, seeds, bound = msg
                for node in seeds:
                    entry = _entry(node)
                    e = best.get(node[5])
                    if e is None or entry <= e:
                        best[node[5]] = entry
                    heappush(local, node)
                running = True
            elif msg[0] == _FLUSH:
                hand_over(_FLUSHED)
            else:
                conn.send((_STATS, counts))
                return
            continue

        if conn.poll():
            msg = conn.recv()
            if msg[0] == _FLUSH:
                hand_over(_FLUSHED)
                running = False
                continue
            conn.send((_STATS, counts))
            return
        if not local or (bound is not None and (local[0][0], local[0][1]) > bound):
            hand_over(_NEED)
            running = False
            continue

        node = heappop(local)
        cost, act, negd, nw, nseq, key, link = node
        if dominance and best.get(key) != _entry(node):
            counts[3] += 1
            continue
        depth = -negd
        if depth == horizon:
            if space.is_goal(depth, key[1], key[2]):
                hand_over(_GOAL, node)
                running = False
            continue

        counts[0] += 1
        nid = (nw, nseq)
        links.append((nid, link))
        children, pruned = successors(depth, key[1], key[2])
        counts[2] += pruned
        nd = depth + 1
        for choice, cd, cc, ec, ea in children:
            c = cost + ec
            a = act + ea
            seq += 1
            ck = (nd, cd, cc)
            if dominance:
                entry = (c, a, wid, seq)
                e = best.get(ck)
                if e is not None and e <= entry:
                    counts[3] += 1
                    continue
                best[ck] = entry
                dirty[ck] = entry
            counts[1] += 1
            heappush(local, (c, a, -nd, wid, seq, ck, (choice, nid)))

        size = len(local)
        if (size <= threshold) if merge_when_small else (size > threshold):
            hand_over(_NEED)
            running = False


class _Coordinator:
    def __init__(self, conns, dominance: bool, budget: int, batch: int):
        self.conns = conns
        self.batch = batch
        self.index = {c: i for i, c in enumerate(conns)}
        self.dominance = dominance
        self.budget = budget
        self.frontier: list = []
        self.best: dict = {}
        self.idle = set(range(len(conns)))
        self.candidates: list = []
        self.counts = [[0, 0, 0, 0] for _ in conns]
        self.links: dict = {}
        self.pruned_dominance = 0

    @property
    def expanded(self) -> int:
        return sum(c[0] for c in self.counts)

    def push(self, node) -> None:
        entry = _entry(node)
        key = node[5]
        if self.dominance:
            e = self.best.get(key)
            if e is not None and e < entry:
                self.pruned_dominance += 1
                return
            self.best[key] = entry
        heappush(self.frontier, node)

    def integrate(self, nodes, updates) -> None:
        best = self.best
        for key, entry in updates.items():
            e = best.get(key)
            if e is None or entry < e:
                best[key] = entry
        for node in nodes:
            self.push(node)

    def pop_valid(self, remove: bool = True):
        frontier, best = self.frontier, self.best
        while frontier:
            node = frontier[0]
            if self.dominance and best.get(node[5]) != _entry(node):
                heappop(frontier)
                self.pruned_dominance += 1
                continue
            return heappop(frontier) if remove else node
        return None

    def handle(self, conn, msg) -> None:
        w = self.index[conn]
        kind = msg[0]
        if kind == _GOAL:
            _, node, nodes, updates, links, counts = msg
            self.candidates.append(node)
        else:
            _, nodes, updates, links, counts = msg
        self.counts[w] = list(counts)
        self.links.update(links)
        self.integrate(nodes, updates)
        if kind in (_NEED, _GOAL):
            self.idle.add(w)
        if self.expanded > self.budget:
            raise NodeBudgetExceeded(self.expanded, None if not self.frontier else self.frontier[0][0])

    def barrier(self) -> None:
        """Bring every worker to rest with its local queue merged in."""
        pending = set(range(len(self.conns)))
        for conn in self.conns:
            conn.send((_FLUSH,))
        while pending:
            for conn in wait([self.conns[i] for i in pending]):
                msg = conn.recv()
                self.handle(conn, msg)
                if msg[0] == _FLUSHED:
                    pending.discard(self.index[conn])
        self.idle = set(range(len(self.conns)))

    def run(self):
        while True:
            while self.idle:
                seeds = []
                while len(seeds) < self.batch:
                    node = self.pop_valid()
                    if node is None:
                        break
                    seeds.append(node)
                if not seeds:
                    break
                top = self.pop_valid(remove=False)
                bound = None if top is None else (top[0], top[1])
                w = min(self.idle)
                self.idle.discard(w)
                self.conns[w].send((_SEED, seeds, bound))
            if len(self.idle) == len(self.conns) and not self.candidates:
                raise NoSolutionError("no schedule satisfies all policies")
            for conn in wait([self.conns[i] for i in range(len(self.conns)) if i not in self.idle]):
                self.handle(conn, conn.recv())
            if self.candidates:
                self.barrier()
                self.candidates.sort(key=_entry)
                goal, rest = self.candidates[0], self.candidates[1:]
                self.candidates = []
                for node in rest:
                    heappush(self.frontier, node)
                top = self.pop_valid(remove=False)
                if top is None or (goal[0], goal[1]) <= (top[0], top[1]):
                    return goal
                heappush(self.frontier, goal)

    def choices(self, goal) -> list[tuple]:
        out = []
        link = goal[6]
        while link is not None:
            choice, parent = link
            out.append(choice)
            link = self.links[parent]
        out.reverse()
        return out

    def shutdown(self) -> None:
        for i, conn in enumerate(self.conns):
            try:
                conn.send((_STOP,))
            except (BrokenPipeError, OSError):
                continue
        for i, conn in enumerate(self.conns):
            try:
                while True:
                    msg = conn.recv()
                    if msg[0] == _STATS:
                        self.counts[i] = list(msg[1])
                        break
            except (EOFError, OSError):
                continue


def solve_parallel(
    problem: ScheduleProblem,
    threads: int = 4,
    *,
    merge_threshold: int = DEFAULT_MERGE_THRESHOLD,
    merge_when_small: bool = False,
    seed_batch: Optional[int] = None,
    dominance: bool = True,
    node_budget: int = DEFAULT_NODE_BUDGET,
    space: Optional[SearchSpace] = None,
) -> tuple[Schedule, SearchStats]:
    """Optimal schedule using ``threads`` worker processes.

    ``merge_when_small`` selects the literal reading of the merge rule
    (hand the local queue over while it is at most ``merge_threshold``
    long) instead of the default (hand it over once it exceeds it).
    ``seed_batch`` is the number of global nodes handed to an idle worker
    at once, a quarter of the merge threshold unless given.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    space = space or SearchSpace(problem)
    stats = SearchStats(variant="parallel", threads=threads)
    start = time.perf_counter()
    ctx = mp.get_context("fork")
    pipes = [ctx.Pipe() for _ in range(threads)]
    procs = [
        ctx.Process(
            target=_worker,
            args=(w, space, pipes[w][1], merge_threshold, merge_when_small, dominance),
            daemon=True,
        )
        for w in range(threads)
    ]
    for p in procs:
        p.start()
    for _, child_end in pipes:
        child_end.close()
    batch = seed_batch or max(1, merge_threshold // 4)
    coord = _Coordinator([parent for parent, _ in pipes], dominance, node_budget, batch)
    digests, charge = space.root()
    coord.push((0, 0, 0, -1, 0, (0, digests, charge), None))
    coord.links[(-1, 0)] = None
    try:
        goal = coord.run()
    finally:
        coord.shutdown()
        for p in procs:
            p.join(timeout=5)
            if p.is_alive():
                p.terminate()
        for parent, _ in pipes:
            parent.close()
        for c in coord.counts:
            stats.nodes_expanded += c[0]
            stats.nodes_generated += c[1]
            stats.nodes_pruned_policy += c[2]
            stats.nodes_pruned_dominance += c[3]
        stats.nodes_pruned_dominance += coord.pruned_dominance
        stats.duration_ms = (time.perf_counter() - start) * 1000.0
    schedule = reconstruct(space, coord.choices(goal), goal[0])
    stats.total_cost = schedule.total_cost
    return schedule, stats
