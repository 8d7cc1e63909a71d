"""Repeated timed runs of the solvers, written out as CSV.

One row per run. ``duration_ms`` is that run's wall time; the
``iterations_mean`` and ``iterations_stddev`` columns repeat the mean and
sample standard deviation of ``duration_ms`` over all iterations of the same
(instance, variant, threads) group so each row is self-contained for
plotting.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO

from artifact.domain import ScheduleProblem
from artifact.search.oracle import solve_oracle
from artifact.search.parallel import solve_parallel
from artifact.search.sequential import solve_sequential
from artifact.search.space import SearchSpace, SearchStats

CSV_COLUMNS = (
    "instance_id",
    "variant",
    "threads",
    "duration_ms",
    "nodes_expanded",
    "nodes_pruned_policy",
    "nodes_pruned_dominance",
    "total_cost",
    "iterations_mean",
    "iterations_stddev",
    "error",
)
VARIANTS = ("oracle", "sequential", "memopt", "parallel")


@dataclass
class BenchRow:
    instance_id: str
    variant: str
    threads: int
    iteration: int
    stats: Optional[SearchStats] = None
    error: str = ""
    iterations_mean: float = 0.0
    iterations_stddev: float = 0.0

    def as_dict(self) -> dict:
        s = self.stats
        return {
            "instance_id": self.instance_id,
            "variant": self.variant,
            "threads": self.threads,
            "duration_ms": f"{s.duration_ms:.3f}" if s else "",
            "nodes_expanded": s.nodes_expanded if s else "",
            "nodes_pruned_policy": s.nodes_pruned_policy if s else "",
            "nodes_pruned_dominance": s.nodes_pruned_dominance if s else "",
            "total_cost": s.total_cost if s else "",
            "iterations_mean": f"{self.iterations_mean:.3f}",
            "iterations_stddev": f"{self.iterations_stddev:.3f}",
            "error": self.error,
        }


@dataclass
class GroupSummary:
    instance_id: str
    variant: str
    threads: int
    durations_ms: list[float] = field(default_factory=list)
    nodes_expanded: list[int] = field(default_factory=list)
    total_costs: set = field(default_factory=set)
    errors: int = 0

    @property
    def median_ms(self) -> float:
        return statistics.median(self.durations_ms) if self.durations_ms else float("nan")

    @property
    def mean_nodes(self) -> float:
        return statistics.fmean(self.nodes_expanded) if self.nodes_expanded else float("nan")


def run_once(problem: ScheduleProblem, variant: str, threads: int = 1, space: Optional[SearchSpace] = None, **opts):
    if variant == "oracle":
        return solve_oracle(problem)
    if variant == "sequential":
        return solve_sequential(problem, memory_optimized=False, space=space, **opts)
    if variant == "memopt":
        return solve_sequential(problem, memory_optimized=True, space=space, **opts)
    if variant == "parallel":
        return solve_parallel(problem, threads, space=space, **opts)
    raise ValueError(f"unknown solver variant {variant!r}; expected one of {', '.join(VARIANTS)}")


def benchmark(
    problems: Iterable[tuple[str, ScheduleProblem]],
    variants: Sequence[str] = ("memopt",),
    thread_counts: Sequence[int] = (1,),
    iterations: int = 10,
    **opts,
) -> list[BenchRow]:
    """Run every (instance, variant, thread count) ``iterations`` times.

    Thread counts only apply to the parallel variant; other variants run
    once per iteration with ``threads=1``. A failing run is recorded in its
    row and the remaining runs continue.
    """
    rows: list[BenchRow] = []
    for instance_id, problem in problems:
        for variant in variants:
            counts = thread_counts if variant == "parallel" else (1,)
            for threads in counts:
                group = []
                for it in range(iterations):
                    row = BenchRow(instance_id, variant, threads, it)
                    try:
                        # a fresh space per run so caches do not flatter later iterations
                        space = None if variant == "oracle" else SearchSpace(problem)
                        _, row.stats = run_once(problem, variant, threads, space=space, **opts)
                    except Exception as exc:  # recorded per row; the matrix keeps going
                        row.error = f"{type(exc).__name__}: {exc}"
                    group.append(row)
                durations = [r.stats.duration_ms for r in group if r.stats]
                mean = statistics.fmean(durations) if durations else 0.0
                sd = statistics.stdev(durations) if len(durations) > 1 else 0.0
                for r in group:
                    r.iterations_mean, r.iterations_stddev = mean, sd
                rows.extend(group)
    return rows


def summarize(rows: Iterable[BenchRow]) -> dict[tuple[str, str, int], GroupSummary]:
    out: dict[tuple[str, str, int], GroupSummary] = {}
    for r in rows:
        key = (r.instance_id, r.variant, r.threads)
        g = out.setdefault(key, GroupSummary(*key))
        if r.stats is None:
            g.errors += 1
            continue
        g.durations_ms.append(r.stats.duration_ms)
        g.nodes_expanded.append(r.stats.nodes_expanded)
        g.total_costs.add(r.stats.total_cost)
    return out


def write_csv(rows: Iterable[BenchRow], stream: TextIO) -> None:
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for r in rows:
        writer.writerow(r.as_dict())
