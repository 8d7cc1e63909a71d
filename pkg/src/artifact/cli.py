"""Command-line entry point.

Every subcommand prints machine-readable ``key=value`` summary lines on
stdout and diagnostics on stderr. Exit codes:

    0  success
    2  bad input (missing or malformed file, bad flag)
    3  problem fails validation
    4  no feasible schedule
    5  node budget exhausted
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from artifact.domain import validate_problem
from artifact.energy import estimate_generation, generate_prosumers
from artifact.ingestion import (
    InputError,
    cluster_power_states,
    kmeans_1d,
    load_scenario,
    load_trace,
    read_config,
    resolve_path,
    scenario_inputs,
    write_schedule,
)
from artifact.search.benchmark import VARIANTS, benchmark, run_once, write_csv
from artifact.search.parallel import DEFAULT_MERGE_THRESHOLD
from artifact.search.sequential import DEFAULT_NODE_BUDGET
from artifact.search.space import InvalidProblemError, NodeBudgetExceeded, NoSolutionError
from artifact.units import format_micro

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVALID = 3
EXIT_INFEASIBLE = 4
EXIT_BUDGET = 5

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _summary(**fields) -> None:
    print(" ".join(f"{k}={v}" for k, v in fields.items()))


def _err(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def cmd_schedule(args) -> int:
    problem = load_scenario(args.scenario, with_battery=not args.no_battery, seed=args.seed)
    opts = {}
    if args.solver != "oracle":
        opts["node_budget"] = args.node_budget
    if args.solver == "parallel":
        opts["merge_threshold"] = args.merge_threshold
    schedule, stats = run_once(problem, args.solver, args.threads, **opts)
    if args.out:
        write_schedule(
            schedule,
            args.out,
            problem.grid,
            {
                "scenario_id": problem.name,
                "solver": args.solver,
                "threads": stats.threads,
                "duration_ms": round(stats.duration_ms, 3),
                "nodes_expanded": stats.nodes_expanded,
                "battery": problem.battery is not None,
            },
        )
    _summary(
        status="ok",
        scenario=problem.name,
        solver=args.solver,
        threads=stats.threads,
        battery=str(problem.battery is not None).lower(),
        total_cost=format_micro(schedule.total_cost),
        total_cost_micro=schedule.total_cost,
        duration_ms=f"{stats.duration_ms:.1f}",
        nodes_expanded=stats.nodes_expanded,
        nodes_pruned_policy=stats.nodes_pruned_policy,
        nodes_pruned_dominance=stats.nodes_pruned_dominance,
        battery_activity=schedule.battery_activity,
        out=args.out or "-",
    )
    return EXIT_OK


def load_matrix(path) -> tuple[list, dict]:
    """Bench matrix: top-level ``variants``, ``threads``, ``iterations`` and
    ``[[instances]]`` tables with ``scenario`` (relative to the matrix),
    optional ``id`` and ``battery``."""
    path = resolve_path(path)
    try:
        data = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise InputError(f"bench matrix {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    problems = []
    for i, inst in enumerate(data.get("instances", [])):
        if "scenario" not in inst:
            raise InputError(f"{path}: instances[{i}] has no scenario")
        scenario = inst["scenario"]
        scen_path = scenario if str(scenario).startswith("bundled:") else path.parent / scenario
        problem = load_scenario(scen_path, with_battery=inst.get("battery", True))
        problems.append((inst.get("id", problem.name), problem))
    settings = {
        "variants": tuple(data.get("variants", ("memopt",))),
        "thread_counts": tuple(data.get("threads", (1,))),
        "iterations": int(data.get("iterations", 10)),
    }
    unknown = [v for v in settings["variants"] if v not in VARIANTS]
    if unknown:
        raise InputError(f"{path}: unknown variants {unknown}")
    return problems, settings


def cmd_bench(args) -> int:
    problems, settings = load_matrix(args.matrix)
    if args.iterations is not None:
        settings["iterations"] = args.iterations
    rows = benchmark(problems, **settings)
    out = Path(args.out)
    with out.open("w", newline="") as fh:
        write_csv(rows, fh)
    failed = sum(1 for r in rows if r.error)
    _summary(status="ok", rows=len(rows), failed=failed, out=out)
    return EXIT_OK


def cmd_gen_prosumers(args) -> int:
    config = read_config(resolve_path(args.scenario))
    model = config.prosumers
    if args.seed is not None:
        model = replace(model, rng_seed=args.seed)
    _, prices = scenario_inputs(config)
    offers = generate_prosumers(model, prices)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["slot", "source_id", "cost", "energy_kwh", "grid_price"])
        for t, slot in enumerate(offers):
            for src in slot:
                w.writerow([t, src.source_id, f"{src.cost:.6f}", f"{src.energy:.6f}", f"{prices[t]:.6f}"])
    _summary(status="ok", slots=len(offers), offers=sum(len(s) for s in offers), seed=model.rng_seed, out=args.out)
    return EXIT_OK


def cmd_predict_gen(args) -> int:
    config = read_config(resolve_path(args.scenario))
    weather, prices = scenario_inputs(config)
    estimates = estimate_generation(config.grid, weather, config.turbine, config.panel)
    wind_cost = config.turbine.unit_cost if config.turbine else ""
    pv_cost = config.panel.unit_cost if config.panel else ""
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["slot", "start", "air_density", "wind_w", "pv_w", "wind_kwh", "pv_kwh", "wind_cost", "pv_cost", "grid_price"]
        )
        for e in estimates:
            w.writerow(
                [
                    e.slot,
                    config.grid.slot_start(e.slot).strftime("%Y-%m-%dT%H:%M:%SZ"),
                    f"{e.air_density:.5f}",
                    f"{e.wind_w:.3f}",
                    f"{e.pv_w:.3f}",
                    f"{e.wind_kwh:.6f}",
                    f"{e.pv_kwh:.6f}",
                    wind_cost,
                    pv_cost,
                    f"{prices[e.slot]:.6f}",
                ]
            )
    _summary(
        status="ok",
        slots=len(estimates),
        wind_kwh=f"{sum(e.wind_kwh for e in estimates):.4f}",
        pv_kwh=f"{sum(e.pv_kwh for e in estimates):.4f}",
        out=args.out,
    )
    return EXIT_OK


def cmd_profile_device(args) -> int:
    trace = load_trace(args.trace)
    result = kmeans_1d(trace.watts, args.k)
    states = cluster_power_states(trace, args.k)
    if args.out:
        doc = {"device_id": trace.device_id, "states": [{"state_id": s.state_id, "power_w": round(s.power, 4)} for s in states]}
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    _summary(
        status="ok",
        device=trace.device_id,
        samples=len(trace.watts),
        centroids=",".join(f"{c:.4f}" for c in result.centroids),
        boundaries=",".join(f"{b:.4f}" for b in result.boundaries),
        iterations=result.iterations,
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    problem = load_scenario(args.scenario, with_battery=not args.no_battery)
    issues = validate_problem(problem)
    for v in issues:
        print(f"violation {v}", file=sys.stderr)
    _summary(
        status="ok" if not issues else "invalid",
        scenario=problem.name,
        devices=len(problem.devices),
        slots=problem.grid.horizon_slots,
        battery=str(problem.battery is not None).lower(),
        violations=len(issues),
    )
    return EXIT_OK if not issues else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artifact", description="Day-ahead device scheduling over mixed energy sources.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", help="compute an optimal schedule for a scenario")
    p.add_argument("--scenario", required=True, help="scenario TOML, or bundled:NAME")
    p.add_argument("--solver", choices=VARIANTS, default="memopt")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="override the prosumer seed")
    p.add_argument("--out", default=None, help="schedule JSON path")
    p.add_argument("--no-battery", action="store_true", help="drop the scenario battery")
    p.add_argument("--merge-threshold", type=int, default=DEFAULT_MERGE_THRESHOLD)
    p.add_argument("--node-budget", type=int, default=DEFAULT_NODE_BUDGET)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("bench", help="run a benchmark matrix and write CSV")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int, default=None, help="override the matrix iteration count")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-prosumers", help="sample prosumer offers for a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_prosumers)

    p = sub.add_parser("predict-gen", help="per-slot wind and PV estimates")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict_gen)

    p = sub.add_parser("profile-device", help="cluster a power trace into states")
    p.add_argument("--trace", required=True, help="CSV with timestamp,watts")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--out", default=None, help="device states JSON")
    p.set_defaults(func=cmd_profile_device)

    p = sub.add_parser("validate", help="check a scenario without solving it")
    p.add_argument("--scenario", required=True)
    p.add_argument("--no-battery", action="store_true")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        _err("--threads must be >= 1")
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except InvalidProblemError as exc:
        _err(f"invalid problem: {exc}")
        return EXIT_INVALID
    except NoSolutionError as exc:
        _err(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    except NodeBudgetExceeded as exc:
        _err(str(exc))
        return EXIT_BUDGET
    except (ValueError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
