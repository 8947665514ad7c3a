"""Command-line interface: ``lanesched {solve,oracle,gen,bench,sim}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, generate, sim
from .domain import ValidationError, validate_plan
from .instance_io import parse_instance
from .oracle import OracleTooLarge, brute_force_optimal
from .search import CHECK_PRESETS, ContractError, InvariantError, SearchConfig, a_star

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_INVARIANT = 0, 1, 2, 3

CHECK_CHOICES = ("all", "dominance", "minmax", "dominance-minmax", "none")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _search_flags(p, time_limit=None):
    p.add_argument("--heuristic", choices=("pdwspt", "eris", "none"), default="pdwspt")
    p.add_argument("--checks", choices=CHECK_CHOICES, default="dominance-minmax")
    p.add_argument("--time-limit-ms", type=float, default=time_limit)
    p.add_argument("--max-expansions", type=int, default=None)
    p.add_argument("--no-cycle", action="store_true", help="lift the stage-cycle constraint")
    p.add_argument("--h-sat", type=float, default=2.0, help="saturation headway (s)")


def _config(args) -> SearchConfig:
    return SearchConfig(args.heuristic, CHECK_PRESETS[args.checks], args.time_limit_ms, args.max_expansions,
                        args.h_sat, False if args.no_cycle else None)


def _write(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    inst = parse_instance(args.instance)
    problems = validate_plan(inst.plan)
    if problems:
        raise ValidationError("; ".join(problems))
    schedule, stats = a_star(inst, _config(args))
    doc = {
        "total_delay": schedule.total_delay,
        "optimal": stats.optimal,
        "expansions": stats.expansions,
        "generated": stats.generated,
        "wall_time_ms": stats.wall_time * 1000.0,
        "entries": [{"connection": e.connection, "first": e.first, "end": e.end, "stage": e.stage,
                     "start": e.start, "finish": e.finish, "max_exceeded": e.max_exceeded}
                    for e in schedule.entries],
        "segments": [{"stage": inst.plan.stages[s.stage].id, "green_start": s.green_start,
                      "green_end": s.green_end, "max_exceeded": s.max_exceeded} for s in schedule.segments],
    }
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = parse_instance(args.instance)
    if args.no_cycle:
        inst = inst.with_plan(inst.plan.with_cycle(False))
    res = brute_force_optimal(inst, args.max_states, args.h_sat)
    doc = {"optimal_delay": res.optimal_delay, "explored": res.explored,
           "sequence": [list(x) for x in res.optimal_sequence]}
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    preset = generate.LARGE_SUITE if args.preset == "large" else generate.DESK_SUITE
    count = preset["count"] if args.count is None else args.count
    suite = generate.generate_suite(tuple(args.connections or preset["connections"]),
                                    tuple(args.vehicles or preset["vehicles"]), count, args.seed,
                                    cycle_enforced=not args.no_cycle)
    paths = generate.write_suite(suite, args.out)
    print(f"wrote {len(paths)} instances to {args.out}")
    return EXIT_OK


def _load_suite(path):
    p = Path(path)
    files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    return [parse_instance(f) for f in files]


def cmd_bench(args) -> int:
    if args.suite:
        suite = _load_suite(args.suite)
    else:
        suite = generate.generate_suite(count=args.count, seed=args.seed)
    names = args.configs or list(bench.NAMED_CONFIGS)
    configs = {n: bench.NAMED_CONFIGS[n] for n in names}
    report = bench.run_benchmark(suite, configs, args.time_limit_ms / 1000.0, args.repetitions,
                                 lift_cycle=not args.keep_cycle)
    _write(bench.emit_report(report, args.format), args.out)
    return EXIT_OK


def cmd_sim(args) -> int:
    if args.scenario:
        sc = sim.load_scenario(args.scenario)
    else:
        net = sim.PRESETS[args.preset](level=args.demand, cycle_enforced=not args.no_cycle)
        sc = sim.Scenario(net, [], args.duration, tuple(range(args.seed, args.seed + args.runs)))
    policy_names = args.policy.split(",") if args.policy else [None]
    rows = []
    run = 0
    for name in policy_names:
        if name is None and sc.policies:
            policies, label = sc.policies, sc.policies[0].name
        else:
            spec = _sim_policy(name or "pdwspt", args)
            policies, label = spec, spec.name
        for seed in sc.seeds:
            m = sim.run_scenario(sc.net, policies, sc.duration, seed)
            rows.extend(sim.metrics_rows(m, run, seed, label))
            run += 1
    if args.format == "csv":
        _write(sim.metrics_csv(rows), args.out)
    else:
        lines = [f"{'policy':10s} {'seed':>4s} {'where':>8s} {'delay':>8s} {'stops':>6s} {'veh':>6s}"]
        for r in rows:
            lines.append(f"{r[2]:10s} {r[1]:4d} {r[3]:>8s} {r[4]:8.2f} {r[6]:6.3f} {r[8]:6d}")
        _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _sim_policy(name: str, args) -> sim.PolicySpec:
    if name in ("fixed", "actuated"):
        return sim.PolicySpec(name)
    if name not in ("pdwspt", "eris", "none", "dijkstra"):
        raise ValidationError(f"unknown policy {name!r}")
    heuristic = "none" if name == "dijkstra" else name
    budget = None if args.max_expansions else args.time_limit_ms
    cfg = SearchConfig(heuristic, CHECK_PRESETS[args.checks], budget, args.max_expansions)
    return sim.PolicySpec("astar", cfg)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lanesched", description="Lane-based intersection scheduling with A* search.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("instance")
    _search_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="exhaustive optimum of a small instance")
    p.add_argument("instance")
    p.add_argument("--max-states", type=int, default=2_000_000)
    p.add_argument("--no-cycle", action="store_true")
    p.add_argument("--h-sat", type=float, default=2.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="write a seeded instance suite")
    p.add_argument("--preset", choices=("desk", "large"), default="desk")
    p.add_argument("--count", type=int)
    p.add_argument("--connections", type=int, nargs=2, metavar=("MIN", "MAX"))
    p.add_argument("--vehicles", type=int, nargs=2, metavar=("MIN", "MAX"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-cycle", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run the timing and expansion ablation")
    p.add_argument("--suite", help="instance file or directory (default: generated desk suite)")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--configs", nargs="+", choices=list(bench.NAMED_CONFIGS), metavar="NAME",
                   help="configuration names, e.g. 'PDWSPT+D,M' Dijkstra (default: all)")
    p.add_argument("--time-limit-ms", type=float, default=5000.0)
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--keep-cycle", action="store_true", help="do not lift the cycle constraint")
    p.add_argument("--format", choices=("csv", "table"), default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sim", help="closed-loop simulation")
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--preset", choices=sorted(sim.PRESETS), default="single")
    p.add_argument("--demand", choices=("high", "low"), default="high")
    p.add_argument("--policy", help="comma-separated: pdwspt,eris,dijkstra,fixed,actuated")
    p.add_argument("--checks", choices=CHECK_CHOICES, default="dominance-minmax")
    p.add_argument("--time-limit-ms", type=float, default=2000.0)
    p.add_argument("--max-expansions", type=int, help="deterministic budget instead of wall-clock")
    p.add_argument("--duration", type=float, default=900.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--no-cycle", action="store_true")
    p.add_argument("--format", choices=("csv", "table"), default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sim)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OracleTooLarge, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InvariantError, ContractError, sim.InvariantViolation) as e:
        print(f"internal invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
