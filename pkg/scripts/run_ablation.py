"""Heuristic and pruning ablation on a generated suite (run-time and expansion percentiles)."""
import argparse
import sys

from lanesched.bench import NAMED_CONFIGS, emit_report, run_benchmark
from lanesched.generate import DESK_SUITE, LARGE_SUITE, generate_suite


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", choices=("desk", "large"), default="desk")
    ap.add_argument("--count", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--time-limit", type=float, default=5.0, help="seconds per solve")
    ap.add_argument("--repetitions", type=int, default=3)
    ap.add_argument("--configs", nargs="+", choices=list(NAMED_CONFIGS), default=list(NAMED_CONFIGS))
    ap.add_argument("--csv", help="also write the CSV report here")
    args = ap.parse_args(argv)

    preset = LARGE_SUITE if args.preset == "large" else DESK_SUITE
    count = preset["count"] if args.count is None else args.count
    suite = generate_suite(preset["connections"], preset["vehicles"], count, args.seed)

    def progress(name, k, res):
        if k + 1 == count:
            print(f"  {name}: done", file=sys.stderr)

    report = run_benchmark(suite, {n: NAMED_CONFIGS[n] for n in args.configs}, args.time_limit,
                           args.repetitions, progress=progress)
    print(emit_report(report, "table"))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(emit_report(report, "csv"))


if __name__ == "__main__":
    main()
