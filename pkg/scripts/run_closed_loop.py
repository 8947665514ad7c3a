"""Closed-loop comparison of signal policies (average delay and stops, mean and std over seeds)."""
import argparse
import statistics

from lanesched.search import SearchConfig
from lanesched.sim import PolicySpec, corridor, metrics_csv, metrics_rows, run_scenario, single_intersection


def policies(budget, time_limit_ms):
    def planner(h):
        if budget:
            return SearchConfig(h, max_expansions=budget)
        return SearchConfig(h, time_limit_ms=time_limit_ms)
    return {
        "PDWSPT": PolicySpec("astar", planner("pdwspt")),
        "ERIS": PolicySpec("astar", planner("eris")),
        "Dijkstra": PolicySpec("astar", planner("none")),
        "Actuation": PolicySpec("actuated"),
        "FixedTime": PolicySpec("fixed"),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--network", choices=("single", "corridor"), default="single")
    ap.add_argument("--intersections", type=int, default=3, help="corridor length")
    ap.add_argument("--duration", type=float, default=900.0)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--budget", type=int, default=5000, help="state updates per replan (0 = wall clock)")
    ap.add_argument("--time-limit-ms", type=float, default=2000.0)
    ap.add_argument("--only", nargs="+", help="subset of policy names")
    ap.add_argument("--csv", help="per-run metrics CSV")
    args = ap.parse_args(argv)

    rows = []
    run = 0
    print(f"{'demand':6s} {'policy':10s} {'delay (s)':>16s} {'stops':>14s}")
    for level in ("high", "low"):
        net = single_intersection(level) if args.network == "single" else corridor(args.intersections, level)
        for name, spec in policies(args.budget, args.time_limit_ms).items():
            if args.only and name not in args.only:
                continue
            ms = []
            for seed in range(args.seeds):
                m = run_scenario(net, spec, args.duration, seed)
                ms.append(m)
                rows.extend(metrics_rows(m, run, seed, f"{name}-{level}"))
                run += 1
            d = [m.avg_delay for m in ms]
            s = [m.avg_stops for m in ms]
            sd = statistics.stdev(d) if len(d) > 1 else 0.0
            ss = statistics.stdev(s) if len(s) > 1 else 0.0
            print(f"{level:6s} {name:10s} {statistics.fmean(d):8.2f} ± {sd:5.2f} "
                  f"{statistics.fmean(s):7.3f} ± {ss:5.3f}", flush=True)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(metrics_csv(rows))


if __name__ == "__main__":
    main()
