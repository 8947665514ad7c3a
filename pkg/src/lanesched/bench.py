"""Timing and expansion benchmark over instance suites."""
from __future__ import annotations

import csv
import io
import math
import statistics
import time
from dataclasses import dataclass, field

from .search import SearchConfig, a_star

NAMED_CONFIGS = {
    "PDWSPT+D,M": ("pdwspt", "dominance-minmax"),
    "ERIS+D,M": ("eris", "dominance-minmax"),
    "PDWSPT+D": ("pdwspt", "dominance"),
    "ERIS+D": ("eris", "dominance"),
    "PDWSPT": ("pdwspt", "none"),
    "ERIS": ("eris", "none"),
    "Dijkstra+D,M": ("none", "dominance-minmax"),
    "Dijkstra": ("none", "none"),
}

PERCENTILES = (25, 50, 75, 95)
COLUMNS = (["config", "instances", "failures", "optimal"]
           + ["time_mean_ms"] + [f"time_p{p}_ms" for p in PERCENTILES]
           + ["exp_mean"] + [f"exp_p{p}" for p in PERCENTILES])


def percentile(values, p: int) -> float:
    """Linear-interpolation percentile (the "inclusive" quantile method)."""
    xs = list(values)
    if not xs:
        return math.nan
    if len(xs) == 1:
        return float(xs[0])
    return statistics.quantiles(xs, n=100, method="inclusive")[p - 1]


@dataclass
class BenchRow:
    config: str
    instances: int = 0
    failures: int = 0
    optimal: int = 0
    time_mean_ms: float = math.nan
    time_pct_ms: tuple = ()
    exp_mean: float = math.nan
    exp_pct: tuple = ()

    def values(self) -> list:
        return ([self.config, self.instances, self.failures, self.optimal, self.time_mean_ms]
                + list(self.time_pct_ms) + [self.exp_mean] + list(self.exp_pct))


@dataclass
class BenchmarkReport:
    rows: list = field(default_factory=list)
    count: int = 0
    connections: tuple = ()
    vehicles: tuple = ()
    # per (config, instance index): (ms, expansions, optimal) or an error string
    raw: dict = field(default_factory=dict)

    def row(self, name: str) -> BenchRow:
        for r in self.rows:
            if r.config == name:
                return r
        raise KeyError(name)


def _summarise(name, results) -> BenchRow:
    ok = [r for r in results if not isinstance(r, str)]
    row = BenchRow(name, len(results), len(results) - len(ok), sum(1 for r in ok if r[2]))
    if ok:
        times = [r[0] for r in ok]
        exps = [r[1] for r in ok]
        row.time_mean_ms = statistics.fmean(times)
        row.time_pct_ms = tuple(percentile(times, p) for p in PERCENTILES)
        row.exp_mean = statistics.fmean(exps)
        row.exp_pct = tuple(percentile(exps, p) for p in PERCENTILES)
    else:
        row.time_pct_ms = row.exp_pct = (math.nan,) * len(PERCENTILES)
    return row


def run_benchmark(suite, configurations=None, time_limit: float = 5.0, repetitions: int = 3,
                  lift_cycle: bool = True, progress=None) -> BenchmarkReport:
    """Solve every instance under every configuration.

    ``configurations`` maps names to ``SearchConfig``s or to
    ``(heuristic, checks)`` pairs. Wall time is the median of ``repetitions``
    solves; the expansion count is deterministic. Failures are recorded and
    the run continues.
    """
    if configurations is None:
        configurations = NAMED_CONFIGS
    suite = list(suite)
    report = BenchmarkReport(count=len(suite))
    if suite:
        report.connections = (min(i.num_connections for i in suite), max(i.num_connections for i in suite))
        report.vehicles = (min(i.num_vehicles for i in suite), max(i.num_vehicles for i in suite))
    for name, cfg in configurations.items():
        if not isinstance(cfg, SearchConfig):
            cfg = SearchConfig(heuristic=cfg[0], checks=cfg[1])
        cfg = SearchConfig(cfg.heuristic, cfg.checks, time_limit * 1000.0, cfg.max_expansions, cfg.h_sat,
                           False if lift_cycle else cfg.cycle_enforced, cfg.strict_traversal,
                           cfg.strict_dominance)
        results = []
        for k, inst in enumerate(suite):
            try:
                times = []
                for _ in range(max(1, repetitions)):
                    t0 = time.perf_counter()
                    _, stats = a_star(inst, cfg)
                    times.append((time.perf_counter() - t0) * 1000.0)
                res = (statistics.median(times), stats.expansions, stats.optimal)
            except Exception as e:  # recorded per instance, run continues
                res = f"{type(e).__name__}: {e}"
            report.raw[(name, k)] = res
            results.append(res)
            if progress is not None:
                progress(name, k, res)
        report.rows.append(_summarise(name, results))
    return report


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def emit_report(report: BenchmarkReport, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in report.rows:
            w.writerow([_fmt(v) for v in r.values()])
        return buf.getvalue()
    if fmt == "table":
        head1 = f"{'':14s} | {'Run-Time (ms)':^44s} | {'Number of Expansions':^44s}"
        stats = ["Mean"] + [f"{p}%" for p in PERCENTILES]
        head2 = f"{'Config':14s} | " + " ".join(f"{s:>8s}" for s in stats) + " | " + " ".join(f"{s:>8s}" for s in stats)
        lines = [f"{report.count} instances, connections {report.connections}, vehicles {report.vehicles}",
                 head1, head2, "-" * len(head2)]
        for r in report.rows:
            t = [r.time_mean_ms, *r.time_pct_ms]
            e = [r.exp_mean, *r.exp_pct]
            lines.append(f"{r.config:14s} | " + " ".join(f"{x:8.1f}" for x in t) + " | "
                         + " ".join(f"{x:8.1f}" for x in e))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def parse_report_csv(text: str) -> BenchmarkReport:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != tuple(COLUMNS):
        raise ValueError("not a benchmark CSV")
    k = len(PERCENTILES)
    report = BenchmarkReport()
    for r in rows[1:]:
        nums = [float(x) for x in r[4:]]
        report.rows.append(BenchRow(r[0], int(r[1]), int(r[2]), int(r[3]), nums[0], tuple(nums[1:1 + k]),
                                    nums[1 + k], tuple(nums[2 + k:])))
    if report.rows:
        report.count = report.rows[0].instances
    return report
