"""Admissible lower bounds on the delay still to be incurred from a state.

The PDWSPT bound works on a relaxation with three parts:

* every unserved vehicle is shifted to the earliest time its connection
  can be green again (cycle order, intergreens and min-greens included) and
  behind its lane predecessors; the shift is unavoidable delay;
* connections that never share a stage are grouped into conflict cliques;
  vehicles of one clique must be served one at a time, so each clique is a
  single machine with release dates;
* each machine is solved exactly in its preemptive mean-busy-time form by
  the preemptive w/dur rule. Compatible vehicles land in different cliques
  and never delay one another, which is the merge of compatible vehicles.

A connection that appears in several cliques has its weight split evenly
between them, so the clique costs still add up to a valid bound.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache

from .domain import EPS, CyclePlan

INF = float("inf")


@dataclass(frozen=True)
class RelaxedJob:
    ready: float
    dur: float
    weight: float = 1.0
    connection: int = 0
    stage: int = 0

    def __post_init__(self):
        if not self.dur > 0:
            raise ValueError(f"relaxed job with dur {self.dur} <= 0")
        if self.ready < 0:
            raise ValueError(f"relaxed job with ready {self.ready} < 0")

    @property
    def priority(self) -> float:
        return self.weight / self.dur


def permitted_starts(state, instance) -> list[float]:
    """Earliest time each connection's next vehicle could begin service."""
    tab = instance.plan.tables
    s = state.stage
    stage_end = state.start + max(state.sd, tab.min_green[s])
    out = []
    for m in range(instance.num_connections):
        t_m = state.t[m]
        if tab.in_stage[s][m]:
            p = state.start
        else:
            p = stage_end + tab.switch[s][tab.nearest[s][m]]
        out.append(t_m if t_m > p else p)
    return out


def _shifted_jobs(state, instance, h_sat):
    """Shift delay and the per-connection shifted (ready, dur, weight) lists."""
    arrays = instance.arrays
    starts = permitted_starts(state, instance)
    shift = 0.0
    per_conn = []
    for m, c in enumerate(starts):
        arr, dur, wgt = arrays.arr[m], arrays.dur[m], arrays.weight[m]
        jobs = []
        for j in range(state.n[m], arrays.counts[m]):
            a = arr[j]
            if c > a + EPS:
                shift += wgt[j] * (c - a)
                p = max(h_sat, dur[j])
                jobs.append((c, p, wgt[j]))
            else:
                c = a
                p = dur[j]
                jobs.append((a, p, wgt[j]))
            c += p
        per_conn.append(jobs)
    return shift, per_conn


def _sweep(jobs):
    """Run the preemptive w/dur rule; return (mean-busy-time cost, completion times)."""
    raw = [(j.ready, j.dur, j.weight) if isinstance(j, RelaxedJob) else tuple(j) for j in jobs]
    order = sorted(range(len(raw)), key=raw.__getitem__)
    js = [raw[k] for k in order]
    n = len(js)
    rem = [p for _, p, _ in js]
    done = [0.0] * n
    heap = []
    cost = 0.0
    t = 0.0
    i = 0
    while i < n or heap:
        if not heap:
            if js[i][0] > t:
                t = js[i][0]
        while i < n and js[i][0] <= t + EPS:
            r, p, w = js[i]
            heapq.heappush(heap, (-w / p, i))
            i += 1
        prio, k = heapq.heappop(heap)
        r, p, w = js[k]
        nxt = js[i][0] if i < n else INF
        run_to = t + rem[k]
        if nxt < run_to - EPS:
            # stop at the next release so it can compete for the machine
            run_to = nxt
        cost += (w / p) * (run_to - t) * ((t + run_to) / 2.0 - r)
        rem[k] -= run_to - t
        t = run_to
        if rem[k] > EPS:
            heapq.heappush(heap, (prio, k))
        else:
            cost -= w * p / 2.0
            done[k] = t
    completions = [0.0] * n
    for pos, k in enumerate(order):
        completions[k] = done[pos]
    return max(cost, 0.0), completions


def pdwspt_priority_sweep(jobs) -> float:
    """Weighted extra delay of the preemptive w/dur rule on one machine.

    ``jobs`` are ``RelaxedJob``s or ``(ready, dur, weight)`` tuples. A job
    arriving with strictly higher w/dur preempts the running one. The cost
    of a job is ``w * (M - ready - dur/2)`` with ``M`` its mean busy time,
    which equals ``w * (start - ready)`` for a job that runs uninterrupted.
    This objective is minimised exactly by the rule and never exceeds the
    weighted delay of any non-preemptive schedule.
    """
    return _sweep(jobs)[0]


def sweep_completions(jobs) -> list[float]:
    """Completion time of each job (input order) under the preemptive w/dur rule."""
    return _sweep(jobs)[1]


def unit_sweep_schedule(jobs, slice_len: float = 1.0) -> list:
    """Slot-by-slot version of the rule: the job index run in each slot (None = idle).

    Durations and ready times must be multiples of ``slice_len``. Used to
    check the exchange argument on discretised cases.
    """
    js = [(j.ready, j.dur, j.weight) if isinstance(j, RelaxedJob) else tuple(j) for j in jobs]
    rem = [round(p / slice_len) for _, p, _ in js]
    slots = []
    t = 0
    current = None
    while any(rem):
        avail = [k for k, (r, p, w) in enumerate(js) if rem[k] and r <= t * slice_len + EPS]
        if not avail:
            slots.append(None)
            t += 1
            continue
        best = max(js[k][2] / js[k][1] for k in avail)
        if current in avail and js[current][2] / js[current][1] >= best - EPS:
            pick = current
        else:
            pick = min(k for k in avail if js[k][2] / js[k][1] >= best - EPS)
        slots.append(pick)
        rem[pick] -= 1
        current = pick
        t += 1
    return slots


def unit_schedule_cost(jobs, slots, slice_len: float = 1.0) -> float:
    """Mean-busy-time extra delay of a slot assignment (see ``pdwspt_priority_sweep``)."""
    js = [(j.ready, j.dur, j.weight) if isinstance(j, RelaxedJob) else tuple(j) for j in jobs]
    cost = 0.0
    for t, k in enumerate(slots):
        if k is None:
            continue
        r, p, w = js[k]
        mid = (t + 0.5) * slice_len
        cost += (w / p) * slice_len * (mid - r)
    return cost - sum(w * p / 2.0 for _, p, w in js)


@lru_cache(maxsize=None)
def _cliques_for(compat: tuple) -> tuple:
    M = len(compat)
    cliques = []
    covered = set()
    for m in range(M):
        if m in covered:
            continue
        clique = [m]
        for k in range(M):
            if k != m and all(not compat[k][c] for c in clique):
                clique.append(k)
        cliques.append(tuple(sorted(clique)))
        covered.update(clique)
    uses = [sum(m in c for c in cliques) for m in range(M)]
    return tuple(tuple((m, 1.0 / uses[m]) for m in c) for c in cliques)


def conflict_cliques(plan: CyclePlan) -> tuple:
    """Clique cover of the conflict graph as ``((connection, weight share), ...)`` groups."""
    compat = tuple(tuple(row) for row in plan.tables.compatible)
    return _cliques_for(compat)


def connection_pdwspt(per_conn_jobs, cliques) -> float:
    """Contention delay of shifted vehicles under the connection-based rule."""
    total = 0.0
    for clique in cliques:
        if len(clique) < 2:
            continue
        jobs = []
        for m, share in clique:
            jobs.extend((r, p, w * share) for r, p, w in per_conn_jobs[m])
        if len(jobs) > 1:
            total += pdwspt_priority_sweep(jobs)
    return total


def pdwspt_lower_bound(state, instance, h_sat: float = 2.0) -> float:
    shift, per_conn = _shifted_jobs(state, instance, h_sat)
    if not any(per_conn):
        return 0.0
    return shift + connection_pdwspt(per_conn, conflict_cliques(instance.plan))


def eris_lower_bound(state, instance, h_sat: float = 2.0) -> float:
    """Baseline bound from independent per-stage-group subproblems.

    Each stage group is solved on its own after the permitted-start shift;
    connections inside a group are compatible, so a group contributes only
    its shift delay and cross-group contention is ignored.
    """
    shift, _ = _shifted_jobs(state, instance, h_sat)
    return shift


def zero_heuristic(state, instance, h_sat: float = 2.0) -> float:
    return 0.0


HEURISTIC_FUNCS = {
    "pdwspt": pdwspt_lower_bound,
    "eris": eris_lower_bound,
    "none": zero_heuristic,
}
