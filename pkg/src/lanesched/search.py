"""A* tree search over partial signal schedules.

A state appends one job (the next unserved cluster, or the unserved tail
of a cluster cut short by max-green) on one connection. Vehicles inside a
job are advanced one at a time so queueing and max-green are tracked per
vehicle.
"""
from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field

from .domain import EPS, Cluster, Instance, ValidationError, Vehicle
from . import heuristics

HEURISTICS = ("pdwspt", "eris", "none")
CHECKS = ("dominance", "minmax", "equivalence")
CHECK_PRESETS = {
    "all": frozenset(CHECKS),
    "none": frozenset(),
    "dominance": frozenset({"dominance"}),
    "minmax": frozenset({"minmax"}),
    "dominance-minmax": frozenset({"dominance", "minmax"}),
}
DEFAULT_H_SAT = 2.0


class ContractError(RuntimeError):
    """A caller broke a precondition of the transition model."""


class InvariantError(RuntimeError):
    """Internal bookkeeping is inconsistent (e.g. a broken parent chain)."""


@dataclass(frozen=True)
class SearchConfig:
    heuristic: str = "pdwspt"
    checks: frozenset = CHECK_PRESETS["dominance-minmax"]
    time_limit_ms: float | None = None
    # deterministic budget on state updates; used by CI runs and the simulator
    max_expansions: int | None = None
    h_sat: float = DEFAULT_H_SAT
    cycle_enforced: bool | None = None
    strict_traversal: bool | None = None
    strict_dominance: bool = False

    def __post_init__(self):
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic!r}")
        checks = CHECK_PRESETS[self.checks] if isinstance(self.checks, str) else frozenset(self.checks)
        unknown = checks - set(CHECKS)
        if unknown:
            raise ValueError(f"unknown checks {sorted(unknown)}")
        object.__setattr__(self, "checks", checks)

    def prepare(self, instance: Instance) -> Instance:
        """Apply the cycle overrides to ``instance``."""
        plan = instance.plan
        enforced = plan.cycle_enforced if self.cycle_enforced is None else self.cycle_enforced
        strict = plan.strict_traversal if self.strict_traversal is None else self.strict_traversal
        if enforced == plan.cycle_enforced and strict == plan.strict_traversal:
            return instance
        return instance.with_plan(plan.with_cycle(enforced, strict))


class SearchState:
    __slots__ = ("stage", "connection", "sd", "start", "t", "q", "d", "h", "n", "parent",
                 "job", "opened", "fallback", "dead", "served")

    def __init__(self, stage, connection, sd, start, t, q, d, h, n, parent=None,
                 job=None, opened=False, fallback=False):
        self.stage = stage
        self.connection = connection
        self.sd = sd
        self.start = start
        self.t = t
        self.q = q
        self.d = d
        self.h = h
        self.n = n
        self.parent = parent
        # (connection, first vehicle index, end index, begin times)
        self.job = job
        self.opened = opened
        self.fallback = fallback
        self.dead = False
        self.served = sum(n)

    @property
    def f(self) -> float:
        return self.d + self.h

    def stage_end(self, min_green: float) -> float:
        return self.start + max(self.sd, min_green)

    def __repr__(self):
        return (f"SearchState(stage={self.stage}, m={self.connection}, sd={self.sd:.3f}, "
                f"start={self.start:.3f}, d={self.d:.3f}, h={self.h:.3f}, N={self.n})")


def is_goal(state: SearchState, instance: Instance) -> bool:
    return state.n == instance.arrays.counts


def root_state(instance: Instance) -> SearchState:
    c = instance.controller
    M = instance.num_connections
    q = tuple(c.queues) if c.queues else (0,) * M
    return SearchState(c.current_stage, c.current_connection, c.elapsed, c.stage_start,
                       (0.0,) * M, q, 0.0, 0.0, (0,) * M)


def queueing_delay(t_m: float, q_m: int, v: Vehicle, h_sat: float = DEFAULT_H_SAT) -> tuple[float, int]:
    """Departure time and queue count for ``v`` when its lane frees at ``t_m``.

    A vehicle reaching a lane that is still occupied (``t_m > arr``) joins the
    queue and discharges at the saturation headway, never faster than its own
    free crossing time.
    """
    if t_m > v.arr + EPS:
        return v.arr + max(h_sat, v.dur), q_m + 1
    return v.dep, q_m


def update_state(parent: SearchState, job, instance: Instance, h_sat: float = DEFAULT_H_SAT,
                 heuristic=None) -> SearchState:
    """Child of ``parent`` that serves the next job on a connection.

    ``job`` is a connection index or the ``Cluster`` expected next on it. When
    no vehicle of the job fits in the current stage's max-green the job moves
    to the next stage holding its connection (a full cycle later when that is
    the current stage again).
    """
    arrays = instance.arrays
    if isinstance(job, Cluster):
        m = job.connection
        i = parent.n[m]
        if i >= arrays.counts[m] or arrays.vehicles[m][i] not in job.vehicles:
            raise ContractError(f"cluster on connection {m} is not next in FIFO order")
    else:
        m = job
        i = parent.n[m]
    if i >= arrays.counts[m]:
        raise ContractError(f"connection {m} has no unserved vehicles")
    end = arrays.job_end[m][i]
    arr, dur, wgt = arrays.arr[m], arrays.dur[m], arrays.weight[m]
    tab = instance.plan.tables
    s_p = parent.stage
    t_m = parent.t[m]
    q_m = parent.q[m]

    served = None
    if tab.in_stage[s_p][m]:
        served = _serve(m, i, end, parent.start, t_m, q_m, tab.max_green[s_p], arr, dur, wgt,
                        h_sat, first_may_exceed=False)
        if served[0] == i:
            served = None
    if served is not None:
        s, start, sd, opened = s_p, parent.start, parent.sd, False
    else:
        s = tab.nearest_move[s_p][m] if tab.in_stage[s_p][m] else tab.nearest[s_p][m]
        if s is None:
            raise ValidationError(f"connection {m} is served by no stage")
        cost = tab.reopen[s_p] if s == s_p else tab.switch[s_p][s]
        earliest = parent.start + max(parent.sd, tab.min_green[s_p]) + cost
        a0 = arr[i]
        start = earliest if earliest > a0 else a0
        sd, opened = 0.0, True
        served = _serve(m, i, end, start, t_m, q_m, tab.max_green[s], arr, dur, wgt,
                        h_sat, first_may_exceed=True)
    j, finish, q_new, delay, begins, fallback = served
    sd = max(sd, finish - start)

    t = list(parent.t)
    t[m] = finish
    n = list(parent.n)
    n[m] = j
    q = list(parent.q)
    q[m] = q_new
    child = SearchState(s, m, sd, start, tuple(t), tuple(q), parent.d + delay, 0.0, tuple(n),
                        parent, (m, i, j, begins), opened, fallback)
    if heuristic is not None:
        child.h = heuristic(child, instance, h_sat)
    return child


def _serve(m, i, end, start, t_m, q_m, max_green, arr, dur, wgt, h_sat, first_may_exceed):
    delay = 0.0
    begins = []
    fallback = False
    deadline = start + max_green + EPS
    j = i
    while j < end:
        a = arr[j]
        begin = t_m if t_m > start else start
        if a > begin:
            begin = a
        p = dur[j] if begin <= a + EPS else max(h_sat, dur[j])
        finish = begin + p
        if finish > deadline:
            if j == i and first_may_exceed:
                fallback = True
            else:
                break
        if begin > a + EPS:
            q_m += 1
            delay += wgt[j] * (begin - a)
        begins.append(begin)
        t_m = finish
        j += 1
        if fallback:
            break
    return j, t_m, q_m, delay, tuple(begins), fallback


def children(parent: SearchState, instance: Instance, h_sat: float, heuristic=None) -> list[SearchState]:
    counts = instance.arrays.counts
    return [update_state(parent, m, instance, h_sat, heuristic)
            for m in range(len(counts)) if parent.n[m] < counts[m]]


def in_stage_capacity(state: SearchState, instance: Instance, h_sat: float) -> tuple:
    """Vehicles each current-stage connection could still serve before max-green."""
    arrays = instance.arrays
    tab = instance.plan.tables
    out = []
    for m in tab.members[state.stage]:
        i = state.n[m]
        if i >= arrays.counts[m]:
            continue
        j = _serve(m, i, arrays.counts[m], state.start, state.t[m], 0, tab.max_green[state.stage],
                   arrays.arr[m], arrays.dur[m], arrays.weight[m], h_sat, False)[0]
        out.append((m, j))
    return tuple(out)


class DominanceTable:
    """States hashed by (N, m); a newcomer no better on every count is pruned.

    Beyond delay and finish times the comparison requires the same stage and
    stage start, no longer stage duration and the same remaining max-green
    capacity, so a dominating state can replay any continuation of the
    dominated one.
    """

    def __init__(self, instance: Instance, h_sat: float, strict: bool = False):
        self.instance = instance
        self.h_sat = h_sat
        self.strict = strict
        self.table: dict = {}
        self.equivalence: set = set()

    def _dominates(self, a: SearchState, b: SearchState) -> bool:
        if a.stage != b.stage or abs(a.start - b.start) > EPS:
            return False
        if a.d > b.d + EPS or a.sd > b.sd + EPS:
            return False
        if any(x > y + EPS for x, y in zip(a.t, b.t)):
            return False
        if self.strict and any(x > y for x, y in zip(a.q, b.q)):
            return False
        return in_stage_capacity(a, self.instance, self.h_sat) == in_stage_capacity(
            b, self.instance, self.h_sat)

    def check(self, state: SearchState) -> bool:
        """Return True to keep ``state``; evicts retained states it dominates."""
        key = (state.n, state.connection)
        bucket = self.table.get(key)
        if bucket is None:
            self.table[key] = [state]
            return True
        for other in bucket:
            if self._dominates(other, state):
                return False
        kept = []
        for other in bucket:
            if self._dominates(state, other):
                other.dead = True
            else:
                kept.append(other)
        kept.append(state)
        self.table[key] = kept
        return True

    def equivalent(self, state: SearchState, parent: SearchState) -> bool:
        """True when an equally distributed state already opened this stage."""
        if not state.opened:
            return False
        members = self.instance.plan.tables.members
        if members[state.stage] & members[parent.stage]:
            return False
        key = (parent.n, state.stage)
        if key in self.equivalence:
            return True
        self.equivalence.add(key)
        return False


def dominance_check(state: SearchState, table: DominanceTable) -> bool:
    return table.check(state)


def equivalence_check(state: SearchState, parent: SearchState, table: DominanceTable) -> bool:
    """Return True to keep ``state``."""
    if not table.instance.plan.cycle_enforced:
        return True
    return not table.equivalent(state, parent)


@dataclass
class SearchStats:
    expansions: int = 0
    generated: int = 0
    popped: int = 0
    pruned_dominance: int = 0
    pruned_equivalence: int = 0
    pruned_minmax: int = 0
    wall_time: float = 0.0
    optimal: bool = False
    timed_out: bool = False


def expand_neighbors(parent: SearchState, instance: Instance, config: SearchConfig,
                     table: DominanceTable | None, stats: SearchStats, heuristic=None) -> list[SearchState]:
    """Children of ``parent`` that survive the enabled pruning checks."""
    kids = children(parent, instance, config.h_sat, heuristic)
    stats.expansions += len(kids)
    checks = config.checks
    if "minmax" in checks:
        tab = instance.plan.tables
        min_set, cand, max_set = [], [], []
        for c in kids:
            if c.sd > tab.max_green[c.stage] + EPS:
                max_set.append(c)
            elif (not c.opened and c.stage == parent.stage
                  and c.sd <= tab.min_green[c.stage] + EPS):
                min_set.append(c)
            else:
                cand.append(c)
        if min_set:
            stats.pruned_minmax += len(cand) + len(max_set)
            kids = min_set
        elif cand:
            stats.pruned_minmax += len(max_set)
            kids = cand
        else:
            kids = max_set
    out = []
    for c in kids:
        if table is not None and "equivalence" in checks and not equivalence_check(c, parent, table):
            stats.pruned_equivalence += 1
            continue
        if table is not None and "dominance" in checks and not table.check(c):
            stats.pruned_dominance += 1
            continue
        out.append(c)
    return out


@dataclass
class ScheduleEntry:
    connection: int
    first: int
    end: int
    stage: int
    start: float
    finish: float
    begins: tuple
    max_exceeded: bool = False


@dataclass
class StageSegment:
    stage: int
    green_start: float
    green_end: float
    max_exceeded: bool = False


@dataclass
class Schedule:
    entries: list = field(default_factory=list)
    segments: list = field(default_factory=list)
    total_delay: float = 0.0
    # delays[m][i] for every served vehicle
    delays: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)


def trace_schedule(goal: SearchState, instance: Instance, h_sat: float = DEFAULT_H_SAT) -> Schedule:
    """Reverse the parent chain of ``goal`` into a time-ordered schedule."""
    chain = []
    s = goal
    while s is not None:
        chain.append(s)
        s = s.parent
    chain.reverse()
    root = chain[0]
    if root.job is not None:
        raise InvariantError("parent chain does not end in a root state")
    arrays = instance.arrays
    tab = instance.plan.tables
    delays = [[None] * c for c in arrays.counts]
    entries, segments = [], []
    seg = StageSegment(root.stage, root.start, 0.0)
    last_sd = root.sd
    total = 0.0
    for prev, st in zip(chain, chain[1:]):
        if st.parent is not prev or st.job is None:
            raise InvariantError("broken parent chain")
        m, i, j, begins = st.job
        if i != prev.n[m] or j != st.n[m] or len(begins) != j - i:
            raise InvariantError(f"job bookkeeping mismatch on connection {m}")
        if st.opened:
            seg.green_end = seg.green_start + max(last_sd, tab.min_green[seg.stage])
            segments.append(seg)
            seg = StageSegment(st.stage, st.start, 0.0)
        last_sd = st.sd
        seg.max_exceeded |= st.fallback
        for k, b in zip(range(i, j), begins):
            dl = max(b - arrays.arr[m][k], 0.0)
            delays[m][k] = dl
            total += arrays.weight[m][k] * dl
        entries.append(ScheduleEntry(m, i, j, st.stage, begins[0], st.t[m], begins, st.fallback))
    seg.green_end = seg.green_start + max(last_sd, tab.min_green[seg.stage])
    segments.append(seg)
    if abs(total - goal.d) > 1e-6 * max(1.0, goal.d):
        raise InvariantError(f"traced delay {total} differs from state delay {goal.d}")
    entries.sort(key=lambda e: (e.start, e.connection))
    return Schedule(entries, segments, goal.d, delays)


def greedy_complete(state: SearchState, instance: Instance, h_sat: float) -> SearchState:
    """Finish ``state`` by always serving the job whose first vehicle arrives earliest."""
    arrays = instance.arrays
    counts = arrays.counts
    while state.n != counts:
        best = None
        for m in range(len(counts)):
            i = state.n[m]
            if i < counts[m]:
                key = (arrays.arr[m][i], m)
                if best is None or key < best:
                    best = key
        state = update_state(state, best[1], instance, h_sat)
    return state


def a_star(instance: Instance, config: SearchConfig | None = None, on_expand=None):
    """Best-first tree search on f = d + h without a closed list.

    Returns ``(schedule, stats)``. When the time or expansion budget runs out
    the frontier node with the most served vehicles (then lowest f) is
    completed greedily and ``stats.optimal`` is False.
    """
    config = config or SearchConfig()
    instance = config.prepare(instance)
    t0 = time.perf_counter()
    deadline = None if config.time_limit_ms is None else t0 + config.time_limit_ms / 1000.0
    h_sat = config.h_sat
    hfun = heuristics.HEURISTIC_FUNCS[config.heuristic]
    stats = SearchStats()

    root = root_state(instance)
    root.h = hfun(root, instance, h_sat)
    needs_table = bool(config.checks & {"dominance", "equivalence"})
    table = DominanceTable(instance, h_sat, config.strict_dominance) if needs_table else None
    if table is not None and "dominance" in config.checks:
        table.check(root)
    counter = itertools.count()
    open_heap = [(root.f, -root.d, next(counter), root)]
    goal = None
    while open_heap:
        _, _, _, state = heapq.heappop(open_heap)
        if state.dead:
            continue
        if is_goal(state, instance):
            goal = state
            break
        if ((deadline is not None and time.perf_counter() > deadline)
                or (config.max_expansions is not None and stats.expansions >= config.max_expansions)):
            heapq.heappush(open_heap, (state.f, -state.d, next(counter), state))
            stats.timed_out = True
            break
        stats.popped += 1
        if on_expand is not None:
            on_expand(state)
        for c in expand_neighbors(state, instance, config, table, stats, hfun):
            stats.generated += 1
            heapq.heappush(open_heap, (c.f, -c.d, next(counter), c))

    if goal is not None:
        stats.optimal = True
    else:
        live = [e[3] for e in open_heap if not e[3].dead]
        if not live:
            raise InvariantError("search exhausted without reaching a goal")
        best = min(live, key=lambda s: (-s.served, s.f))
        goal = greedy_complete(best, instance, h_sat)
    schedule = trace_schedule(goal, instance, h_sat)
    stats.wall_time = time.perf_counter() - t0
    return schedule, stats


def solve(instance: Instance, config: SearchConfig | None = None):
    """Library entry point: ``(schedule, stats)`` for ``instance``."""
    from .domain import validate_plan
    problems = validate_plan(instance.plan)
    if problems:
        raise ValidationError("; ".join(problems))
    return a_star(instance, config)
