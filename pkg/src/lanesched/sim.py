"""Rolling-horizon point-queue microsimulation.

Vehicles travel links at free-flow time and queue vertically at stop
bars. Each intersection runs a signal policy: the A* planner (replanned
every second over a sliding horizon), fixed-time, or actuated control.
Planners forward their predicted departures to downstream neighbours as
future arrivals.
"""
from __future__ import annotations

import bisect
import csv
import io
import json
import math
import random
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .domain import EPS, ControllerState, CyclePlan, Instance, StageDefinition, Vehicle, build_clusters
from .instance_io import InstanceFormatError, plan_from_dict, plan_to_dict
from .search import SearchConfig, a_star

GREEN, INTERGREEN = "green", "intergreen"


# ----------------------------------------------------------------------------- network model

@dataclass(frozen=True)
class Link:
    src: tuple[int, int]
    dst: tuple[int, int]
    travel_time: float

    def __post_init__(self):
        if not self.travel_time > 0:
            raise ValueError(f"link {self.src}->{self.dst} travel time must be positive")


@dataclass(frozen=True)
class Demand:
    intersection: int
    connection: int
    rate: float  # vehicles per hour

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("demand rate must be >= 0")


@dataclass(frozen=True)
class NetworkModel:
    plans: tuple[CyclePlan, ...]
    links: tuple[Link, ...] = ()
    demand: tuple[Demand, ...] = ()
    # free-flow time from the network boundary to the first stop bar
    approach_time: float = 30.0
    crossing_time: float = 1.0
    h_sat: float = 2.0
    names: tuple[str, ...] = ()

    def __post_init__(self):
        seen = set()
        for link in self.links:
            if link.src in seen:
                raise ValueError(f"connection {link.src} has two downstream links")
            seen.add(link.src)
            for i, m in (link.src, link.dst):
                if not (0 <= i < len(self.plans) and 0 <= m < self.plans[i].num_connections):
                    raise ValueError(f"link endpoint {(i, m)} outside network")
        for d in self.demand:
            if not (0 <= d.intersection < len(self.plans)
                    and 0 <= d.connection < self.plans[d.intersection].num_connections):
                raise ValueError(f"demand on unknown connection {(d.intersection, d.connection)}")

    def downstream(self) -> dict:
        return {link.src: link for link in self.links}

    def scaled(self, factor: float) -> "NetworkModel":
        demand = tuple(Demand(d.intersection, d.connection, d.rate * factor) for d in self.demand)
        return NetworkModel(self.plans, self.links, demand, self.approach_time, self.crossing_time,
                            self.h_sat, self.names)


def four_leg_plan(cycle_enforced: bool = True) -> CyclePlan:
    """Eight connections (through 0-3, left 4-7 for N, S, E, W) in four stages."""
    stages = (
        StageDefinition(0, frozenset({0, 1}), 5.0, 40.0, 4.0),
        StageDefinition(1, frozenset({4, 5}), 4.0, 20.0, 4.0),
        StageDefinition(2, frozenset({2, 3}), 5.0, 40.0, 4.0),
        StageDefinition(3, frozenset({6, 7}), 4.0, 20.0, 4.0),
    )
    return CyclePlan(stages, 8, cycle_enforced)


# hourly rates per connection; the high preset is twice the low one
HIGH_THROUGH, HIGH_LEFT = 400.0, 100.0


def single_intersection(level: str = "high", cycle_enforced: bool = True) -> NetworkModel:
    scale = {"high": 1.0, "low": 0.5}[level]
    demand = tuple(Demand(0, m, scale * (HIGH_THROUGH if m < 4 else HIGH_LEFT)) for m in range(8))
    return NetworkModel((four_leg_plan(cycle_enforced),), (), demand, names=("single",))


def corridor(n: int = 3, level: str = "high", link_time: float = 20.0,
             cycle_enforced: bool = True) -> NetworkModel:
    """``n`` four-leg intersections in an east-west line."""
    scale = {"high": 1.0, "low": 0.5}[level]
    plans = tuple(four_leg_plan(cycle_enforced) for _ in range(n))
    links = []
    for i in range(n - 1):
        links.append(Link((i, 2), (i + 1, 2), link_time))      # eastbound through
        links.append(Link((i + 1, 3), (i, 3), link_time))      # westbound through
    demand = []
    for i in range(n):
        for m in range(8):
            if (m == 2 and i > 0) or (m == 3 and i < n - 1):
                continue
            rate = HIGH_THROUGH if m < 4 else HIGH_LEFT
            if m in (0, 1):
                rate *= 0.5
            demand.append(Demand(i, m, scale * rate))
    return NetworkModel(plans, tuple(links), tuple(demand), names=tuple(f"int{i}" for i in range(n)))


def generate_demand(demand, duration: float, seed: int) -> list[tuple[float, int, int]]:
    """Poisson entry times ``(time, intersection, connection)`` sorted by time."""
    rng = random.Random(seed)
    out = []
    for d in demand:
        if d.rate <= 0:
            continue
        lam = d.rate / 3600.0
        t = rng.expovariate(lam)
        while t < duration:
            out.append((round(t, 6), d.intersection, d.connection))
            t += rng.expovariate(lam)
    out.sort()
    return out


# ----------------------------------------------------------------------------- policies

@dataclass(frozen=True)
class PolicySpec:
    kind: str = "astar"                 # astar | fixed | actuated
    # 2 s wall-clock budget per replan; set max_expansions instead for reproducible runs
    config: SearchConfig = field(default_factory=lambda: SearchConfig(time_limit_ms=2000.0))
    horizon: float = 60.0
    cycle: float = 80.0                 # fixed-time cycle length
    gap_out: float = 3.0                # actuated gap-out
    detector_lead: float = 2.0          # actuated detection ahead of the stop bar
    max_extension: float | None = None  # actuated cap beyond min-green (None = max-green)
    label: str = ""
    noise: float = 0.0                  # std-dev (s) of sensed arrival-time error

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == "astar":
            return "Dijkstra" if self.config.heuristic == "none" else self.config.heuristic.upper()
        return {"fixed": "FixedTime", "actuated": "Actuation"}.get(self.kind, self.kind)

    def build(self, plan: CyclePlan):
        if self.kind == "astar":
            return PlannerPolicy(self.config, self.horizon)
        if self.kind == "fixed":
            return fixed_time_policy(plan, self.cycle)
        if self.kind == "actuated":
            return actuated_policy(plan, self.gap_out, self.max_extension, self.detector_lead)
        raise ValueError(f"unknown policy kind {self.kind!r}")


class FixedTimePolicy:
    def __init__(self, splits):
        self.splits = list(splits)

    def decide(self, rt, now):
        if now - rt.green_start >= self.splits[rt.stage] - EPS:
            return (rt.stage + 1) % len(self.splits)
        return None


def fixed_time_policy(plan: CyclePlan, cycle: float = 80.0) -> FixedTimePolicy:
    """Equal green splits of ``cycle`` less intergreens, clipped to [min, max] green."""
    lost = sum(s.intergreen for s in plan.stages)
    share = max(cycle - lost, 0.0) / len(plan.stages)
    return FixedTimePolicy([min(max(share, s.min_green), s.max_green) for s in plan.stages])


class ActuatedPolicy:
    def __init__(self, plan, gap_out, max_extension, detector_lead):
        self.plan = plan
        self.gap_out = gap_out
        self.max_extension = max_extension
        self.detector_lead = detector_lead
        self.last_call = 0.0

    def on_green(self, rt, now):
        self.last_call = now + self.plan.stages[rt.stage].min_green

    def decide(self, rt, now):
        st = self.plan.stages[rt.stage]
        elapsed = now - rt.green_start
        cap = st.max_green if self.max_extension is None else min(st.max_green, st.min_green + self.max_extension)
        if elapsed >= cap - EPS:
            return (rt.stage + 1) % len(self.plan.stages)
        for m in st.connections:
            lane = rt.lanes[m]
            if lane and lane[0].arr <= now + self.detector_lead + EPS:
                self.last_call = max(self.last_call, now)
                break
        if elapsed >= st.min_green - EPS and now - self.last_call >= self.gap_out - EPS:
            return (rt.stage + 1) % len(self.plan.stages)
        return None


def actuated_policy(plan: CyclePlan, gap_out: float = 3.0, max_extension: float | None = None,
                    detector_lead: float = 2.0) -> ActuatedPolicy:
    return ActuatedPolicy(plan, gap_out, max_extension, detector_lead)


class PlannerPolicy:
    """A* schedule-driven control: replan every second, execute the first stage decision."""

    def __init__(self, config: SearchConfig, horizon: float = 60.0):
        self.config = config
        self.horizon = horizon
        self.schedule = None
        self.plan_time = 0.0
        self.solves = 0
        self.timeouts = 0

    def decide(self, rt, now):
        plan = rt.plan
        st = plan.stages[rt.stage]
        elapsed = now - rt.green_start
        segs = self.schedule.segments if self.schedule is not None else []
        if plan.cycle_enforced:
            nxt = (rt.stage + 1) % len(plan)
        elif len(segs) > 1:
            nxt = segs[1].stage
        else:
            nxt = (rt.stage + 1) % len(plan)
        if elapsed >= st.max_green - EPS:
            return nxt
        if elapsed < st.min_green - EPS or len(segs) < 2:
            return None
        if now >= self.plan_time + segs[0].green_end - EPS:
            return nxt
        return None


def replan(rt, now: float, horizon: float, config: SearchConfig, predictions=None, noise=None):
    """Solve the intersection's current scheduling problem; return the schedule and its instance.

    Sensed vehicles within ``horizon`` are combined with predicted arrivals
    from upstream planners; a sensed vehicle replaces any prediction with the
    same id.
    """
    plan = rt.plan
    vehicles = {}
    queues = [0] * plan.num_connections
    for m, lane in enumerate(rt.lanes):
        for v in lane:
            if v.arr > now + horizon:
                break
            a = v.arr - now
            if noise is not None and a > 0:
                a += noise()
            a = max(a, 0.0)
            if v.arr <= now:
                queues[m] += 1
            vehicles[v.vid] = Vehicle(m, a, a + v.dur, 1.0, v.arr <= now, v.vid)
    for vid, m, arr_abs, dur in predictions or ():
        if vid in vehicles or arr_abs > now + horizon or arr_abs < now:
            continue
        a = arr_abs - now
        vehicles[vid] = Vehicle(m, a, a + dur, 1.0, False, vid)
    if rt.phase == GREEN:
        ctrl = ControllerState(rt.stage, min(plan.stages[rt.stage].connections), rt.green_start - now,
                               now - rt.green_start, tuple(queues))
    else:
        ctrl = ControllerState(rt.next_stage, min(plan.stages[rt.next_stage].connections),
                               rt.intergreen_end - now, 0.0, tuple(queues))
    seqs = build_clusters(vehicles.values(), 1.0, 10.0, plan.num_connections)
    inst = Instance(plan, tuple(seqs), ctrl, horizon + 1e-6 + max([0.0] + [v.arr for v in vehicles.values()]))
    schedule, stats = a_star(inst, config)
    return schedule, stats, inst


def predicted_departures(schedule, inst: Instance, h_sat: float, now: float) -> dict:
    """Map vehicle id -> absolute predicted finish time at the stop bar."""
    arrays = inst.arrays
    out = {}
    for e in schedule.entries:
        m = e.connection
        for k, b in zip(range(e.first, e.end), e.begins):
            a, dur = arrays.arr[m][k], arrays.dur[m][k]
            p = dur if b <= a + EPS else max(h_sat, dur)
            out[arrays.vehicles[m][k].vid] = now + b + p
    return out


# ----------------------------------------------------------------------------- runtime

@dataclass
class SimVehicle:
    vid: int
    entry: float
    arr: float          # arrival at the current stop bar
    dur: float
    delay: float = 0.0
    stops: int = 0
    visits: list = field(default_factory=list)   # (intersection, arrival, service begin, stopped)
    done: float | None = None


@dataclass
class SignalEvent:
    stage: int
    green_start: float
    green_end: float | None = None
    forced_max: bool = False


class IntersectionRuntime:
    def __init__(self, index: int, plan: CyclePlan, policy):
        self.index = index
        self.plan = plan
        self.policy = policy
        self.lanes = [[] for _ in range(plan.num_connections)]
        self.server_free = [0.0] * plan.num_connections
        self.phase = GREEN
        self.stage = 0
        self.next_stage = 0
        self.green_start = 0.0
        self.intergreen_end = 0.0
        self.log = [SignalEvent(0, 0.0)]
        if hasattr(policy, "on_green"):
            policy.on_green(self, 0.0)

    def green_connections(self) -> frozenset:
        return self.plan.stages[self.stage].connections if self.phase == GREEN else frozenset()

    def add(self, m: int, v: SimVehicle):
        keys = [x.arr for x in self.lanes[m]]
        self.lanes[m].insert(bisect.bisect_right(keys, v.arr), v)

    def vehicles(self) -> int:
        return sum(len(lane) for lane in self.lanes)


class InvariantViolation(AssertionError):
    pass


class NetworkState:
    """Mutable closed-loop simulation state."""

    def __init__(self, net: NetworkModel, policies, seed: int, duration: float, dt: float = 0.1,
                 check_invariants: bool = True):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.net = net
        self.dt = dt
        self.now = 0.0
        self.step_index = 0
        self.duration = duration
        self.check_invariants = check_invariants
        if isinstance(policies, PolicySpec):
            policies = [policies] * len(net.plans)
        self.specs = list(policies)
        self.ints = [IntersectionRuntime(i, p, spec.build(p)) for i, (p, spec) in enumerate(zip(net.plans, self.specs))]
        self.down = net.downstream()
        self.entries = generate_demand(net.demand, duration, seed)
        self.next_entry = 0
        self.injected = 0
        self.completed: list[SimVehicle] = []
        self.in_transit = 0
        self.predictions: dict = {}
        self.solves = 0
        self.planner_timeouts = 0
        self._noise_rng = random.Random(f"noise-{seed}")

    # conservation: injected = completed + vehicles held at stop bars
    def in_network(self) -> int:
        return sum(rt.vehicles() for rt in self.ints)

    def _inject(self, until: float):
        while self.next_entry < len(self.entries) and self.entries[self.next_entry][0] < until:
            t, i, m = self.entries[self.next_entry]
            self.next_entry += 1
            v = SimVehicle(self.injected, t, t + self.net.approach_time, self.net.crossing_time)
            self.injected += 1
            self.ints[i].add(m, v)

    def _replan(self):
        published = {}
        for rt in self.ints:
            spec = self.specs[rt.index]
            if not isinstance(rt.policy, PlannerPolicy):
                continue
            noise = None
            if spec.noise > 0:
                noise = lambda: self._noise_rng.gauss(0.0, spec.noise)  # noqa: E731
            schedule, stats, inst = replan(rt, self.now, spec.horizon, spec.config,
                                           self.predictions.get(rt.index), noise)
            rt.policy.schedule = schedule
            rt.policy.plan_time = self.now
            self.solves += 1
            self.planner_timeouts += not stats.optimal
            fin = predicted_departures(schedule, inst, self.net.h_sat, self.now)
            for m, lane in enumerate(rt.lanes):
                link = self.down.get((rt.index, m))
                if link is None:
                    continue
                j, dm = link.dst
                for v in lane:
                    if v.vid in fin:
                        published.setdefault(j, []).append((v.vid, dm, fin[v.vid] + link.travel_time, v.dur))
        # messages become visible at the next replanning round
        self.predictions = published

    def _signals(self, t: float):
        for rt in self.ints:
            if rt.phase == INTERGREEN:
                if t >= rt.intergreen_end - EPS:
                    rt.phase = GREEN
                    rt.stage = rt.next_stage
                    rt.green_start = t
                    rt.log.append(SignalEvent(rt.stage, t))
                    if hasattr(rt.policy, "on_green"):
                        rt.policy.on_green(rt, t)
                continue
            nxt = rt.policy.decide(rt, t)
            st = rt.plan.stages[rt.stage]
            if nxt is None and t - rt.green_start >= st.max_green - EPS:
                nxt = (rt.stage + 1) % len(rt.plan)
            if nxt is not None:
                ev = rt.log[-1]
                ev.green_end = t
                ev.forced_max = t - rt.green_start >= st.max_green - EPS
                rt.phase = INTERGREEN
                rt.next_stage = nxt
                rt.intergreen_end = t + st.intergreen

    def _serve(self, t: float, t_end: float):
        h_sat = self.net.h_sat
        for rt in self.ints:
            for m in rt.green_connections():
                lane = rt.lanes[m]
                while lane:
                    v = lane[0]
                    begin = max(v.arr, rt.server_free[m], t)
                    if begin >= t_end - EPS:
                        break
                    queued = begin > v.arr + EPS
                    p = max(h_sat, v.dur) if queued else v.dur
                    rt.server_free[m] = begin + p
                    lane.pop(0)
                    delay = begin - v.arr
                    v.delay += delay
                    v.stops += queued
                    v.visits.append((rt.index, v.arr, begin, queued))
                    link = self.down.get((rt.index, m))
                    if link is None:
                        v.done = begin + p
                        self.completed.append(v)
                    else:
                        v.arr = begin + p + link.travel_time
                        self.ints[link.dst[0]].add(link.dst[1], v)

    def _check(self):
        if self.injected != len(self.completed) + self.in_network():
            raise InvariantViolation(
                f"conservation broken at t={self.now}: {self.injected} injected, "
                f"{len(self.completed)} completed, {self.in_network()} in network")
        for rt in self.ints:
            if rt.phase == GREEN:
                if not rt.green_connections() <= rt.plan.stages[rt.stage].connections:
                    raise InvariantViolation("green connections outside the active stage")
            elif rt.green_connections():
                raise InvariantViolation("green shown during intergreen")

    def step(self) -> "NetworkState":
        t = self.now
        t_end = t + self.dt
        if self.step_index % max(1, round(1.0 / self.dt)) == 0:
            self._replan()
        self._signals(t)
        self._inject(min(t_end, self.duration))
        self._serve(t, t_end)
        self.step_index += 1
        self.now = round(t_end, 9)
        if self.check_invariants:
            self._check()
        return self


def step(state: NetworkState, dt: float | None = None) -> NetworkState:
    if dt is not None and abs(dt - state.dt) > EPS:
        raise ValueError("dt is fixed when the NetworkState is created")
    return state.step()


def check_signal_log(rt: IntersectionRuntime) -> list[str]:
    """Safety and min/max-green violations in an intersection's signal history."""
    out = []
    stages = rt.plan.stages
    for a, b in zip(rt.log, rt.log[1:]):
        st = stages[a.stage]
        if a.green_end is None:
            out.append(f"stage {a.stage} at {a.green_start} never ended")
            continue
        dur = a.green_end - a.green_start
        if dur < st.min_green - 1e-6:
            out.append(f"stage {a.stage} green {dur:.2f}s below min {st.min_green}")
        if dur > st.max_green + 1e-6:
            out.append(f"stage {a.stage} green {dur:.2f}s above max {st.max_green}")
        if b.green_start - a.green_end < st.intergreen - 1e-6:
            out.append(f"stage change at {a.green_end} without intergreen")
    return out


# ----------------------------------------------------------------------------- metrics

@dataclass
class SimMetrics:
    avg_delay: float = 0.0
    std_delay: float = 0.0
    avg_stops: float = 0.0
    std_stops: float = 0.0
    vehicles_completed: int = 0
    per_intersection: dict = field(default_factory=dict)
    injected: int = 0
    solves: int = 0
    planner_timeouts: int = 0


def _mean_std(xs):
    if not xs:
        return 0.0, 0.0
    return statistics.fmean(xs), (statistics.pstdev(xs) if len(xs) > 1 else 0.0)


def collect_metrics(state: NetworkState) -> SimMetrics:
    done = state.completed
    d_mean, d_std = _mean_std([v.delay for v in done])
    s_mean, s_std = _mean_std([v.stops for v in done])
    per = {}
    for rt in state.ints:
        visits = [(b - a, st) for v in done for (i, a, b, st) in v.visits if i == rt.index]
        dm, ds = _mean_std([x[0] for x in visits])
        sm, ss = _mean_std([float(x[1]) for x in visits])
        per[rt.index] = dict(avg_delay=dm, std_delay=ds, avg_stops=sm, std_stops=ss, vehicles=len(visits))
    return SimMetrics(d_mean, d_std, s_mean, s_std, len(done), per, state.injected,
                      state.solves, state.planner_timeouts)


def run_scenario(net: NetworkModel, policies, duration: float, seed: int, dt: float = 0.1,
                 drain: float = 600.0, check_invariants: bool = True, on_step=None) -> SimMetrics:
    """Closed-loop run: demand for ``duration`` seconds, then up to ``drain`` seconds to clear."""
    state = NetworkState(net, policies, seed, duration, dt, check_invariants)
    n_steps = int(math.ceil((duration + drain) / dt - 1e-9))
    for _ in range(n_steps):
        state.step()
        if on_step is not None:
            on_step(state)
        if state.now >= duration and state.in_network() == 0 and state.next_entry >= len(state.entries):
            break
    if check_invariants:
        for rt in state.ints:
            rt.log[-1].green_end = rt.log[-1].green_end or state.now
            problems = check_signal_log(rt)
            if problems:
                raise InvariantViolation(f"intersection {rt.index}: {problems[0]}")
    return collect_metrics(state)


def run_repeated(net: NetworkModel, policies, duration: float, seeds, **kw) -> list[SimMetrics]:
    return [run_scenario(net, policies, duration, s, **kw) for s in seeds]


# ----------------------------------------------------------------------------- scenario files

PRESETS = {"single": single_intersection, "corridor": corridor}


def _policy_from_dict(doc: dict) -> PolicySpec:
    kind = doc.get("kind", "astar")
    cfg = SearchConfig(heuristic=doc.get("heuristic", "pdwspt"), checks=doc.get("checks", "dominance-minmax"),
                       time_limit_ms=doc.get("time_limit_ms", 2000.0 if doc.get("max_expansions") is None else None),
                       max_expansions=doc.get("max_expansions"), h_sat=doc.get("h_sat", 2.0))
    return PolicySpec(kind, cfg, float(doc.get("horizon", 60.0)), float(doc.get("cycle", 80.0)),
                      float(doc.get("gap_out", 3.0)), float(doc.get("detector_lead", 2.0)),
                      doc.get("max_extension"), doc.get("label", ""), float(doc.get("noise", 0.0)))


def policy_to_dict(spec: PolicySpec) -> dict:
    c = spec.config
    return {"kind": spec.kind, "heuristic": c.heuristic, "checks": sorted(c.checks),
            "time_limit_ms": c.time_limit_ms, "max_expansions": c.max_expansions, "h_sat": c.h_sat,
            "horizon": spec.horizon, "cycle": spec.cycle, "gap_out": spec.gap_out,
            "detector_lead": spec.detector_lead, "max_extension": spec.max_extension,
            "label": spec.label, "noise": spec.noise}


@dataclass
class Scenario:
    net: NetworkModel
    policies: list
    duration: float = 900.0
    seeds: tuple = (0,)


def scenario_from_dict(doc: dict) -> Scenario:
    """Build a scenario from a preset reference or an explicit network description."""
    if doc.get("format_version", 1) != 1:
        raise InstanceFormatError(f"unsupported scenario format_version {doc.get('format_version')!r}")
    try:
        if "preset" in doc:
            builder = PRESETS[doc["preset"]]
            kw = {"level": doc.get("demand", "high"), "cycle_enforced": doc.get("cycle_enforced", True)}
            if doc["preset"] == "corridor":
                kw["n"] = int(doc.get("intersections", 3))
            net = builder(**kw)
            policy_docs = [doc.get("policy", {})] * len(net.plans)
        else:
            ints = doc["intersections"]
            plans = tuple(plan_from_dict(d["plan"], f"intersections[{k}].plan") for k, d in enumerate(ints))
            links = tuple(Link(tuple(x["from"]), tuple(x["to"]), float(x["travel_time"]))
                          for x in doc.get("links", []))
            demand = tuple(Demand(int(x["intersection"]), int(x["connection"]), float(x["rate"]))
                           for x in doc.get("demand", []))
            net = NetworkModel(plans, links, demand, float(doc.get("approach_time", 30.0)),
                               float(doc.get("crossing_time", 1.0)), float(doc.get("h_sat", 2.0)),
                               tuple(d.get("name", f"int{k}") for k, d in enumerate(ints)))
            policy_docs = [d.get("policy", doc.get("policy", {})) for d in ints]
    except KeyError as e:
        raise InstanceFormatError(f"scenario: missing key {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise InstanceFormatError(f"scenario: {e}") from None
    return Scenario(net, [_policy_from_dict(p) for p in policy_docs], float(doc.get("duration", 900.0)),
                    tuple(doc.get("seeds", (0,))))


def scenario_to_dict(sc: Scenario) -> dict:
    net = sc.net
    return {
        "format_version": 1,
        "duration": sc.duration,
        "seeds": list(sc.seeds),
        "approach_time": net.approach_time,
        "crossing_time": net.crossing_time,
        "h_sat": net.h_sat,
        "intersections": [{"name": net.names[k] if k < len(net.names) else f"int{k}",
                           "plan": plan_to_dict(p), "policy": policy_to_dict(sc.policies[k])}
                          for k, p in enumerate(net.plans)],
        "links": [{"from": list(x.src), "to": list(x.dst), "travel_time": x.travel_time} for x in net.links],
        "demand": [{"intersection": d.intersection, "connection": d.connection, "rate": d.rate}
                   for d in net.demand],
    }


def load_scenario(path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    return scenario_from_dict(doc)


METRIC_COLUMNS = ["run", "seed", "policy", "intersection", "avg_delay", "std_delay", "avg_stops",
                  "std_stops", "vehicles"]


def metrics_rows(metrics: SimMetrics, run: int, seed: int, policy: str) -> list:
    """One row per intersection plus a network aggregate row."""
    rows = []
    for i, d in sorted(metrics.per_intersection.items()):
        rows.append([run, seed, policy, str(i), d["avg_delay"], d["std_delay"], d["avg_stops"],
                     d["std_stops"], d["vehicles"]])
    rows.append([run, seed, policy, "network", metrics.avg_delay, metrics.std_delay, metrics.avg_stops,
                 metrics.std_stops, metrics.vehicles_completed])
    return rows


def metrics_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()
