"""Problem-instance model for lane-based intersection scheduling.

Connections and stages are addressed by zero-based position. A stage's
``id`` is a label carried through files; everything inside the solver uses
the stage's position in ``CyclePlan.stages``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

EPS = 1e-9

DEFAULT_SEPARATION_GAP = 1.0
DEFAULT_CLUSTER_CAP = 10.0


class ValidationError(ValueError):
    """Raised when an instance, plan or detection violates an invariant."""


@dataclass(frozen=True)
class Vehicle:
    connection: int
    arr: float
    dep: float
    weight: float = 1.0
    queued: bool = False
    vid: int | None = None

    def __post_init__(self):
        if not self.dep > self.arr:
            raise ValidationError(
                f"vehicle on connection {self.connection} has dep {self.dep} <= arr {self.arr}")
        if self.arr < 0:
            raise ValidationError(f"vehicle on connection {self.connection} has negative arr {self.arr}")
        if not self.weight > 0:
            raise ValidationError(f"vehicle on connection {self.connection} has weight {self.weight} <= 0")

    @property
    def dur(self) -> float:
        return self.dep - self.arr


@dataclass(frozen=True)
class Cluster:
    connection: int
    vehicles: tuple[Vehicle, ...]

    def __post_init__(self):
        if not self.vehicles:
            raise ValidationError("empty cluster")
        if any(v.connection != self.connection for v in self.vehicles):
            raise ValidationError(f"cluster on connection {self.connection} mixes connections")

    @property
    def weight(self) -> float:
        return sum(v.weight for v in self.vehicles)

    @property
    def first_arr(self) -> float:
        return self.vehicles[0].arr

    def __len__(self):
        return len(self.vehicles)


@dataclass(frozen=True)
class ConnectionSequence:
    connection: int
    clusters: tuple[Cluster, ...] = ()

    @property
    def vehicles(self) -> tuple[Vehicle, ...]:
        return tuple(v for c in self.clusters for v in c.vehicles)

    def __len__(self):
        return sum(len(c) for c in self.clusters)


@dataclass(frozen=True)
class StageDefinition:
    id: int
    connections: frozenset[int]
    min_green: float
    max_green: float
    intergreen: float

    def __post_init__(self):
        object.__setattr__(self, "connections", frozenset(self.connections))


@dataclass(frozen=True)
class CyclePlan:
    stages: tuple[StageDefinition, ...]
    num_connections: int
    cycle_enforced: bool = True
    # None follows cycle_enforced
    strict_traversal: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        violations = validate_plan(self)
        if violations:
            raise ValidationError("; ".join(violations))

    @property
    def strict(self) -> bool:
        return self.cycle_enforced if self.strict_traversal is None else self.strict_traversal

    def __len__(self):
        return len(self.stages)

    def position(self, stage_id: int) -> int:
        for i, s in enumerate(self.stages):
            if s.id == stage_id:
                return i
        raise ValidationError(f"unknown stage id {stage_id}")

    def with_cycle(self, enforced: bool, strict_traversal: bool | None = None) -> "CyclePlan":
        return CyclePlan(self.stages, self.num_connections, enforced, strict_traversal)

    @cached_property
    def tables(self) -> "PlanTables":
        return PlanTables(self)


class PlanTables:
    """Precomputed stage-graph lookups used on the search hot path."""

    def __init__(self, plan: CyclePlan):
        S, M = len(plan.stages), plan.num_connections
        self.num_stages = S
        self.min_green = [s.min_green for s in plan.stages]
        self.max_green = [s.max_green for s in plan.stages]
        self.intergreen = [s.intergreen for s in plan.stages]
        self.members = [s.connections for s in plan.stages]
        self.in_stage = [[m in s.connections for m in range(M)] for s in plan.stages]
        self.nearest = [[_nearest(m, s, plan, allow_stay=True) for m in range(M)] for s in range(S)]
        self.nearest_move = [[_nearest(m, s, plan, allow_stay=False) for m in range(M)] for s in range(S)]
        self.switch = [[_min_switch(a, b, plan) for b in range(S)] for a in range(S)]
        self.reopen = [_reopen_cost(s, plan) for s in range(S)]
        # conflict: no stage holds both connections
        self.compatible = [[any(a in st and b in st for st in self.members) for b in range(M)]
                           for a in range(M)]


def _nearest(m: int, s_p: int, plan: CyclePlan, allow_stay: bool) -> int | None:
    S = len(plan.stages)
    if plan.cycle_enforced:
        start = 0 if allow_stay else 1
        for k in range(start, S + 1):
            s = (s_p + k) % S
            if m in plan.stages[s].connections:
                return s
        return None
    if allow_stay and m in plan.stages[s_p].connections:
        return s_p
    for s in range(S):
        if s != s_p and m in plan.stages[s].connections:
            return s
    if m in plan.stages[s_p].connections:
        return s_p
    return None


def _min_switch(s_p: int, s: int, plan: CyclePlan) -> float:
    if s == s_p:
        return 0.0
    stages = plan.stages
    if not plan.cycle_enforced:
        return stages[s_p].intergreen
    S = len(stages)
    total = stages[s_p].intergreen
    k = (s_p + 1) % S
    while k != s:
        total += stages[k].intergreen
        if plan.strict:
            total += stages[k].min_green
        k = (k + 1) % S
    return total


def _reopen_cost(s: int, plan: CyclePlan) -> float:
    """Time from the end of stage ``s`` until ``s`` can be green again."""
    if not plan.cycle_enforced or len(plan.stages) == 1:
        return plan.stages[s].intergreen
    total = 0.0
    for k, st in enumerate(plan.stages):
        total += st.intergreen
        if k != s and plan.strict:
            total += st.min_green
    return total


def nearest_stage(m: int, s_p: int, plan: CyclePlan) -> int:
    """Stage that serves connection ``m`` next when the signal is in stage ``s_p``."""
    if not 0 <= m < plan.num_connections:
        raise ValidationError(f"connection {m} outside plan")
    s = plan.tables.nearest[s_p][m]
    if s is None:
        raise ValidationError(f"connection {m} is served by no stage")
    return s


def min_switch(s_p: int, s: int, plan: CyclePlan) -> float:
    return plan.tables.switch[s_p][s]


def validate_plan(plan: CyclePlan) -> list[str]:
    """Return every invariant violation of ``plan``; an empty list means ok."""
    out = []
    if plan.num_connections < 0:
        out.append(f"num_connections {plan.num_connections} < 0")
    if not plan.stages:
        out.append("plan has no stages")
    ids = [s.id for s in plan.stages]
    if len(set(ids)) != len(ids):
        out.append(f"duplicate stage ids {sorted(i for i in set(ids) if ids.count(i) > 1)}")
    covered = set()
    for s in plan.stages:
        if not s.connections:
            out.append(f"stage {s.id} has no connections")
        if s.min_green < 0:
            out.append(f"stage {s.id} min_green {s.min_green} < 0")
        if s.min_green > s.max_green:
            out.append(f"stage {s.id} min_green {s.min_green} > max_green {s.max_green}")
        if s.intergreen < 0:
            out.append(f"stage {s.id} intergreen {s.intergreen} < 0")
        for m in s.connections:
            if not 0 <= m < plan.num_connections:
                out.append(f"stage {s.id} names unknown connection {m}")
        covered |= s.connections
    for m in range(plan.num_connections):
        if m not in covered:
            out.append(f"connection {m} appears in no stage")
    return out


@dataclass(frozen=True)
class ControllerState:
    current_stage: int = 0
    current_connection: int = 0
    stage_start: float = 0.0
    elapsed: float = 0.0
    queues: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "queues", tuple(self.queues))
        if self.elapsed < 0:
            raise ValidationError(f"controller elapsed {self.elapsed} < 0")
        if any(q < 0 for q in self.queues):
            raise ValidationError("negative controller queue count")


def build_clusters(detections: Iterable, separation_gap: float = DEFAULT_SEPARATION_GAP,
                   cluster_cap: float = DEFAULT_CLUSTER_CAP,
                   num_connections: int | None = None) -> list[ConnectionSequence]:
    """Group detections into FIFO cluster sequences, one per connection.

    ``detections`` holds ``Vehicle`` objects or ``(connection, arr, dep[, weight])``
    tuples. A vehicle joins the open cluster when its gap to the previous
    arrival is below ``separation_gap`` and the cluster span stays within
    ``cluster_cap``.
    """
    if not separation_gap > 0 or not cluster_cap > 0:
        raise ValidationError("separation_gap and cluster_cap must be positive")
    vehicles = []
    for i, d in enumerate(detections):
        if isinstance(d, Vehicle):
            vehicles.append(d)
            continue
        conn, arr, dep, *rest = d
        try:
            vehicles.append(Vehicle(int(conn), float(arr), float(dep), float(rest[0]) if rest else 1.0))
        except ValidationError as e:
            raise ValidationError(f"detection {i} {tuple(d)}: {e}") from None
    vehicles.sort(key=lambda v: (v.connection, v.arr))
    M = num_connections if num_connections is not None else (
        max((v.connection for v in vehicles), default=-1) + 1)
    per_conn: list[list[Vehicle]] = [[] for _ in range(M)]
    for v in vehicles:
        if v.connection >= M:
            raise ValidationError(f"detection on connection {v.connection} outside {M} connections")
        per_conn[v.connection].append(v)

    out = []
    for m, vs in enumerate(per_conn):
        clusters, cur = [], []
        for v in vs:
            if cur and (v.arr - cur[-1].arr < separation_gap - EPS
                        and v.arr - cur[0].arr <= cluster_cap + EPS):
                cur.append(v)
            else:
                if cur:
                    clusters.append(Cluster(m, tuple(cur)))
                cur = [v]
        if cur:
            clusters.append(Cluster(m, tuple(cur)))
        out.append(ConnectionSequence(m, tuple(clusters)))
    return out


@dataclass(frozen=True)
class Instance:
    plan: CyclePlan
    sequences: tuple[ConnectionSequence, ...]
    controller: ControllerState = field(default_factory=ControllerState)
    horizon: float = 60.0
    separation_gap: float = DEFAULT_SEPARATION_GAP
    cluster_cap: float = DEFAULT_CLUSTER_CAP

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(self.sequences))
        M = self.plan.num_connections
        if len(self.sequences) != M:
            raise ValidationError(f"{len(self.sequences)} sequences for {M} connections")
        for m, seq in enumerate(self.sequences):
            if seq.connection != m:
                raise ValidationError(f"sequence {m} labelled connection {seq.connection}")
            prev = -float("inf")
            for v in seq.vehicles:
                if v.connection != m:
                    raise ValidationError(f"vehicle on connection {v.connection} in sequence {m}")
                if v.arr < prev - EPS:
                    raise ValidationError(f"connection {m} violates FIFO arrival order")
                if v.arr > self.horizon + EPS:
                    raise ValidationError(f"vehicle arr {v.arr} beyond horizon {self.horizon}")
                prev = v.arr
        c = self.controller
        if not 0 <= c.current_stage < len(self.plan.stages):
            raise ValidationError(f"controller stage {c.current_stage} outside plan")
        if c.queues and len(c.queues) != M:
            raise ValidationError(f"controller has {len(c.queues)} queues for {M} connections")

    @classmethod
    def from_vehicles(cls, plan: CyclePlan, vehicles: Sequence, controller: ControllerState | None = None,
                      horizon: float | None = None, separation_gap: float = DEFAULT_SEPARATION_GAP,
                      cluster_cap: float = DEFAULT_CLUSTER_CAP) -> "Instance":
        seqs = build_clusters(vehicles, separation_gap, cluster_cap, plan.num_connections)
        if horizon is None:
            horizon = max([60.0] + [v.arr for s in seqs for v in s.vehicles])
        return cls(plan, tuple(seqs), controller or ControllerState(), horizon, separation_gap, cluster_cap)

    def with_plan(self, plan: CyclePlan) -> "Instance":
        return Instance(plan, self.sequences, self.controller, self.horizon,
                        self.separation_gap, self.cluster_cap)

    @property
    def num_connections(self) -> int:
        return self.plan.num_connections

    @property
    def num_vehicles(self) -> int:
        return sum(len(s) for s in self.sequences)

    @cached_property
    def arrays(self) -> "InstanceArrays":
        return InstanceArrays(self)


class InstanceArrays:
    """Flat per-connection vehicle data and job boundaries for the search."""

    def __init__(self, inst: Instance):
        self.arr, self.dur, self.weight, self.job_end, self.vehicles = [], [], [], [], []
        for seq in inst.sequences:
            vs = seq.vehicles
            self.vehicles.append(vs)
            self.arr.append([v.arr for v in vs])
            self.dur.append([v.dur for v in vs])
            self.weight.append([v.weight for v in vs])
            ends, i = [], 0
            for c in seq.clusters:
                i += len(c)
                ends.extend([i] * len(c))
            self.job_end.append(ends)
        self.counts = tuple(len(a) for a in self.arr)
        self.total = sum(self.counts)
