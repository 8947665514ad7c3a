"""Seeded random instances and benchmark suites."""
from __future__ import annotations

import random
from pathlib import Path

from .domain import ControllerState, CyclePlan, Instance, StageDefinition, Vehicle
from .instance_io import write_instance

DESK_SUITE = dict(connections=(3, 6), vehicles=(4, 20), count=200)
LARGE_SUITE = dict(connections=(3, 6), vehicles=(4, 46), count=1200)


def random_plan(rng: random.Random, num_connections: int, num_stages: int,
                cycle_enforced: bool = True, overlap: float = 0.25) -> CyclePlan:
    """Stages cover every connection; some connections appear in a second stage."""
    members = [set() for _ in range(num_stages)]
    order = list(range(num_connections))
    rng.shuffle(order)
    for k, m in enumerate(order):
        members[k % num_stages if k < num_stages else rng.randrange(num_stages)].add(m)
    for s in members:
        if not s:
            s.add(rng.randrange(num_connections))
    for m in range(num_connections):
        if num_stages > 1 and rng.random() < overlap:
            members[rng.randrange(num_stages)].add(m)
    stages = []
    for k, conns in enumerate(members):
        min_g = rng.choice([2.0, 3.0, 4.0, 5.0])
        stages.append(StageDefinition(k, frozenset(conns), min_g, rng.choice([15.0, 20.0, 25.0, 30.0]),
                                      rng.choice([2.0, 3.0, 4.0])))
    return CyclePlan(tuple(stages), num_connections, cycle_enforced)


def random_instance(rng: random.Random, num_connections: int, num_stages: int, num_vehicles: int,
                    cycle_enforced: bool = True, spread: float = 2.5) -> Instance:
    plan = random_plan(rng, num_connections, num_stages, cycle_enforced)
    span = spread * num_vehicles
    vehicles = []
    for _ in range(num_vehicles):
        m = rng.randrange(num_connections)
        arr = 0.0 if rng.random() < 0.15 else round(rng.uniform(0.0, span), 1)
        dur = rng.choice([1.0, 1.5, 2.0, 2.5])
        vehicles.append(Vehicle(m, arr, round(arr + dur, 1)))
    stage = rng.randrange(num_stages)
    elapsed = float(rng.randint(0, int(plan.stages[stage].min_green) + 3))
    controller = ControllerState(stage, min(plan.stages[stage].connections), -elapsed, elapsed,
                                 (0,) * num_connections)
    return Instance.from_vehicles(plan, vehicles, controller, horizon=max(60.0, span))


def generate_suite(connections=(3, 6), vehicles=(4, 20), count=200, seed=0,
                   stages=(2, 4), cycle_enforced=True) -> list[Instance]:
    """Deterministic list of instances under ``seed``."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        M = rng.randint(*connections)
        S = rng.randint(stages[0], min(stages[1], M))
        V = rng.randint(*vehicles)
        out.append(random_instance(rng, M, S, V, cycle_enforced))
    return out


def write_suite(instances, directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, inst in enumerate(instances):
        p = d / f"instance_{k:04d}.json"
        write_instance(inst, p)
        paths.append(p)
    return paths
