import random

import pytest

from lanesched.domain import ControllerState, CyclePlan, Instance, StageDefinition, Vehicle
from lanesched.generate import random_instance


def stage(sid, conns, min_g=2.0, max_g=20.0, inter=2.0):
    return StageDefinition(sid, frozenset(conns), min_g, max_g, inter)


def eight_stage_plan(cycle_enforced=True):
    """Eight connections, eight stages; each stage pairs two connections."""
    pairs = [(1, 5), (1, 6), (2, 6), (3, 7), (3, 8), (4, 8), (4, 7), (2, 5)]
    return CyclePlan(tuple(stage(k, (a - 1, b - 1)) for k, (a, b) in enumerate(pairs)), 8, cycle_enforced)


def two_stage_plan(cycle_enforced=True, min_g=2.0, max_g=20.0, inter=2.0):
    """Connection 0 in stage 0, connection 1 in stage 1."""
    return CyclePlan((stage(0, {0}, min_g, max_g, inter), stage(1, {1}, min_g, max_g, inter)), 2, cycle_enforced)


def one_stage_plan(max_g=20.0, min_g=2.0):
    return CyclePlan((stage(0, {0}, min_g, max_g, 2.0),), 1)


def make_instance(plan, vehicles, stage_index=0, elapsed=0.0, **kw):
    ctrl = ControllerState(stage_index, min(plan.stages[stage_index].connections), -elapsed, elapsed,
                           (0,) * plan.num_connections)
    vs = [v if isinstance(v, Vehicle) else Vehicle(*v) for v in vehicles]
    return Instance.from_vehicles(plan, vs, ctrl, **kw)


def small_suite(count, seed, connections=(2, 4), stages=(2, 4), vehicles=(4, 8)):
    """Seeded small instances alternating enforced and lifted cycles."""
    rng = random.Random(seed)
    out = []
    for k in range(count):
        M = rng.randint(*connections)
        S = rng.randint(stages[0], min(stages[1], M))
        V = rng.randint(*vehicles)
        out.append(random_instance(rng, M, S, V, cycle_enforced=(k % 2 == 0)))
    return out


@pytest.fixture
def eight_stage():
    return eight_stage_plan()


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
