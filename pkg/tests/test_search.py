import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from lanesched.domain import ControllerState, CyclePlan, Instance, ValidationError, Vehicle
from lanesched.oracle import brute_force_optimal
from lanesched.search import (ContractError, DominanceTable, InvariantError, SearchConfig, SearchState, SearchStats, a_star,
                              equivalence_check, expand_neighbors, is_goal, queueing_delay, root_state, solve, trace_schedule,
                              update_state)

from conftest import eight_stage_plan, make_instance, one_stage_plan, small_suite, stage, two_stage_plan


# ---------------------------------------------------------------- transitions

def test_root_state_from_controller():
    inst = make_instance(two_stage_plan(), [(0, 1.0, 2.0)])
    root = root_state(inst)
    assert root.t == (0.0, 0.0) and root.d == 0.0 and root.n == (0, 0) and root.sd == 0.0


def test_empty_instance_is_goal():
    inst = make_instance(two_stage_plan(), [])
    assert is_goal(root_state(inst), inst)
    schedule, stats = a_star(inst)
    assert schedule.total_delay == 0.0 and len(schedule) == 0 and stats.expansions == 0 and stats.optimal


def test_root_at_min_green_may_switch():
    plan = two_stage_plan(min_g=3.0)
    inst = make_instance(plan, [(0, 0.0, 1.0), (1, 0.0, 1.0)], elapsed=3.0)
    kids = expand_neighbors(root_state(inst), inst, SearchConfig(checks="minmax"), None, SearchStats())
    assert {c.connection for c in kids} == {0, 1}


def test_queueing_delay_cases():
    assert queueing_delay(0.0, 0, Vehicle(0, 5.0, 7.0)) == (7.0, 0)
    assert queueing_delay(10.0, 1, Vehicle(0, 5.0, 6.0), h_sat=2.0) == (7.0, 2)
    # strict inequality: a lane freed exactly on arrival does not queue
    assert queueing_delay(5.0, 0, Vehicle(0, 5.0, 6.0)) == (6.0, 0)


def test_update_unimpeded_vehicle():
    inst = make_instance(one_stage_plan(), [(0, 2.0, 4.0)])
    child = update_state(root_state(inst), 0, inst)
    assert child.d == 0.0 and child.t == (4.0,) and child.n == (1,) and child.q == (0,)


def test_update_queued_vehicle():
    inst = make_instance(one_stage_plan(), [(0, 0.0, 6.0), (0, 2.0, 4.0)])
    s1 = update_state(root_state(inst), 0, inst)
    assert s1.t == (6.0,)
    s2 = update_state(s1, 0, inst, h_sat=2.0)
    assert s2.d == pytest.approx(4.0) and s2.t == (8.0,) and s2.q == (1,)


def test_update_keeps_stage_for_member_connection():
    plan = eight_stage_plan()
    # third stage holds connections 2 and 6 (indices 1 and 5)
    inst = make_instance(plan, [(1, 0.0, 1.0), (1, 3.0, 4.0)], stage_index=2)
    s1 = update_state(root_state(inst), 1, inst)
    s2 = update_state(s1, 1, inst)
    assert s1.stage == s2.stage == 2 and not s2.opened


def test_update_rejects_exhausted_or_out_of_order():
    inst = make_instance(two_stage_plan(), [(0, 0.0, 1.0), (0, 5.0, 6.0)])
    root = root_state(inst)
    with pytest.raises(ContractError):
        update_state(root, 1, inst)
    second = inst.sequences[0].clusters[1]
    with pytest.raises(ContractError):
        update_state(root, second, inst)
    assert update_state(root, inst.sequences[0].clusters[0], inst).n == (1, 0)


def test_max_green_break_truncates_cluster():
    plan = two_stage_plan(max_g=5.0)
    inst = make_instance(plan, [(0, 0.0, 2.0), (0, 0.5, 2.5), (0, 1.0, 3.0), (0, 1.5, 3.5)])
    assert len(inst.sequences[0].clusters) == 1
    s1 = update_state(root_state(inst), 0, inst, h_sat=2.0)
    # finishes 2, 4 fit; the third would end at 6 > 5
    assert s1.n == (2, 0) and s1.t[0] == 4.0 and s1.d == pytest.approx(1.5) and s1.sd == 4.0
    s2 = update_state(s1, 0, inst, h_sat=2.0)
    # the tail waits a full cycle: both intergreens plus the other stage's min green
    assert s2.opened and s2.stage == 0 and s2.start == pytest.approx(4.0 + 6.0)
    assert s2.n == (4, 0) and s2.d == pytest.approx(1.5 + 9.0 + 10.5)


def test_first_vehicle_may_exceed_max_green_in_new_stage():
    plan = two_stage_plan(max_g=3.0)
    inst = make_instance(plan, [(1, 0.0, 5.0)])
    child = update_state(root_state(inst), 1, inst)
    assert child.fallback and child.n == (0, 1)
    schedule, _ = a_star(inst)
    assert schedule.segments[-1].max_exceeded


# ---------------------------------------------------------------- pruning checks

def _state(d, t, stage=0, start=0.0, sd=0.0, n=(0, 0), m=0):
    return SearchState(stage, m, sd, start, tuple(t), (0,) * len(t), d, 0.0, n)


@pytest.fixture
def empty_two():
    return make_instance(two_stage_plan(), [])


def test_dominance_evicts_dominated(empty_two):
    table = DominanceTable(empty_two, 2.0)
    old = _state(6.0, (3, 5))
    assert table.check(old)
    new = _state(5.0, (3, 4))
    assert table.check(new)
    assert old.dead and table.table[((0, 0), 0)] == [new]


def test_dominance_incomparable_both_kept(empty_two):
    table = DominanceTable(empty_two, 2.0)
    a, b = _state(6.0, (3, 5)), _state(5.0, (3, 6))
    assert table.check(a) and table.check(b)
    assert not a.dead and len(table.table[((0, 0), 0)]) == 2


def test_dominance_tie_prunes_newcomer(empty_two):
    table = DominanceTable(empty_two, 2.0)
    assert table.check(_state(5.0, (3, 4)))
    assert not table.check(_state(5.0, (3, 4)))


def test_dominance_needs_same_stage_timing(empty_two):
    table = DominanceTable(empty_two, 2.0)
    assert table.check(_state(5.0, (3, 4), start=0.0))
    assert table.check(_state(6.0, (3, 5), start=1.0))


def test_strict_dominance_compares_queues(empty_two):
    table = DominanceTable(empty_two, 2.0, strict=True)
    a = _state(5.0, (3, 4))
    a.q = (2, 0)
    assert table.check(a)
    assert table.check(_state(6.0, (3, 5)))


def test_equivalence_prunes_reordered_paths():
    plan = CyclePlan((stage(0, {0, 1}), stage(1, {2})), 3)
    inst = make_instance(plan, [(0, 0, 1), (1, 0, 1), (0, 3, 4), (2, 0, 1)])
    table = DominanceTable(inst, 2.0)
    parent_a = _state(1.0, (4, 1, 0), n=(2, 1, 0), m=0)
    parent_b = _state(2.0, (4, 2, 0), n=(2, 1, 0), m=0)
    child_a = _state(3.0, (4, 1, 9), stage=1, start=8.0, n=(2, 1, 1), m=2)
    child_b = _state(4.0, (4, 2, 9), stage=1, start=8.0, n=(2, 1, 1), m=2)
    child_a.opened = child_b.opened = True
    assert equivalence_check(child_a, parent_a, table)
    assert not equivalence_check(child_b, parent_b, table)
    lifted = make_instance(plan.with_cycle(False), [(0, 0, 1), (2, 0, 1)])
    table2 = DominanceTable(lifted, 2.0)
    assert equivalence_check(child_a, parent_a, table2) and equivalence_check(child_b, parent_b, table2)


def test_min_green_restricts_to_same_stage():
    plan = two_stage_plan(min_g=10.0)
    inst = make_instance(plan, [(0, 0.0, 1.0), (0, 1.5, 2.5), (1, 0.0, 1.0)])
    stats = SearchStats()
    kids = expand_neighbors(root_state(inst), inst, SearchConfig(checks="minmax"), None, stats)
    assert [c.connection for c in kids] == [0] and stats.pruned_minmax == 1


def test_max_set_used_when_nothing_else():
    plan = two_stage_plan(max_g=3.0, min_g=0.0)
    inst = make_instance(plan, [(1, 0.0, 5.0)])
    kids = expand_neighbors(root_state(inst), inst, SearchConfig(checks="minmax"), None, SearchStats())
    assert len(kids) == 1 and kids[0].sd > 3.0


# ---------------------------------------------------------------- search

def test_trace_single_cluster():
    inst = make_instance(one_stage_plan(), [(0, 0.0, 1.0), (0, 0.5, 1.5)])
    schedule, _ = a_star(inst)
    assert len(schedule.entries) == 1
    e = schedule.entries[0]
    assert schedule.total_delay == pytest.approx(sum(max(0.0, b - a) for b, a in zip(e.begins, (0.0, 0.5))))


def test_trace_rejects_broken_chain():
    inst = make_instance(one_stage_plan(), [(0, 0.0, 1.0)])
    child = update_state(root_state(inst), 0, inst)
    child.parent = SearchState(0, 0, 0, 0, (0.0,), (0,), 0, 0, (0,), parent=None, job=(0, 0, 1, (0.0,)))
    with pytest.raises(InvariantError):
        trace_schedule(child, inst)


def test_solve_validates_plan():
    inst = make_instance(two_stage_plan(), [(0, 0.0, 1.0)])
    assert solve(inst)[1].optimal
    with pytest.raises(ValueError):
        SearchConfig(heuristic="bogus")
    with pytest.raises(ValueError):
        SearchConfig(checks={"nope"})


def test_budget_returns_complete_schedule():
    inst = small_suite(1, 7, vehicles=(12, 12))[0]
    schedule, stats = a_star(inst, SearchConfig(heuristic="none", checks="none", max_expansions=5))
    assert not stats.optimal and stats.timed_out
    assert sum(e.end - e.first for e in schedule.entries) == inst.num_vehicles


@pytest.mark.parametrize("inst", small_suite(12, 3), ids=lambda i: f"M{i.num_connections}V{i.num_vehicles}")
def test_dijkstra_matches_pdwspt(inst):
    a = a_star(inst, SearchConfig("none", "none"))[0].total_delay
    b = a_star(inst, SearchConfig("pdwspt", "none"))[0].total_delay
    assert a == pytest.approx(b, abs=1e-6)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10_000))
def test_search_matches_oracle_and_schedule_is_consistent(seed):
    inst = small_suite(1, seed, vehicles=(2, 7))[0]
    best = brute_force_optimal(inst).optimal_delay
    schedule, stats = a_star(inst, SearchConfig("pdwspt", "dominance-minmax"))
    assert stats.optimal
    assert schedule.total_delay == pytest.approx(best, abs=1e-6)
    arrays = inst.arrays
    # FIFO per connection and non-overlapping service
    for m in range(inst.num_connections):
        mine = sorted((e for e in schedule.entries if e.connection == m), key=lambda e: e.first)
        assert [e.first for e in mine] == sorted(e.first for e in mine)
        begins = [b for e in mine for b in e.begins]
        assert begins == sorted(begins)
        assert len(begins) == arrays.counts[m]
        assert all(b >= arrays.arr[m][k] - 1e-9 for k, b in enumerate(begins))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_clocks_monotone_along_path(seed):
    inst = small_suite(1, seed)[0]
    seen = []
    a_star(inst, SearchConfig("pdwspt", "none"), on_expand=seen.append)
    for s in seen[:50]:
        p = s.parent
        if p is not None:
            assert all(a <= b + 1e-9 for a, b in zip(p.t, s.t))
            assert p.d <= s.d + 1e-9


def test_controller_with_future_start():
    plan = two_stage_plan()
    ctrl = ControllerState(1, 1, 3.0, 0.0, (0, 0))
    inst = Instance.from_vehicles(plan, [Vehicle(1, 0.0, 1.0)], ctrl)
    schedule, _ = a_star(inst)
    assert schedule.total_delay == pytest.approx(3.0)


def test_connection_in_no_stage_is_rejected():
    with pytest.raises(ValidationError):
        CyclePlan((stage(0, {0}),), 2)
