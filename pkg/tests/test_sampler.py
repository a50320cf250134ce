import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import BIN, mutual_pair, path3, single_event, verification_instances
from varlll.errors import DomainTooLarge, EventNeverOccurs, SnapshotsMissing
from varlll.model import EventSpec, EventSystem, VariableSpec
from varlll.rng import SplitMix64
from varlll.sampler import (
    ExecutionTrace,
    Kind,
    Outcome,
    ResampleRecord,
    check_trace,
    randomness_test,
    reconstruct_witness_forest,
    run,
    verify_locality,
    verify_progress,
)


def replay_single_event_calls(seed):
    """Calls for "X_0 = 0" on a fair bit, read straight off the bit stream."""
    rng = SplitMix64(seed)
    bits = iter(lambda: rng.next_u64() >> 63, None)
    if next(bits) == 1:
        return 0
    calls = 1
    while next(bits) == 0:
        calls += 1
    return calls


def test_no_event_can_occur():
    system = EventSystem((BIN, BIN), (EventSpec.extensional([0], []), EventSpec.extensional([0, 1], [])))
    trace = run(system, seed=3)
    assert trace.outcome is Outcome.SUCCESS and trace.calls == 0
    rng = SplitMix64(3)
    assert trace.final_assignment == tuple(rng.next_u64() >> 63 for _ in range(2))


@pytest.mark.parametrize("seed", range(40))
def test_single_event_matches_hand_replay(seed):
    trace = run(single_event(), seed)
    assert trace.outcome is Outcome.SUCCESS
    assert trace.final_assignment == (1,)
    assert trace.calls == replay_single_event_calls(seed)
    assert len(trace.phase_boundaries) == (1 if trace.calls else 0)
    kinds = [r.kind for r in trace.records]
    assert kinds[:1] == [Kind.ROOT][: len(kinds)] and set(kinds[1:]) <= {Kind.RECURSIVE}
    # each recursive call is nested in the previous one
    assert [r.parent for r in trace.records[1:]] == list(range(trace.calls - 1))


@pytest.mark.parametrize("name,system,max_calls", verification_instances(), ids=lambda x: x if isinstance(x, str) else "")
def test_success_means_no_event_occurs(name, system, max_calls):
    for seed in range(20):
        trace = run(system, seed, max_calls, snapshots=True)
        if trace.outcome is Outcome.SUCCESS:
            assert system.occurring(trace.final_assignment) == []
        else:
            assert trace.calls == max_calls
        assert all(check_trace(trace, system).values())


def test_determinism_byte_identical():
    system = path3()
    for seed in (0, 1, 2**63 + 5):
        assert run(system, seed).to_json() == run(system, seed).to_json()


def test_trace_json_field_order():
    trace = run(mutual_pair(), 4)
    assert trace.to_json().startswith('{"seed":4,"outcome":"SUCCESS","final_assignment":')
    assert list(trace.to_dict()) == ["seed", "outcome", "final_assignment", "records", "phase_boundaries"]


def test_cutoff_semantics():
    system = single_event()
    # find a seed whose initial draw and first resample both give 0
    seed = next(s for s in itertools.count() if replay_single_event_calls(s) >= 2)
    trace = run(system, seed, max_calls=1)
    assert trace.outcome is Outcome.CUTOFF and trace.calls == 1
    # a budget that is exactly enough is not a cutoff
    need = replay_single_event_calls(seed)
    assert run(system, seed, max_calls=need).outcome is Outcome.SUCCESS


def test_deep_nesting_uses_no_call_stack():
    # Pr = 1 - 10**-5: every call nests inside the previous one
    size = 10**5
    system = EventSystem((VariableSpec.uniform(size),), (EventSpec.extensional([0], [(k,) for k in range(size - 1)]),))
    trace = run(system, seed=1, max_calls=5000)
    assert trace.outcome is Outcome.CUTOFF and trace.calls == 5000
    assert trace.records[-1].parent == trace.calls - 2


class TestProgress:
    def test_generated_traces_clean(self):
        for name, system, mc in verification_instances():
            for seed in range(10):
                trace = run(system, seed, mc, snapshots=True)
                assert verify_progress(trace, system) == []
                assert verify_locality(trace, system) == []

    def test_negative_control(self):
        system = EventSystem((BIN, BIN), (EventSpec.extensional([0], [(0,)]), EventSpec.extensional([1], [(0,)])))
        # event 2 does not occur before the call but does afterwards
        rec = ResampleRecord(0, 0, Kind.ROOT, None, pre=(0, 1), resampled=(1, 0), post=(1, 0))
        trace = ExecutionTrace(0, Outcome.SUCCESS, (1, 0), (rec,), (0,), snapshots=True)
        [v] = verify_progress(trace, system)
        assert v.seq == 0 and v.newly_occurring == (1,)
        assert verify_locality(trace, system) == [0]

    def test_empty_trace(self):
        system = EventSystem((BIN,), (EventSpec.extensional([0], []),))
        trace = run(system, 0, snapshots=True)
        assert trace.calls == 0 and verify_progress(trace, system) == []

    def test_requires_snapshots(self):
        seed = next(s for s in itertools.count() if replay_single_event_calls(s))
        with pytest.raises(SnapshotsMissing):
            verify_progress(run(single_event(), seed), single_event())


class TestWitnessForest:
    def test_generated_traces(self):
        system = path3()
        for seed in range(300):
            trace = run(system, seed)
            forest, check = reconstruct_witness_forest(trace, system)
            assert check.ok
            assert [l for t in forest for l in t.preorder()] == [r.event_id for r in trace.records]

    def test_decreasing_roots_fail(self):
        system = EventSystem((BIN, BIN), (EventSpec.extensional([0], [(0,)]), EventSpec.extensional([1], [(0,)])))
        recs = (ResampleRecord(0, 1, Kind.ROOT), ResampleRecord(1, 0, Kind.ROOT))
        trace = ExecutionTrace(0, Outcome.SUCCESS, (1, 1), recs, (0, 1))
        _, check = reconstruct_witness_forest(trace, system)
        assert check.preorder and check.neighbor and not check.increasing

    def test_non_neighbor_child_fails(self):
        system = EventSystem((BIN, BIN), (EventSpec.extensional([0], [(0,)]), EventSpec.extensional([1], [(0,)])))
        recs = (ResampleRecord(0, 0, Kind.ROOT), ResampleRecord(1, 1, Kind.RECURSIVE, 0))
        _, check = reconstruct_witness_forest(ExecutionTrace(0, Outcome.SUCCESS, (1, 1), recs, (0,)), system)
        assert not check.neighbor

    def test_empty(self):
        system = single_event()
        forest, check = reconstruct_witness_forest(ExecutionTrace(0, Outcome.SUCCESS, (1,), (), ()), system)
        assert forest == [] and check.ok


class TestRandomness:
    def test_one_variable(self):
        assert randomness_test(single_event(), 0, 10**5, seed=1) < 0.02

    def test_two_variables_joint(self):
        system = EventSystem((BIN, BIN), (EventSpec.extensional([0], [(0,)]),))
        assert randomness_test(system, 0, 10**5, seed=2) < 0.02

    def test_degenerate(self):
        system = EventSystem((VariableSpec.uniform(1),), (EventSpec.extensional([0], [(0,)]),))
        assert randomness_test(system, 0, 100) == 0.0

    def test_errors(self):
        big = EventSystem((VariableSpec.uniform(2),) * 13, (EventSpec.extensional([0], [(0,)]),))
        with pytest.raises(DomainTooLarge):
            randomness_test(big, 0, 10)
        never = EventSystem((BIN,), (EventSpec.extensional([0], []),))
        with pytest.raises(EventNeverOccurs):
            randomness_test(never, 0, 10)


@st.composite
def small_systems(draw):
    n = draw(st.integers(1, 5))
    events = []
    for _ in range(draw(st.integers(1, 5))):
        scope = sorted(draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=3)))
        tuples = list(itertools.product((0, 1), repeat=len(scope)))
        # keep at least one tuple allowed so the instance is not hopeless
        forb = draw(st.lists(st.sampled_from(tuples[1:] or tuples), unique=True, max_size=len(tuples) - 1))
        events.append(EventSpec.extensional(scope, forb))
    return EventSystem((BIN,) * n, tuple(events))


@settings(max_examples=60, deadline=None)
@given(small_systems(), st.integers(0, 2**64 - 1))
def test_every_trace_invariant(system, seed):
    trace = run(system, seed, max_calls=200, snapshots=True)
    res = check_trace(trace, system)
    assert all(res.values()), res
    assert trace.root_event_ids == sorted(set(trace.root_event_ids))
    assert len(trace.phase_boundaries) <= system.m
    assert [r.seq for r in trace.records] == list(range(trace.calls))
