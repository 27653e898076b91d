from bisect import bisect_right

import numpy as np
import pytest

from src.analysis import analyze_system
from src.errors import NoObservations, ValidationFailed
from src.model import ArrivalKind, ArrivalPattern, SystemModel, synchronous_set
from src.sim import (
    TRACE_COLUMNS,
    JitterMode,
    Phasing,
    RecordKind,
    SimConfig,
    SimTrace,
    TraceRecord,
    critical_phases,
    generate_arrivals,
    max_observed,
    observed_table,
    simulate,
    trace_frame,
    transaction_stream,
)
from tests.builders import build, lone, random_model


def responses(trace, action):
    return [r.response for r in trace.responses(action)]


# ===========================
# ARRIVALS
# ===========================
def test_periodic_arrivals_cover_closed_duration():
    cfg = SimConfig(duration=180)
    out = generate_arrivals(ArrivalPattern(60, 60), cfg, transaction_stream(0, "T1"))
    assert [n for n, _ in out] == [0, 60, 120, 180]


def test_bursty_arrivals():
    cfg = SimConfig(duration=900)
    out = generate_arrivals(ArrivalPattern(900, 300, 3, 0, ArrivalKind.SPORADIC), cfg, transaction_stream(0, "T1"))
    assert [n for n, _ in out] == [0, 300, 600, 900]


def test_max_jitter_delays_every_release():
    cfg = SimConfig(duration=300, jitter_mode=JitterMode.MAX)
    out = generate_arrivals(ArrivalPattern(60, 60, 1, 3), cfg, transaction_stream(0, "T1"))
    assert all(r == n + 3 for n, r in out)


def test_random_jitter_stays_in_bounds_and_in_order():
    cfg = SimConfig(duration=5000, seed=7, phasing=Phasing.RANDOM, jitter_mode=JitterMode.RANDOM)
    pattern = ArrivalPattern(12, 4, 3, 5, ArrivalKind.SPORADIC)
    out = generate_arrivals(pattern, cfg, transaction_stream(7, "T1"))
    assert out
    assert 0 <= out[0][0] < 12
    for (n, r) in out:
        assert n <= r <= n + 5
    released = [r for _, r in out]
    assert released == sorted(released)


def test_invalid_config():
    with pytest.raises(ValueError):
        SimConfig(duration=0)


def test_streams_are_independent_per_transaction():
    a = transaction_stream(3, "T1").integers(0, 1000, size=5)
    b = transaction_stream(3, "T1").integers(0, 1000, size=5)
    c = transaction_stream(3, "T2").integers(0, 1000, size=5)
    assert list(a) == list(b)
    assert list(a) != list(c)


# ===========================
# DISPATCH
# ===========================
def test_singleton_responses():
    trace = simulate(build(lone("T1", "A1", C=5, T=100)), SimConfig(duration=200))
    assert responses(trace, "A1") == [5, 5, 5]
    assert max_observed(trace, "A1") == 5


def test_singleton_with_max_jitter_observes_c_plus_j():
    model = build(lone("T1", "A1", C=5, T=100, J=3))
    trace = simulate(model, SimConfig(duration=300))
    assert max_observed(trace, "A1") == 8


def test_lower_priority_root_blocks_at_the_critical_instant():
    model = build(lone("T1", "A", C=4, T=100, priority=2), lone("T2", "B", C=6, T=100, priority=1))
    assert critical_phases(model) == {"T1": 1, "T2": 0}

    trace = simulate(model, SimConfig(duration=50))
    assert responses(trace, "B") == [6]
    assert responses(trace, "A") == [9]


def test_equal_release_goes_to_higher_priority():
    model = build(lone("T1", "A", C=4, T=100, priority=2), lone("T2", "B", C=6, T=100, priority=2))
    assert critical_phases(model) == {"T1": 0, "T2": 0}

    trace = simulate(model, SimConfig(duration=50))
    # equal priority and release: transaction id decides
    assert responses(trace, "A") == [4]
    assert responses(trace, "B") == [10]


def test_synchronous_set_runs_without_interleaving(agc):
    trace = simulate(agc, SimConfig(duration=1800, seed=2, phasing=Phasing.RANDOM, jitter_mode=JitterMode.RANDOM))
    running = []
    for r in trace.records:
        if r.kind == RecordKind.START:
            if running:
                assert r.action in synchronous_set(agc, running[0])
            running.append(r.action)
        elif r.kind == RecordKind.FINISH:
            assert running[-1] == r.action
            running.pop()
    assert running == []


def test_async_send_enqueues_after_sub_action(agc):
    trace = simulate(agc, SimConfig(duration=60))
    a5_arrival = next(r for r in trace.records if r.kind == RecordKind.ARRIVAL and r.action == "A5")
    a1_start = next(r for r in trace.records if r.kind == RecordKind.START and r.action == "A1")
    # A1's first sub-action calls A4 (C=6 in total) before the second sub-action sends A5
    assert a5_arrival.time == a1_start.time + 5 + 6 + 1


def test_case_study_trace_respects_bounds(agc):
    report = analyze_system(agc)
    trace = simulate(agc, SimConfig(duration=1800))
    for r in report.results:
        assert max_observed(trace, r.action_id) <= r.wcrt


def test_same_action_instances_finish_in_order(agc):
    trace = simulate(agc, SimConfig(duration=1800, seed=4, phasing=Phasing.RANDOM, jitter_mode=JitterMode.RANDOM))
    finished = {}
    for r in trace.records:
        if r.kind == RecordKind.FINISH:
            assert r.q > finished.get(r.action, 0)
            finished[r.action] = r.q


def test_simulation_is_deterministic(agc):
    cfg = SimConfig(duration=1800, seed=11, phasing=Phasing.RANDOM, jitter_mode=JitterMode.RANDOM)
    assert simulate(agc, cfg) == simulate(agc, cfg)
    assert trace_frame(simulate(agc, cfg)).equals(trace_frame(simulate(agc, cfg)))


def test_invalid_model_rejected():
    tx, act = lone("T1", "A1", C=1, T=0)
    with pytest.raises(ValidationFailed):
        simulate(build((tx, act)), SimConfig(duration=10))


def test_empty_model():
    trace = simulate(SystemModel(), SimConfig(duration=10))
    assert trace.records == ()
    assert observed_table(trace).empty


def _busy_spans(trace):
    spans = {}
    for r in trace.records:
        if r.kind == RecordKind.START:
            spans[(r.action, r.q)] = [r.time, None]
        elif r.kind == RecordKind.FINISH:
            spans[(r.action, r.q)][1] = r.time

    merged = []
    for s, f in sorted(tuple(v) for v in spans.values()):
        if f == s:
            continue
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], f)
        else:
            merged.append([s, f])
    return spans, merged


def test_processor_never_idle_while_work_is_queued():
    rng = np.random.default_rng(6)
    for n in range(50):
        model = random_model(rng)
        trace = simulate(model, SimConfig(duration=1000, seed=n, phasing=Phasing.RANDOM, jitter_mode=JitterMode.RANDOM))
        spans, merged = _busy_spans(trace)
        starts = [s for s, _ in merged]

        for r in trace.records:
            if r.kind != RecordKind.ARRIVAL:
                continue
            started = spans[(r.action, r.q)][0]
            assert started >= r.time
            if started == r.time:
                continue
            # the whole wait [arrival, start) lies inside one busy stretch
            k = bisect_right(starts, r.time) - 1
            assert k >= 0, (n, r)
            assert merged[k][0] <= r.time and started <= merged[k][1], (n, r)


# ===========================
# OBSERVATIONS
# ===========================
def test_max_observed_picks_largest():
    trace = SimTrace(tuple(
        TraceRecord(RecordKind.RESPONSE, "A1", q, 0, nominal=0, response=v)
        for q, v in enumerate([5, 8, 7], start=1)
    ))
    assert max_observed(trace, "A1") == 8


def test_max_observed_without_responses():
    with pytest.raises(NoObservations):
        max_observed(SimTrace(), "A1")


def test_trace_frame_columns(agc):
    df = trace_frame(simulate(agc, SimConfig(duration=60)))
    assert list(df.columns) == TRACE_COLUMNS
    starts = df[df["kind"] == "start"]
    assert starts["response"].isna().all()
    assert (df[df["kind"] == "response"]["response"] >= 0).all()


def test_observed_table_natural_order(agc):
    table = observed_table(simulate(agc, SimConfig(duration=900)))
    assert list(table["action"]) == ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10", "A11", "A12"]
    assert table.loc[table["action"] == "A12", "max_observed"].item() <= 134
