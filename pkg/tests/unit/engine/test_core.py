"""
Unit tests for src/engine events, trace, invariants and world construction
"""

import json
import pickle

import numpy as np
import pytest

from src.engine import (
    ClusterSnapshot,
    DuplicateInjectionError,
    EventKind,
    EventQueue,
    InvariantViolation,
    RoundSchedule,
    Tracer,
    TraceKind,
    ViolationType,
    build_world,
    check_coverage,
    check_energy_conservation,
    check_termination,
    check_uniqueness,
    read_trace,
    spawn_streams,
)
from src.mobility import MobilityConfig, MobilityModel
from src.protocol import Candidate, NodeState, Role
from src.radio import EnergyLedger

pytestmark = pytest.mark.unit


# ============================================================
# EventQueue
# ============================================================


class TestEventQueue:
    """Tests for EventQueue class."""

    def test_time_order(self):
        """Earlier events pop first regardless of push order."""
        queue = EventQueue()
        queue.push(2.0, EventKind.TIMER, "late")
        queue.push(1.0, EventKind.TIMER, "early")
        assert queue.pop().payload == "early"
        assert queue.pop().payload == "late"
        assert not queue

    def test_ties_keep_push_order(self):
        """Same time: first scheduled runs first."""
        queue = EventQueue()
        for name in ("a", "b", "c"):
            queue.push(5.0, EventKind.MOVE_STEP, name)
        assert [queue.pop().payload for _ in range(3)] == ["a", "b", "c"]

    def test_negative_time(self):
        """Events cannot be scheduled before zero."""
        with pytest.raises(ValueError):
            EventQueue().push(-1.0, EventKind.TIMER)

    def test_pending_by_kind(self):
        """pending lists one kind in processing order without consuming."""
        queue = EventQueue()
        queue.push(3.0, EventKind.TIMER)
        queue.push(1.0, EventKind.INJECT_FAILURE, 7)
        queue.push(2.0, EventKind.INJECT_FAILURE, 8)
        pending = queue.pending(EventKind.INJECT_FAILURE)
        assert [e.payload for e in pending] == [7, 8]
        assert len(queue) == 3


# ============================================================
# RoundSchedule
# ============================================================


class TestRoundSchedule:
    """Tests for RoundSchedule timing."""

    def test_frame_times(self):
        """Frames start after the clustering epoch, one frame apart."""
        schedule = RoundSchedule(t_cluster=1.0, t_p=10.0, frames_per_round=10)
        assert schedule.round_length == 11.0
        assert schedule.frame_time(0, 0) == 1.0
        assert schedule.frame_time(2, 3) == pytest.approx(26.0)
        assert schedule.round_end(2) == 33.0

    def test_ack_window_default(self):
        """Without ack_timeout the window is one frame."""
        assert RoundSchedule(t_p=5.0, frames_per_round=5).ack_window == 1.0

    def test_ack_window_too_long(self):
        """The ack window must fit in a frame."""
        with pytest.raises(ValueError):
            RoundSchedule(t_p=5.0, frames_per_round=5, ack_timeout=2.0)


# ============================================================
# Tracer
# ============================================================


class TestTracer:
    """Tests for Tracer class."""

    def test_json_lines(self, tmp_path):
        """One compact object per line, fields in a fixed order."""
        path = tmp_path / "traces" / "run.jsonl"
        with Tracer(path) as tracer:
            tracer.emit(0.5, TraceKind.TX, src=1, dst=2, outcome="data", energy_delta=100)
            tracer.emit(0.5, TraceKind.LOSS, src=1, dst=3, outcome="data:channel")

        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert list(json.loads(lines[0])) == [
            "time", "seq", "kind", "src", "dst", "outcome", "energy_delta",
        ]
        events = read_trace(path)
        assert [e["seq"] for e in events] == [0, 1]
        assert events[1]["energy_delta"] == 0

    def test_debit_totals(self):
        """Only nonzero deltas count as debits."""
        tracer = Tracer()
        tracer.emit(0.0, TraceKind.TX, src=0, energy_delta=40)
        tracer.emit(0.0, TraceKind.RX, dst=1, energy_delta=10)
        tracer.emit(0.0, TraceKind.ROUND, outcome="start 0")
        assert tracer.debited_pj == 50
        assert tracer.debit_events == 2
        assert tracer.events == []


# ============================================================
# Invariants
# ============================================================


def head(me: int, *members: int) -> NodeState:
    return NodeState(
        me=me,
        role=Role.FINAL_CH,
        my_ch=me,
        l_members=tuple(Candidate(m, 0.1) for m in members),
        phase2_done=True,
    )


def member(me: int, ch: int) -> NodeState:
    return NodeState(me=me, role=Role.MEMBER, my_ch=ch, phase2_done=True)


class TestInvariants:
    """Tests for the run invariant checks."""

    def test_violation_pickles(self):
        """Violations cross process boundaries intact."""
        error = InvariantViolation(ViolationType.COVERAGE, "node 3")
        clone = pickle.loads(pickle.dumps(error))
        assert clone.violation == ViolationType.COVERAGE
        assert str(clone) == str(error)

        dup = pickle.loads(pickle.dumps(DuplicateInjectionError(4, 2.5)))
        assert (dup.node, dup.time) == (4, 2.5)

    def test_termination(self):
        """An iteration count above the bound is flagged."""
        snapshot = ClusterSnapshot(0, (0,), {}, {}, {0: 12, 1: 3})
        check_termination(snapshot, 12)
        with pytest.raises(InvariantViolation, match="TERMINATION"):
            check_termination(snapshot, 11)

    def test_coverage(self):
        """Alive nodes must be clustered; dead ones are ignored."""
        states = {0: head(0, 1), 1: member(1, 0), 2: NodeState(me=2)}
        check_coverage(states, [0, 1])
        with pytest.raises(InvariantViolation, match="COVERAGE"):
            check_coverage(states, [0, 1, 2])
        with pytest.raises(InvariantViolation, match="never clustered"):
            check_coverage(states, [5])

    def test_uniqueness_mapping(self):
        """A consistent layout yields member -> CH."""
        states = {0: head(0, 1, 2), 1: member(1, 0), 2: member(2, 0), 3: head(3)}
        assert check_uniqueness(states) == {1: 0, 2: 0}

    def test_uniqueness_double_listing(self):
        """A node listed by two CHs is a violation."""
        states = {0: head(0, 2), 1: head(1, 2), 2: member(2, 0)}
        with pytest.raises(InvariantViolation, match="UNIQUENESS"):
            check_uniqueness(states)

    def test_uniqueness_mismatch(self):
        """A listed member following another CH is a violation."""
        states = {0: head(0, 2), 1: head(1), 2: member(2, 1)}
        with pytest.raises(InvariantViolation, match="follows 1"):
            check_uniqueness(states)

    def test_energy_balanced(self):
        """Ledger and trace agree after debits."""
        ledger = EnergyLedger.full(2, 1.0)
        tracer = Tracer()
        before = ledger.residual_pj(0)
        ledger.consume(0, 0.25)
        tracer.emit(0.0, TraceKind.TX, src=0, energy_delta=before - ledger.residual_pj(0))
        check_energy_conservation(ledger, tracer)

    def test_energy_untraced_debit(self):
        """A debit the trace never saw is caught."""
        ledger = EnergyLedger.full(2, 1.0)
        ledger.consume(1, 0.1)
        with pytest.raises(InvariantViolation, match="ENERGY_CONSERVATION"):
            check_energy_conservation(ledger, Tracer())


# ============================================================
# World
# ============================================================


class TestWorld:
    """Tests for spawn_streams and build_world functions."""

    def test_streams_reproducible(self):
        """Same seed, same draws on every stream."""
        a, b = spawn_streams(9), spawn_streams(9)
        for left, right in zip(a, b, strict=True):
            assert left.random() == right.random()

    def test_streams_independent(self):
        """Streams of one seed differ from each other."""
        streams = spawn_streams(9)
        firsts = {float(s.random()) for s in streams}
        assert len(firsts) == len(streams)

    def test_sink_defaults_to_center(self):
        """Sink id follows the nodes and sits mid-field."""
        world = build_world(5, MobilityConfig(model=MobilityModel.STATIC), 2.0, 0)
        assert world.sink.id == 5
        assert world.sink.position == (100.0, 100.0)
        assert world.is_alive(5)

    def test_uniform_placement_in_bounds(self):
        """Drawn positions lie in the world and depend on the seed."""
        cfg = MobilityConfig(model=MobilityModel.STATIC)
        one = build_world(50, cfg, 2.0, 1).positions()
        assert np.all((one >= 0) & (one <= 200))
        assert np.array_equal(one, build_world(50, cfg, 2.0, 1).positions())
        assert not np.array_equal(one, build_world(50, cfg, 2.0, 2).positions())

    def test_pinned_positions(self):
        """Pinned positions are used as given."""
        cfg = MobilityConfig(model=MobilityModel.STATIC)
        world = build_world(2, cfg, 2.0, 0, positions=[(1.0, 2.0), (3.0, 4.0)])
        assert world.position(1) == (3.0, 4.0)

    @pytest.mark.parametrize(
        "positions",
        [[(1.0, 1.0)], [(1.0, 1.0), (250.0, 1.0)]],
        ids=["count_mismatch", "outside"],
    )
    def test_invalid_positions(self, positions):
        """Wrong count or out-of-world positions are rejected."""
        with pytest.raises(ValueError):
            build_world(2, MobilityConfig(), 2.0, 0, positions=positions)

    def test_initial_energy(self):
        """Per-node starting energy overrides full batteries."""
        world = build_world(2, MobilityConfig(), 2.0, 0, initial_energy=[0.5, 2.0])
        assert world.ledger.residual(0) == 0.5
