"""
Unit tests for src/engine/simulator.py
"""

from dataclasses import replace

import pytest

from src.engine import (
    DuplicateInjectionError,
    FailureMode,
    RoundSchedule,
    Simulator,
    TraceKind,
)
from src.protocol import Candidate, ProtocolConfig, Role
from src.radio import PowerTable, RadioParams, to_pj
from tests.fixtures.worlds import mobile_world, simulator_for, static_world

pytest_plugins = ["tests.fixtures.worlds"]

pytestmark = pytest.mark.unit


def traced_run(seed: int, rounds: int = 2) -> list[dict]:
    sim = simulator_for(mobile_world(30, seed=seed), p_loss=0.1)
    sim.run(rounds)
    return sim.tracer.events


# ============================================================
# Construction
# ============================================================


class TestSimulatorSetup:
    """Tests for Simulator construction."""

    @pytest.mark.parametrize("p_loss", [-0.1, 1.5])
    def test_p_loss_range(self, pair_world, p_loss):
        """Loss probability must be a probability."""
        with pytest.raises(ValueError):
            Simulator(
                pair_world,
                ProtocolConfig(),
                PowerTable(),
                RadioParams(),
                RoundSchedule(),
                p_loss=p_loss,
            )

    def test_rounds_positive(self, pair_world):
        """run needs at least one round."""
        with pytest.raises(ValueError):
            simulator_for(pair_world).run(0)


# ============================================================
# Neighbor discovery and clustering
# ============================================================


class TestClusteringEpoch:
    """Tests for discover_neighbors and run_clustering_epoch methods."""

    def test_close_pair_are_neighbors(self, pair_world):
        """10 m apart: mutual neighbors at the lowest level."""
        neighbors, _ = simulator_for(pair_world).discover_neighbors()
        assert [e.id for e in neighbors[0]] == [1]
        assert [e.id for e in neighbors[1]] == [0]
        assert neighbors[0][0].min_power == 0

    def test_far_pair_isolated(self):
        """60 m apart exceeds the intra band."""
        world = static_world([(50.0, 100.0), (110.0, 100.0)])
        neighbors, _ = simulator_for(world).discover_neighbors()
        assert neighbors == {0: [], 1: []}

    def test_hello_charges_energy(self, pair_world):
        """Every hello costs its sender and each receiver."""
        sim = simulator_for(pair_world)
        sim.discover_neighbors()
        assert sim.tracer.debit_events == 4
        assert sim.world.ledger.debited_pj == sim.tracer.debited_pj

    def test_singleton(self):
        """A lone node heads its own cluster."""
        sim = simulator_for(static_world([(100.0, 100.0)]))
        snapshot = sim.run_clustering_epoch(0)
        assert snapshot.heads == (0,)
        assert snapshot.membership == {}
        assert snapshot.cluster_sizes() == {0: 1}

    def test_pair_covered(self, pair_world):
        """Both nodes end up in exactly one cluster."""
        snapshot = simulator_for(pair_world).run_clustering_epoch(0)
        covered = set(snapshot.heads) | set(snapshot.membership)
        assert covered == {0, 1}
        for ch in snapshot.membership.values():
            assert ch in snapshot.heads

    def test_dense_field(self, dense_world):
        """Every node clustered, CHs never members, iterations bounded."""
        sim = simulator_for(dense_world)
        snapshot = sim.run_clustering_epoch(0)
        assert set(snapshot.heads).isdisjoint(snapshot.membership)
        assert len(snapshot.heads) + len(snapshot.membership) == 40
        assert snapshot.max_iterations_run <= sim.iteration_limit
        for ch, ach in snapshot.ach.items():
            assert snapshot.membership[ach] == ch

    def test_baseline_has_no_assistants(self, dense_world):
        """The baseline never elects an ACH."""
        sim = simulator_for(dense_world, protocol=ProtocolConfig(heed_mode=True))
        assert sim.run_clustering_epoch(0).ach == {}


# ============================================================
# Data rounds
# ============================================================


class TestDataRounds:
    """Tests for run and run_round methods."""

    def test_ideal_round(self, dense_world):
        """Static and lossless: every frame and aggregate arrives."""
        sim = simulator_for(dense_world)
        (stats,) = sim.run(1)
        frames = RoundSchedule().frames_per_round
        assert stats.frames_sent == len(stats.snapshot.membership) * frames
        assert stats.delivery_ratio == 1.0
        assert stats.aggregate_delivery_ratio == 1.0
        assert stats.recovery_frames_lost == 0
        assert stats.alive_count == 40

    def test_rounds_continue(self, dense_world):
        """A second run call picks up at the next round."""
        sim = simulator_for(dense_world)
        sim.run(2)
        (stats,) = sim.run(1)
        assert stats.round == 2

    def test_energy_monotone(self, dense_world):
        """Rounds only ever consume energy."""
        sim = simulator_for(dense_world, radio=RadioParams(idle_energy=1e-4))
        for stats in sim.run(3):
            assert stats.energy_consumed_pj > 0
        ledger = sim.world.ledger
        assert ledger.initial_total_pj == ledger.residual_total_pj + ledger.debited_pj

    def test_lossy_mobile_conservation(self):
        """Loss and motion never unbalance the ledger or the trace."""
        sim = simulator_for(mobile_world(40, seed=5), p_loss=0.3)
        sim.run(3)
        assert sim.tracer.debited_pj == sim.world.ledger.debited_pj
        times = [e["time"] for e in sim.tracer.events]
        assert times == sorted(times)

    def test_deterministic(self):
        """Same seed, identical trace; another seed differs."""
        assert traced_run(4) == traced_run(4)
        assert traced_run(4) != traced_run(5)


# ============================================================
# Failures
# ============================================================


class TestFailures:
    """Tests for inject_failure and inject_role_failure methods."""

    def test_duplicate_injection(self, pair_world):
        """Same node, same time twice is an error."""
        sim = simulator_for(pair_world)
        sim.inject_failure(0, 5.0)
        with pytest.raises(DuplicateInjectionError):
            sim.inject_failure(0, 5.0)
        sim.inject_failure(0, 6.0)

    def test_unknown_node(self, pair_world):
        """Only sensor nodes can fail."""
        with pytest.raises(ValueError):
            simulator_for(pair_world).inject_failure(2, 1.0)

    def test_drain_at_start(self, dense_world):
        """A drain at t=0 empties the node before the first epoch."""
        sim = simulator_for(dense_world)
        sim.inject_failure(0, 0.0, FailureMode.DRAIN)
        (stats,) = sim.run(1)
        assert sim.world.ledger.residual(0) == 0.0
        assert 0 not in sim.states
        assert stats.alive_count == 39
        drains = [e for e in sim.tracer.events if e["kind"] == TraceKind.DRAIN]
        assert [(d["src"], d["energy_delta"]) for d in drains] == [(0, to_pj(2.0))]

    def test_crash_keeps_charge(self, dense_world):
        """A crashed node stops but its battery is untouched."""
        sim = simulator_for(dense_world)
        sim.inject_failure(7, 0.0)
        sim.run(1)
        assert not sim.world.ledger.is_alive(7)
        assert sim.world.ledger.residual(7) == 2.0

    def test_assistant_takes_over(self):
        """A crashed CH with an ACH is replaced and its members lose at most one frame."""
        schedule = RoundSchedule()
        promoted = 0
        for seed in range(10):
            sim = simulator_for(static_world(node_count=40, seed=seed, size=100.0))
            sim.inject_role_failure(schedule.frame_time(0, 3))
            (stats,) = sim.run(1)
            (record,) = stats.failures
            assert record.was_ch
            if record.ach is None:
                continue
            promoted += 1
            assert stats.promotions >= 1
            assert sim.states[record.ach].role == Role.FINAL_CH
            for node in stats.reachable_after_failure[record.node]:
                assert stats.member_losses[node] <= 1
        assert promoted > 0

    def test_largest_cluster_targeted(self, dense_world):
        """Role failures hit the CH of the largest cluster."""
        sim = simulator_for(dense_world)
        schedule = RoundSchedule()
        sim.inject_role_failure(schedule.frame_time(0, 0))
        (stats,) = sim.run(1)
        sizes = stats.snapshot.cluster_sizes()
        largest = min(sizes, key=lambda ch: (-sizes[ch], ch))
        assert stats.failures[0].node == largest

    def test_baseline_never_promotes(self):
        """Without an ACH nobody takes over the failed cluster."""
        schedule = RoundSchedule()
        world = static_world(node_count=40, seed=1, size=100.0)
        sim = simulator_for(world, protocol=ProtocolConfig(heed_mode=True, ach_enabled=False))
        sim.inject_role_failure(schedule.frame_time(0, 3))
        (stats,) = sim.run(1)
        assert stats.promotions == 0
        assert stats.failures[0].ach is None
        assert stats.reachable_after_failure == {}


# ============================================================
# Assistant relay
# ============================================================


def retargeted_cluster(extra: list[tuple[float, float]] | None = None) -> Simulator:
    """
    CH 2 with members 0 and 1; 1 is the ACH.

    Member 0 sits 80 m from its CH, beyond the 50 m intra band, but 40 m from
    the ACH, which is 40 m from the CH.
    """
    points = [(100.0, 100.0), (140.0, 100.0), (180.0, 100.0), *(extra or [])]
    sim = simulator_for(static_world(points))
    sim.run_clustering_epoch(0)
    roster = (Candidate(0, 1.0), Candidate(1, 0.5))
    states = sim.states
    states[2] = replace(
        states[2], role=Role.FINAL_CH, my_ch=2, my_ach=1, is_ach=False, l_members=roster
    )
    states[1] = replace(
        states[1], role=Role.MEMBER, my_ch=2, my_ach=None, is_ach=True, ach_roster=roster
    )
    states[0] = replace(states[0], role=Role.MEMBER, my_ch=2, my_ach=1, is_ach=False)
    for node in range(3, len(points)):
        states[node] = replace(
            states[node], role=Role.MEMBER, my_ch=2, my_ach=1, is_ach=False
        )
    return sim


class TestAssistantRelay:
    """Tests for frames a member addresses to its ACH."""

    def test_standby_assistant_relays(self):
        """A frame reaches the CH through the ACH, and the relay hop is charged."""
        sim = retargeted_cluster()
        sim.states[0] = replace(sim.states[0], ch_failed=True)
        stats = sim.run_data_round()

        frames = RoundSchedule().frames_per_round
        assert stats.frames_sent == 2 * frames
        assert stats.frames_lost == 0
        assert stats.promotions == 0
        assert sim.states[1].role == Role.MEMBER
        relays = [
            e
            for e in sim.tracer.events
            if e["kind"] == TraceKind.TX and e["outcome"] == "relay"
        ]
        assert len(relays) == frames
        assert {(e["src"], e["dst"]) for e in relays} == {(1, 2)}
        assert all(e["energy_delta"] > 0 for e in relays)

    def test_plain_member_does_not_count(self):
        """A frame held by a node that is neither CH nor ACH is lost."""
        sim = retargeted_cluster()
        sim.states[0] = replace(sim.states[0], ch_failed=True)
        sim.states[1] = replace(sim.states[1], is_ach=False)
        stats = sim.run_data_round()

        frames = RoundSchedule().frames_per_round
        assert stats.frames_delivered == frames
        assert stats.member_losses[0] == frames
        assert sim.states[0].orphan

    def test_assistant_takes_over_on_resend(self):
        """The CH dies inside the ack window: the resend makes the ACH take over."""
        schedule = RoundSchedule()
        sim = retargeted_cluster()
        sim.inject_failure(2, schedule.frame_time(0, 0) + schedule.ack_window / 2)
        stats = sim.run_data_round()

        assert stats.promotions == 1
        assert sim.states[1].role == Role.FINAL_CH
        assert sim.states[0].my_ch == 1
        assert stats.member_losses[0] == 0
        assert stats.frames_lost == 0

    def test_takeover_skips_failed_members(self):
        """A member that failed before the takeover is not in the new cluster."""
        schedule = RoundSchedule()
        sim = retargeted_cluster(extra=[(140.0, 130.0)])
        roster = (Candidate(0, 1.0), Candidate(1, 0.5), Candidate(3, 0.1))
        sim.states[2] = replace(sim.states[2], l_members=roster)
        sim.states[1] = replace(sim.states[1], ach_roster=roster)
        sim.inject_failure(3, schedule.frame_time(0, 0) - schedule.t_cluster / 2)
        sim.inject_failure(2, schedule.frame_time(0, 0) + schedule.ack_window / 2)
        sim.run_data_round()

        new_head = sim.states[1]
        assert new_head.role == Role.FINAL_CH
        assert new_head.member_ids() == [0]
        assert new_head.my_ach == 0
        assert sim.states[0].is_ach
