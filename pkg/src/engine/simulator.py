"""
Discrete-event simulator.

One ``Simulator`` owns one ``WorldState`` and drives every node through
repeated rounds:

    round boundary   motion, idle cost, clustering epoch (positions frozen)
    frames           motion, ACH heartbeat, one data frame per member
    ack timeouts     member-side failure handling (resend to ACH, rejoin)
    round end        CH aggregates forwarded to the sink over the overlay

Everything is single-threaded and ordered by (time, sequence); all randomness
comes from the world's seeded streams, so a seed fixes the whole trace.
"""

from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, replace

import numpy as np
from loguru import logger

from src.engine.events import EventQueue
from src.engine.invariants import (
    DuplicateInjectionError,
    InvariantViolation,
    ViolationType,
    check_ach_continuity,
    check_ach_membership,
    check_coverage,
    check_energy_conservation,
    check_termination,
    check_uniqueness,
)
from src.engine.models import (
    ClusterSnapshot,
    Event,
    EventKind,
    FailureMode,
    FailureRecord,
    FailureTarget,
    RoundSchedule,
    RoundStats,
    WorldState,
)
from src.engine.trace import Tracer, TraceKind
from src.mobility import MobilityModel, sense_velocity, speed_between, step_kinematics
from src.protocol import (
    Announcement,
    AnnouncementKind,
    NeighborEntry,
    NodeId,
    NodeState,
    ProtocolConfig,
    Role,
    accept_ach_decl,
    accept_cost_velocity,
    accept_join,
    adopt_promoted_ch,
    finalize_phase3,
    handle_send_failure,
    init_phase1,
    max_iterations,
    merge_declarations,
    promote_to_ch,
    rejoin_cluster,
    select_ach,
    step_phase2,
)
from src.radio import (
    Band,
    ConsumeOutcome,
    PowerTable,
    RadioParams,
    UnreachableError,
    distance,
    distance_matrix,
    min_power_level,
    rx_energy,
    tx_energy,
)
from src.routing import Overlay, build_overlay, forward_aggregate

engine_log = logger.bind(module="Engine")


# ============================================================
# Event payloads
# ============================================================


@dataclass(frozen=True)
class FailureInjection:
    """A scheduled failure, either of a fixed node or of a role."""

    time: float
    mode: FailureMode
    node: NodeId | None = None
    target: FailureTarget | None = None


@dataclass(frozen=True)
class FrameTick:
    round: int
    frame: int


@dataclass(frozen=True)
class AckTimeout:
    node: NodeId
    target: NodeId
    round: int
    frame: int


@dataclass(frozen=True)
class RoundEnd:
    round: int


# ============================================================
# Simulator
# ============================================================


class Simulator:
    """
    Event loop over one world.

    Args:
        world: Initial world, exclusively owned by this simulator
        protocol: Clustering parameters
        table: Power table
        radio: Energy constants
        schedule: Round timing and packet sizes
        p_loss: Independent per-transmission loss probability
        guards_enabled: Let guard nodes bridge CHs out of mutual range
        mid_round_rejoin: Members that drift out of their cluster join another
            CH in range at the next frame instead of waiting for a lost frame
        tracer: Trace sink; a counting-only tracer when None
        check_invariants: Assert the clustering and energy properties
    """

    def __init__(
        self,
        world: WorldState,
        protocol: ProtocolConfig,
        table: PowerTable,
        radio: RadioParams,
        schedule: RoundSchedule,
        *,
        p_loss: float = 0.0,
        guards_enabled: bool = True,
        mid_round_rejoin: bool = False,
        tracer: Tracer | None = None,
        check_invariants: bool = True,
    ):
        if not 0.0 <= p_loss <= 1.0:
            raise ValueError("p_loss must be in [0, 1]")
        self.world = world
        self.protocol = protocol
        self.table = table
        self.radio = radio
        self.schedule = schedule
        self.p_loss = p_loss
        self.guards_enabled = guards_enabled
        self.mid_round_rejoin = mid_round_rejoin
        self.tracer = tracer or Tracer()
        self.check_invariants = check_invariants

        self.queue = EventQueue()
        self.iteration_limit = max_iterations(protocol.p_min)
        self.round = 0
        self.stats = RoundStats(round=0)
        self.snapshot: ClusterSnapshot | None = None
        self.overlay: Overlay | None = None
        self._injected: set[tuple[object, float]] = set()
        self._handlers = {
            EventKind.ROUND_BOUNDARY: self._on_round_boundary,
            EventKind.MOVE_STEP: self._on_frame,
            EventKind.TIMER: self._on_timer,
            EventKind.INJECT_FAILURE: self._on_failure,
        }

    @property
    def states(self) -> dict[NodeId, NodeState]:
        return self.world.states

    # ============================================================
    # Energy and transmission
    # ============================================================

    def _alive(self, node: NodeId) -> bool:
        return self.world.is_alive(node)

    def _distance(self, a: NodeId, b: NodeId) -> float:
        return distance(self.world.position(a), self.world.position(b))

    def _charge(
        self,
        node: NodeId,
        joules: float,
        kind: TraceKind,
        *,
        src: NodeId | None,
        dst: NodeId | None,
        outcome: str,
    ) -> bool:
        """Debit ``node`` and trace the debit. Returns whether it is still alive."""
        ledger = self.world.ledger
        if joules <= 0:
            return ledger.is_alive(node)
        before = ledger.residual_pj(node)
        result = ledger.consume(node, joules)
        debit = before - ledger.residual_pj(node)
        if debit:
            self.tracer.emit(
                self.world.clock, kind, src=src, dst=dst, outcome=outcome, energy_delta=debit
            )
        if result == ConsumeOutcome.DIED and debit:
            engine_log.debug(f"Node {node}: died of battery exhaustion")
        return result == ConsumeOutcome.ALIVE

    def _channel_drops(self) -> bool:
        if self.p_loss <= 0.0:
            return False
        if self.p_loss >= 1.0:
            return True
        return bool(self.world.rngs.loss.random() < self.p_loss)

    def _require_sender(self, src: NodeId) -> None:
        if not self._alive(src):
            raise InvariantViolation(
                ViolationType.DEAD_NODE_TRAFFIC, f"node {src} at t={self.world.clock}"
            )

    def _receive(self, label: str, src: NodeId, dst: NodeId, level: int, bits: int) -> bool:
        reason = None
        if not self._alive(dst):
            reason = "dead"
        elif self._distance(src, dst) > self.table.range_of(level):
            reason = "out_of_range"
        elif self._channel_drops():
            reason = "channel"
        if reason is not None:
            self.tracer.emit(
                self.world.clock, TraceKind.LOSS, src=src, dst=dst, outcome=f"{label}:{reason}"
            )
            return False
        if dst == self.world.sink.id:
            self.tracer.emit(self.world.clock, TraceKind.RX, src=src, dst=dst, outcome=label)
            return True
        return self._charge(
            dst, rx_energy(bits, self.radio), TraceKind.RX, src=src, dst=dst, outcome=label
        )

    def deliver(self, label: str, src: NodeId, dst: NodeId, level: int, bits: int) -> bool:
        """
        Unicast ``bits`` from ``src`` to ``dst`` at power ``level``.

        TX energy is always charged; the frame arrives iff the receiver is alive,
        within the level's range and the channel does not drop it. RX energy is
        charged on arrival only.
        """
        self._require_sender(src)
        tx = tx_energy(bits, self.table.range_of(level), self.radio)
        if not self._charge(src, tx, TraceKind.TX, src=src, dst=dst, outcome=label):
            return False
        return self._receive(label, src, dst, level, bits)

    def broadcast(
        self, label: str, src: NodeId, level: int, bits: int, *, lossless: bool = False
    ) -> list[NodeId]:
        """
        One transmission heard by every alive node within range, each receiver
        evaluated independently.

        Returns:
            Receivers that got the message, ascending
        """
        self._require_sender(src)
        tx = tx_energy(bits, self.table.range_of(level), self.radio)
        if not self._charge(src, tx, TraceKind.TX, src=src, dst=None, outcome=label):
            return []

        positions = self.world.positions()
        gaps = np.hypot(*(positions - positions[src]).T)
        audible = self.world.ledger.alive_mask() & (gaps <= self.table.range_of(level))
        audible[src] = False

        received = []
        for node in np.flatnonzero(audible):
            receiver = int(node)
            if not lossless and self._channel_drops():
                self.tracer.emit(
                    self.world.clock,
                    TraceKind.LOSS,
                    src=src,
                    dst=receiver,
                    outcome=f"{label}:channel",
                )
                continue
            if self._charge(
                receiver,
                rx_energy(bits, self.radio),
                TraceKind.RX,
                src=src,
                dst=receiver,
                outcome=label,
            ):
                received.append(receiver)
        return received

    def _intra_level(self, src: NodeId, dst: NodeId) -> int:
        try:
            return min_power_level(self._distance(src, dst), self.table, Band.INTRA)
        except UnreachableError:
            return self.table.intra_cluster_max_level

    def _announce(self, ann: Announcement, dst: NodeId | None = None) -> list[NodeId]:
        """Send a control message: unicast when ``dst`` is set, broadcast otherwise."""
        self.stats.control_messages += 1
        bits = self.schedule.control_bits
        if dst is None:
            return self.broadcast(
                str(ann.kind), ann.sender, self.table.intra_cluster_max_level, bits
            )
        level = self._intra_level(ann.sender, dst)
        return [dst] if self.deliver(str(ann.kind), ann.sender, dst, level, bits) else []

    def send_inter(self, src: NodeId, dst: NodeId, bits: int) -> bool:
        """Inter-cluster hop at the smallest sufficient inter-band level."""
        if not self._alive(src):
            return False
        try:
            level = min_power_level(self._distance(src, dst), self.table, Band.INTER)
        except UnreachableError:
            level = self.table.max_level
        if level < self.table.inter_cluster_min_level:
            raise InvariantViolation(
                ViolationType.INTER_BAND_LEVEL, f"{src}->{dst} at level {level}"
            )
        return self.deliver("aggregate", src, dst, level, bits)

    # ============================================================
    # Motion
    # ============================================================

    def _move_to(self, now: float) -> None:
        dt = now - self.world.last_move
        if dt <= 0:
            return
        cfg = self.world.mobility
        rng = self.world.rngs.mobility
        for node in self.world.ledger.alive_nodes():
            self.world.kinematics[node] = step_kinematics(
                self.world.kinematics[node], cfg, dt, rng, now=self.world.last_move
            )
        self.world.last_move = now

    # ============================================================
    # Clustering epoch
    # ============================================================

    def discover_neighbors(
        self,
    ) -> tuple[dict[NodeId, list[NeighborEntry]], dict[NodeId, tuple[float, float]]]:
        """
        Hello exchange at the top intra level.

        Every alive node broadcasts once (lossless, energy charged) and learns
        the alive nodes within intra range, with the minimum intra level
        reaching each and their relative speed.

        Returns:
            (node -> L_adj, node -> sensed velocity)
        """
        world = self.world
        sensed = {
            node: sense_velocity(
                world.kinematics[node], world.mobility.noise_std, world.rngs.sensing
            )
            for node in world.ledger.alive_nodes()
        }
        for node in sensed:
            if self._alive(node):
                self.stats.control_messages += 1
                self.broadcast(
                    "hello",
                    node,
                    self.table.intra_cluster_max_level,
                    self.schedule.control_bits,
                    lossless=True,
                )

        alive = world.ledger.alive_mask()
        gaps = distance_matrix(world.positions())
        reach = self.table.intra_range
        neighbors: dict[NodeId, list[NeighborEntry]] = {}
        for node in world.ledger.alive_nodes():
            entries = []
            for other in np.flatnonzero(alive & (gaps[node] <= reach)):
                peer = int(other)
                if peer == node:
                    continue
                level = min_power_level(float(gaps[node, peer]), self.table, Band.INTRA)
                entries.append(
                    NeighborEntry(
                        id=peer,
                        min_power=level,
                        min_power_mw=self.table.power_of(level),
                        relative_speed=speed_between(sensed[node], sensed[peer]),
                    )
                )
            neighbors[node] = entries
        return neighbors, sensed

    def _elect_ach(self, ch: NodeId) -> None:
        state, ann = select_ach(self.states[ch])
        self.states[ch] = state
        if ann is None:
            return
        for receiver in self._announce(ann):
            if receiver in self.states:
                self.states[receiver] = accept_ach_decl(self.states[receiver], ann)

    def run_clustering_epoch(self, round_index: int | None = None) -> ClusterSnapshot:
        """
        Run phases I-III and ACH selection over every alive node.

        Phase II is lockstep: all nodes finish iteration i before any node
        starts i + 1, and declarations sent in iteration i are read in i + 1.
        Nodes that are done keep listening until the last node is done.

        Raises:
            InvariantViolation: if termination, coverage or uniqueness fails
        """
        round_index = self.round if round_index is None else round_index
        clock = self.world.clock
        self.tracer.emit(clock, TraceKind.EPOCH, outcome=f"round {round_index}")
        neighbors, sensed = self.discover_neighbors()

        # Phase I
        states: dict[NodeId, NodeState] = {}
        offers: dict[NodeId, Announcement] = {}
        for node in sorted(neighbors):
            if not self._alive(node):
                continue
            states[node], offers[node] = init_phase1(
                node,
                neighbors[node],
                self.protocol,
                self.world.ledger.residual(node),
                velocity=sensed[node],
            )
        self.world.states = states
        for node, ann in offers.items():
            if self._alive(node):
                for receiver in self._announce(ann):
                    if receiver in states:
                        states[receiver] = accept_cost_velocity(states[receiver], ann)

        # Phase II
        inbox: dict[NodeId, list[Announcement]] = defaultdict(list)
        while any(self._alive(n) and not s.phase2_done for n, s in states.items()):
            outgoing: list[Announcement] = []
            for node in sorted(states):
                if not self._alive(node):
                    continue
                heard = inbox.pop(node, [])
                if states[node].phase2_done:
                    states[node] = merge_declarations(states[node], heard)
                    continue
                draw = float(self.world.rngs.protocol.random())
                states[node], anns, _ = step_phase2(states[node], heard, draw)
                outgoing.extend(anns)
            inbox = defaultdict(list)
            for ann in outgoing:
                if self._alive(ann.sender):
                    for receiver in self._announce(ann):
                        inbox[receiver].append(ann)
        for node, heard in inbox.items():
            if node in states:
                states[node] = merge_declarations(states[node], heard)

        # Phase III
        settled: list[Announcement] = []
        for node in sorted(states):
            if self._alive(node):
                states[node], anns = finalize_phase3(states[node])
                settled.extend(anns)
        for ann in settled:
            if not self._alive(ann.sender):
                continue
            if ann.kind == AnnouncementKind.JOIN:
                assert ann.payload is not None
                if self._announce(ann, dst=ann.payload):
                    states[ann.payload] = accept_join(states[ann.payload], ann)
            else:
                for receiver in self._announce(ann):
                    if receiver in states:
                        states[receiver] = merge_declarations(states[receiver], [ann])

        heads = tuple(
            n for n in sorted(states) if self._alive(n) and states[n].role == Role.FINAL_CH
        )
        if self.protocol.ach_active:
            for ch in heads:
                if self._alive(ch):
                    self._elect_ach(ch)

        snapshot = ClusterSnapshot(
            round=round_index,
            heads=heads,
            membership={
                n: s.my_ch
                for n, s in sorted(states.items())
                if s.role == Role.MEMBER and s.my_ch is not None and self._alive(n)
            },
            ach={ch: states[ch].my_ach for ch in heads if states[ch].my_ach is not None},
            iterations={n: s.iteration for n, s in sorted(states.items())},
        )
        if self.check_invariants:
            check_termination(snapshot, self.iteration_limit)
            check_coverage(states, self.world.ledger.alive_nodes())
            check_uniqueness(states)
            check_ach_membership(states)

        self.snapshot = snapshot
        engine_log.debug(
            f"Round {round_index}: {len(heads)} CHs, "
            f"{snapshot.max_iterations_run} phase 2 iterations"
        )
        return snapshot

    # ============================================================
    # Failure injection
    # ============================================================

    def inject_failure(
        self, node: NodeId, time: float, mode: FailureMode = FailureMode.CRASH
    ) -> Event:
        """
        Schedule ``node`` to fail at ``time``.

        Raises:
            ValueError: if the node does not exist
            DuplicateInjectionError: if the node already fails at ``time``
        """
        if not 0 <= node < self.world.node_count:
            raise ValueError(f"node {node} does not exist")
        key = (node, time)
        if key in self._injected:
            raise DuplicateInjectionError(node, time)
        self._injected.add(key)
        return self.queue.push(
            time, EventKind.INJECT_FAILURE, FailureInjection(time=time, mode=mode, node=node)
        )

    def inject_role_failure(
        self,
        time: float,
        mode: FailureMode = FailureMode.CRASH,
        target: FailureTarget = FailureTarget.CLUSTER_HEAD,
    ) -> Event:
        """
        Schedule a failure of whichever node holds ``target`` at ``time``.

        For cluster heads this is the CH of the largest cluster, ties by id.
        """
        key = (target, time)
        if key in self._injected:
            raise DuplicateInjectionError(-1, time)
        self._injected.add(key)
        return self.queue.push(
            time,
            EventKind.INJECT_FAILURE,
            FailureInjection(time=time, mode=mode, target=target),
        )

    def _largest_cluster_head(self) -> NodeId | None:
        sizes: dict[NodeId, int] = {}
        for node, state in sorted(self.states.items()):
            if state.role == Role.FINAL_CH and self._alive(node):
                sizes[node] = 1 + len(state.l_members)
        if not sizes:
            return None
        return min(sizes, key=lambda ch: (-sizes[ch], ch))

    def _on_failure(self, event: Event) -> None:
        injection: FailureInjection = event.payload
        node = injection.node
        if node is None:
            node = self._largest_cluster_head()
        if node is None or not self._alive(node):
            engine_log.debug(f"Failure at t={event.time:.3f} has no live target")
            return

        state = self.states.get(node)
        was_ch = state is not None and state.role == Role.FINAL_CH
        ach = state.my_ach if was_ch and state is not None else None

        if injection.mode == FailureMode.CRASH:
            self.world.ledger.kill(node)
            self.tracer.emit(event.time, TraceKind.CRASH, src=node, outcome="crash")
        else:
            debit = self.world.ledger.drain(node)
            self.tracer.emit(
                event.time, TraceKind.DRAIN, src=node, outcome="drain", energy_delta=debit
            )

        self.stats.failures.append(FailureRecord(node, event.time, injection.mode, was_ch, ach))
        if was_ch and ach is not None and self._alive(ach):
            reach = self.table.intra_range
            self.stats.reachable_after_failure[node] = {
                n
                for n, s in self.states.items()
                if s.role == Role.MEMBER
                and s.my_ch == node
                and n != ach
                and self._alive(n)
                and self._distance(n, ach) <= reach
            }
        engine_log.warning(
            f"Node {node} {injection.mode} at t={event.time:.3f}"
            + (f" (CH, ACH {ach})" if was_ch else "")
        )

    # ============================================================
    # Data period
    # ============================================================

    def _chs_in_range(self, node: NodeId) -> list[tuple[NodeId, float]]:
        reach = self.table.intra_range
        return [
            (ch, state.cost)
            for ch, state in sorted(self.states.items())
            if ch != node
            and state.role == Role.FINAL_CH
            and self._alive(ch)
            and self._distance(node, ch) <= reach
        ]

    def _usable(self, src: NodeId, dst: NodeId | None) -> bool:
        return (
            dst is not None
            and self._alive(dst)
            and self._distance(src, dst) <= self.table.intra_range
        )

    def _apply_member_update(
        self, node: NodeId, state: NodeState, anns: Iterable[Announcement]
    ) -> None:
        previous = self.states[node]
        self.states[node] = state
        if state.orphan and not previous.orphan:
            self.stats.orphans.add(node)
            self.tracer.emit(self.world.clock, TraceKind.ORPHAN, src=node, outcome="orphan")
            engine_log.warning(f"Node {node}: orphaned until the next epoch")
        for ann in anns:
            assert ann.payload is not None
            ch = ann.payload
            self.tracer.emit(self.world.clock, TraceKind.REJOIN, src=node, dst=ch, outcome="join")
            if self._announce(ann, dst=ch):
                self.states[ch] = accept_join(self.states[ch], ann)
                if self.protocol.ach_active:
                    self._elect_ach(ch)

    def _promote(self, node: NodeId) -> None:
        former = self.states[node].my_ch
        state, ann = promote_to_ch(self.states[node])
        # The roster dates from the epoch; members may have failed since.
        alive = tuple(m for m in state.l_members if self._alive(m.id))
        self.states[node] = state = replace(state, l_members=alive)
        self.stats.promotions += 1
        self.tracer.emit(self.world.clock, TraceKind.PROMOTE, src=node, dst=former, outcome="ch")
        engine_log.warning(f"ACH {node} took over the cluster of CH {former}")
        for receiver in self._announce(ann):
            if receiver in self.states:
                self.states[receiver] = adopt_promoted_ch(self.states[receiver], ann)
        if self.protocol.ach_active:
            self._elect_ach(node)

    def _heartbeat(self) -> None:
        """ACHs whose CH is dead or out of reach take over the cluster."""
        for node in sorted(self.states):
            state = self.states[node]
            if not self._alive(node) or not state.is_ach or state.role != Role.MEMBER:
                continue
            if not self._usable(node, state.my_ch):
                self._promote(node)

    def _rejoin_drifted(self) -> None:
        for node in sorted(self.states):
            state = self.states[node]
            if not self._alive(node) or state.role != Role.MEMBER or state.is_ach:
                continue
            if self._usable(node, state.data_target):
                continue
            if state.my_ach != state.data_target and self._usable(node, state.my_ach):
                continue
            chs = self._chs_in_range(node)
            if not chs and state.orphan:
                continue
            state, anns = rejoin_cluster(state, chs)
            self._apply_member_update(node, state, anns)

    def _lose_frame(self, node: NodeId) -> None:
        self.stats.member_losses[node] += 1
        epoch_ch = self.snapshot.membership.get(node) if self.snapshot else None
        if epoch_ch is not None and not self._alive(epoch_ch):
            self.stats.recovery_frames_lost += 1

    def _send_data(self, node: NodeId) -> bool:
        state = self.states[node]
        target = state.data_target
        if state.orphan or target is None:
            self.stats.orphans.add(node)
            self.tracer.emit(
                self.world.clock, TraceKind.LOSS, src=node, outcome="data:orphan"
            )
            return False
        level = self._intra_level(node, target)
        if not self.deliver("data", node, target, level, self.schedule.data_bits):
            return False
        if not self._reaches_head(target):
            return False
        self.stats.frames_delivered += 1
        return True

    def _reaches_head(self, receiver: NodeId) -> bool:
        """
        Whether a frame held by ``receiver`` ends up at a cluster head.

        A standby ACH relays it to its CH, or takes over the cluster when that
        CH is gone.
        """
        state = self.states.get(receiver)
        if state is None:
            return False
        if state.is_final_ch:
            return True
        if not state.is_ach or state.my_ch is None:
            return False
        head = state.my_ch
        if not self._usable(receiver, head):
            self._promote(receiver)
            return True
        level = self._intra_level(receiver, head)
        return self.deliver("relay", receiver, head, level, self.schedule.data_bits)

    def _on_frame(self, event: Event) -> None:
        tick: FrameTick = event.payload
        self._move_to(event.time)
        if self.mid_round_rejoin:
            self._rejoin_drifted()
        if self.protocol.ach_active:
            self._heartbeat()

        for node in sorted(self.states):
            state = self.states[node]
            if not self._alive(node) or state.role != Role.MEMBER:
                continue
            self.stats.frames_sent += 1
            target = state.data_target
            if self._send_data(node):
                continue
            if state.orphan or target is None:
                self._lose_frame(node)
                continue
            self.queue.push(
                event.time + self.schedule.ack_window,
                EventKind.TIMER,
                AckTimeout(node, target, tick.round, tick.frame),
            )

        if tick.frame + 1 < self.schedule.frames_per_round:
            self.queue.push(
                self.schedule.frame_time(tick.round, tick.frame + 1),
                EventKind.MOVE_STEP,
                FrameTick(tick.round, tick.frame + 1),
            )
        else:
            self.queue.push(
                self.schedule.round_end(tick.round), EventKind.TIMER, RoundEnd(tick.round)
            )

    def _on_timer(self, event: Event) -> None:
        if isinstance(event.payload, RoundEnd):
            self._finish_round(event.payload.round)
        else:
            self._on_ack_timeout(event.payload)

    def _on_ack_timeout(self, timeout: AckTimeout) -> None:
        node = timeout.node
        state = self.states.get(node)
        if (
            state is None
            or not self._alive(node)
            or state.role != Role.MEMBER
            or timeout.target not in (state.my_ch, state.my_ach)
            or (state.is_ach and timeout.target == state.my_ch)
        ):
            # Standby ACHs rely on the heartbeat; stale timers only count the loss.
            self._lose_frame(node)
            return

        state, anns = handle_send_failure(state, timeout.target, self._chs_in_range(node))
        self._apply_member_update(node, state, anns)
        if not state.orphan and self._send_data(node):
            return

        state = self.states[node]
        if state.ch_failed and state.my_ach is not None and not state.orphan:
            state, anns = handle_send_failure(state, state.my_ach, self._chs_in_range(node))
            self._apply_member_update(node, state, anns)
            if not state.orphan and self._send_data(node):
                return
        self._lose_frame(node)

    def _finish_round(self, round_index: int) -> None:
        stats = self.stats
        world = self.world
        heads = [
            n for n in sorted(self.states) if self._alive(n) and self.states[n].role == Role.FINAL_CH
        ]
        overlay = build_overlay(
            heads,
            world.positions(),
            world.ledger.alive_mask(),
            world.sink,
            self.table,
            guards_enabled=self.guards_enabled,
        )
        self.overlay = overlay
        for ch in overlay.ch_set:
            if not self._alive(ch):
                continue
            stats.aggregates_sent += 1
            result = forward_aggregate(self, overlay, ch, self.schedule.data_bits)
            if result.partitioned:
                stats.partitioned += 1
                self.tracer.emit(world.clock, TraceKind.PARTITION, src=ch, outcome="partitioned")
            if result.delivered:
                stats.aggregates_delivered += 1
            self.tracer.emit(
                world.clock,
                TraceKind.AGGREGATE,
                src=ch,
                dst=world.sink.id,
                outcome="delivered" if result.delivered else "lost",
            )

        stats.alive_count = len(world.ledger.alive_nodes())
        stats.energy_end_pj = world.ledger.residual_total_pj
        if self.check_invariants:
            check_energy_conservation(world.ledger, self.tracer)
            if world.mobility.model == MobilityModel.STATIC and self.p_loss == 0.0:
                check_ach_continuity(stats)
        engine_log.info(
            f"Round {round_index}: delivery {stats.delivery_ratio:.3f}, "
            f"aggregates {stats.aggregates_delivered}/{stats.aggregates_sent}, "
            f"{stats.alive_count} alive"
        )

    # ============================================================
    # Rounds
    # ============================================================

    def _on_round_boundary(self, event: Event) -> None:
        round_index: int = event.payload
        self._move_to(event.time)
        self.round = round_index
        self.stats = RoundStats(
            round=round_index, energy_start_pj=self.world.ledger.residual_total_pj
        )
        self.tracer.emit(event.time, TraceKind.ROUND, outcome=f"start {round_index}")
        for node in self.world.ledger.alive_nodes():
            self._charge(
                node, self.radio.idle_energy, TraceKind.IDLE, src=node, dst=None, outcome="idle"
            )
        self.stats.snapshot = self.run_clustering_epoch(round_index)

    def _process(self, until: float) -> None:
        while self.queue and self.queue.peek().time <= until:  # type: ignore[union-attr]
            event = self.queue.pop()
            if event.time < self.world.clock:
                raise InvariantViolation(
                    ViolationType.CLOCK, f"{event.time} after {self.world.clock}"
                )
            self.world.clock = event.time
            self._handlers[event.kind](event)

    def run_data_round(self) -> RoundStats:
        """
        Play the data period of the current round and forward the aggregates.

        Returns:
            The round's counters
        """
        self.queue.push(
            self.schedule.frame_time(self.round, 0),
            EventKind.MOVE_STEP,
            FrameTick(self.round, 0),
        )
        self._process(until=self.schedule.round_end(self.round))
        return self.stats

    def run_round(self, round_index: int) -> RoundStats:
        start = self.schedule.round_start(round_index)
        self.queue.push(start, EventKind.ROUND_BOUNDARY, round_index)
        self._process(until=start)
        return self.run_data_round()

    def run(self, rounds: int) -> list[RoundStats]:
        """Play ``rounds`` rounds from the current clock."""
        if rounds < 1:
            raise ValueError("rounds must be >= 1")
        first = self.round + 1 if self.snapshot is not None else 0
        results = [self.run_round(r) for r in range(first, first + rounds)]
        if self.check_invariants:
            check_energy_conservation(self.world.ledger, self.tracer)
        return results
