"""
Simulation data model: events, round timing, world state and round results.
"""

from collections import Counter
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.mobility import Kinematics, MobilityConfig
from src.protocol import NodeId, NodeState
from src.radio import EnergyLedger
from src.routing import Sink


class EventKind(StrEnum):
    """
    Scheduled event kinds. Transmissions are evaluated when they are sent;
    positions only change at move steps, so they need no event of their own.
    """

    TIMER = "timer"
    MOVE_STEP = "move_step"
    ROUND_BOUNDARY = "round_boundary"
    INJECT_FAILURE = "inject_failure"


@dataclass(frozen=True, order=True)
class Event:
    """A scheduled simulation event, ordered by (time, sequence)."""

    time: float
    sequence: int
    kind: EventKind = field(compare=False)
    payload: Any = field(default=None, compare=False)


class FailureMode(StrEnum):
    CRASH = "crash"  # node stops, charge untouched
    DRAIN = "drain"  # battery emptied


class FailureTarget(StrEnum):
    CLUSTER_HEAD = "cluster_head"


class RoundSchedule(BaseModel):
    """
    Round timing and packet sizes.

    A round is a clustering epoch of ``t_cluster`` seconds followed by a data
    period ``t_p`` split into ``frames_per_round`` equal frames.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    t_cluster: float = Field(1.0, gt=0)
    t_p: float = Field(10.0, gt=0)
    frames_per_round: int = Field(10, ge=1)
    ack_timeout: float | None = Field(None, gt=0)  # defaults to one frame
    data_bits: int = Field(2000, gt=0)
    control_bits: int = Field(200, gt=0)

    @model_validator(mode="after")
    def _check_ack_window(self) -> "RoundSchedule":
        if self.ack_timeout is not None and self.ack_timeout > self.frame_duration:
            raise ValueError("ack_timeout must not exceed the frame duration")
        return self

    @property
    def frame_duration(self) -> float:
        return self.t_p / self.frames_per_round

    @property
    def ack_window(self) -> float:
        return self.ack_timeout if self.ack_timeout is not None else self.frame_duration

    @property
    def round_length(self) -> float:
        return self.t_cluster + self.t_p

    def round_start(self, round_index: int) -> float:
        return round_index * self.round_length

    def frame_time(self, round_index: int, frame: int) -> float:
        return self.round_start(round_index) + self.t_cluster + frame * self.frame_duration

    def round_end(self, round_index: int) -> float:
        return self.round_start(round_index + 1)


class RandomStreams(NamedTuple):
    """Independent generators spawned from one run seed."""

    topology: np.random.Generator
    mobility: np.random.Generator
    sensing: np.random.Generator
    loss: np.random.Generator
    protocol: np.random.Generator


@dataclass
class WorldState:
    """
    Everything one run mutates.

    ``states`` holds the protocol state of every node that took part in the
    latest clustering epoch.
    """

    kinematics: list[Kinematics]
    ledger: EnergyLedger
    sink: Sink
    mobility: MobilityConfig
    rngs: RandomStreams
    states: dict[NodeId, NodeState] = field(default_factory=dict)
    clock: float = 0.0
    last_move: float = 0.0

    @property
    def node_count(self) -> int:
        return len(self.kinematics)

    def positions(self) -> np.ndarray:
        return np.array([k.position for k in self.kinematics], dtype=float)

    def position(self, node: NodeId) -> tuple[float, float]:
        if node == self.sink.id:
            return self.sink.position
        return self.kinematics[node].position

    def is_alive(self, node: NodeId) -> bool:
        return node == self.sink.id or self.ledger.is_alive(node)


@dataclass(frozen=True)
class ClusterSnapshot:
    """
    Global view of one clustering epoch.

    Attributes:
        round: Round index
        heads: Final cluster heads, ascending
        membership: member -> CH
        ach: CH -> assistant (only CHs that selected one)
        iterations: node -> Phase II iterations it ran
    """

    round: int
    heads: tuple[NodeId, ...]
    membership: dict[NodeId, NodeId]
    ach: dict[NodeId, NodeId]
    iterations: dict[NodeId, int]

    def cluster_sizes(self) -> dict[NodeId, int]:
        """CH -> cluster size, the CH included."""
        sizes = dict.fromkeys(self.heads, 1)
        for ch in self.membership.values():
            if ch in sizes:
                sizes[ch] += 1
        return sizes

    @property
    def max_iterations_run(self) -> int:
        return max(self.iterations.values(), default=0)


@dataclass(frozen=True)
class FailureRecord:
    """A failure that hit a node during a round."""

    node: NodeId
    time: float
    mode: FailureMode
    was_ch: bool
    ach: NodeId | None


@dataclass
class RoundStats:
    """Accumulated counters of one round."""

    round: int
    snapshot: ClusterSnapshot | None = None
    frames_sent: int = 0
    frames_delivered: int = 0
    aggregates_sent: int = 0
    aggregates_delivered: int = 0
    partitioned: int = 0
    recovery_frames_lost: int = 0
    control_messages: int = 0
    promotions: int = 0
    energy_start_pj: int = 0
    energy_end_pj: int = 0
    alive_count: int = 0
    orphans: set[NodeId] = field(default_factory=set)
    member_losses: Counter[NodeId] = field(default_factory=Counter)
    failures: list[FailureRecord] = field(default_factory=list)
    reachable_after_failure: dict[NodeId, set[NodeId]] = field(default_factory=dict)

    @property
    def frames_lost(self) -> int:
        return self.frames_sent - self.frames_delivered

    @property
    def delivery_ratio(self) -> float:
        """Member frames delivered / sent; 1.0 for a round without member frames."""
        if self.frames_sent == 0:
            return 1.0
        return self.frames_delivered / self.frames_sent

    @property
    def aggregate_delivery_ratio(self) -> float:
        if self.aggregates_sent == 0:
            return 1.0
        return self.aggregates_delivered / self.aggregates_sent

    @property
    def energy_consumed_pj(self) -> int:
        return self.energy_start_pj - self.energy_end_pj
