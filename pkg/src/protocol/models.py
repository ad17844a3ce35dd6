"""
Protocol data model.

Plain value types shared by the state machine, the engine and the data plane.
State objects are frozen: every protocol operation returns a new ``NodeState``
instead of mutating its input, which keeps the state machine a pure function.
"""

from dataclasses import dataclass, field
from enum import StrEnum
from typing import NamedTuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

NodeId = int

# Cost advertised by a node with no neighbors. Finite so traces stay plain JSON.
MAX_COST = 1.0e9

# Tolerance of the "CH_prob = 1" test.
PROB_EPSILON = 1e-12


class Role(StrEnum):
    """Clustering role of a node."""

    UNDECIDED = "undecided"
    TENTATIVE_CH = "tentative_ch"
    FINAL_CH = "final_ch"
    MEMBER = "member"


class RoleTag(StrEnum):
    """What a node knows about a neighbor's candidacy."""

    UNKNOWN = "unknown"
    TENTATIVE_CH = "tentative_ch"
    FINAL_CH = "final_ch"


class CostMode(StrEnum):
    """How a node derives the cost it advertises."""

    INVERSE_DEGREE = "inverse_degree"  # dense clusters
    DEGREE = "degree"  # load-balanced clusters
    CCF = "ccf"  # communication cost factor


class AnnouncementKind(StrEnum):
    """Wire message kinds."""

    TENTATIVE_CH = "tentative_ch"
    FINAL_CH = "final_ch"
    JOIN = "join"
    ACH_DECL = "ach_decl"
    COST_VELOCITY = "cost_velocity"


class Candidate(NamedTuple):
    """A (node, cost) pair fed to least-cost selection."""

    id: NodeId
    cost: float


class ChEntry(NamedTuple):
    """One entry of L_CH: a declared candidate and how far it got."""

    id: NodeId
    cost: float
    tag: RoleTag


@dataclass(frozen=True)
class NeighborEntry:
    """One entry of L_adj.

    Attributes:
        id: Neighbor id.
        cost: Cost the neighbor advertised (0 until its cost_velocity arrives).
        min_power: Smallest intra-band power level index reaching the neighbor.
        min_power_mw: Transmit power of ``min_power`` in milliwatts (CCF input).
        relative_speed: |v_self - v_neighbor| in m/s.
        role_tag: Candidacy last heard from the neighbor.
    """

    id: NodeId
    cost: float = 0.0
    min_power: int = 0
    min_power_mw: float = 0.0
    relative_speed: float = 0.0
    role_tag: RoleTag = RoleTag.UNKNOWN

    def __post_init__(self) -> None:
        if self.relative_speed < 0:
            raise ValueError("relative_speed must be >= 0")
        if self.min_power < 0:
            raise ValueError("min_power must be a valid level index")


@dataclass(frozen=True)
class Announcement:
    """A protocol message.

    Field order (kind, sender, cost, payload, velocity_info, roster) is the
    canonical order used when a message is written to the trace.
    """

    kind: AnnouncementKind
    sender: NodeId
    cost: float
    payload: NodeId | None = None
    velocity_info: tuple[float, float] | None = None
    roster: tuple[Candidate, ...] = ()

    def __post_init__(self) -> None:
        if (
            self.kind in (AnnouncementKind.JOIN, AnnouncementKind.ACH_DECL)
            and self.payload is None
        ):
            raise ValueError(f"{self.kind} announcement requires a payload")

    def as_record(self) -> dict:
        """Return the message as a plain dict in canonical field order."""
        return {
            "kind": str(self.kind),
            "sender": self.sender,
            "cost": self.cost,
            "payload": self.payload,
            "velocity_info": list(self.velocity_info) if self.velocity_info else None,
            "roster": [[c.id, c.cost] for c in self.roster],
        }


@dataclass(frozen=True)
class NodeState:
    """Full protocol state of one node.

    ``l_members`` holds (id, cost) pairs because the ACH is picked by cost.
    ``ach_roster`` is the copy of the CH's member list an ACH keeps so it can take
    over the cluster.
    """

    me: NodeId
    role: Role = Role.UNDECIDED
    l_adj: tuple[NeighborEntry, ...] = ()
    l_ch: tuple[ChEntry, ...] = ()
    l_members: tuple[Candidate, ...] = ()
    my_ch: NodeId | None = None
    my_ach: NodeId | None = None
    is_ach: bool = False
    ch_prob: float = 0.0
    ch_prev: float = 0.0
    e_res: float = 0.0
    cost: float = 0.0
    iteration: int = 0
    iteration_limit: int = 1
    phase2_done: bool = False
    ch_failed: bool = False
    orphan: bool = False
    ach_roster: tuple[Candidate, ...] = field(default=())

    @property
    def degree(self) -> int:
        """m, the number of neighbors."""
        return len(self.l_adj)

    @property
    def is_final_ch(self) -> bool:
        return self.role == Role.FINAL_CH

    @property
    def data_target(self) -> NodeId | None:
        """Where this node currently sends its data frames."""
        if self.ch_failed and self.my_ach is not None:
            return self.my_ach
        return self.my_ch

    def member_ids(self) -> list[NodeId]:
        return [m.id for m in self.l_members]


class ProtocolConfig(BaseModel):
    """Per-run protocol parameters.

    ``heed_mode`` is the baseline: the velocity factor is forced to 1 and no ACH
    is selected. Use ``ach_active`` instead of reading ``ach_enabled`` directly.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    k_fraction: float = 0.1
    p_min: float = 1.0 / 1024
    e_max: float = 2.0
    cost_mode: CostMode = CostMode.INVERSE_DEGREE
    heed_mode: bool = False
    va_threshold: float = 1.0
    ach_enabled: bool = True

    @field_validator("k_fraction")
    @classmethod
    def _check_k(cls, v: float) -> float:
        if not 0 < v <= 1:
            raise ValueError("k_fraction out of range")
        return v

    @field_validator("p_min")
    @classmethod
    def _check_p_min(cls, v: float) -> float:
        if not 0 < v <= 1:
            raise ValueError("p_min out of range")
        return v

    @field_validator("e_max", "va_threshold")
    @classmethod
    def _check_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be > 0")
        return v

    @model_validator(mode="after")
    def _check_p_min_below_k(self) -> "ProtocolConfig":
        if self.p_min > self.k_fraction:
            raise ValueError("p_min must not exceed k_fraction")
        return self

    @property
    def ach_active(self) -> bool:
        """True when cluster heads should select an assistant."""
        return self.ach_enabled and not self.heed_mode
