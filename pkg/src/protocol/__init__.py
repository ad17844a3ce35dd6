"""
Clustering protocol core.

Pure per-node state machine and the formulas it is built on. The engine drives
it; nothing in this package performs I/O.
"""

from src.protocol.errors import (
    EnergyCapacityError,
    NoCandidatesError,
    NoNeighborsError,
    NotClusterHeadError,
    NotMemberError,
    PhaseTerminatedError,
    ProtocolError,
)
from src.protocol.formulas import (
    compute_ccf,
    compute_ch_prob,
    compute_va,
    compute_vf,
    least_cost,
    max_iterations,
    node_cost,
)
from src.protocol.models import (
    MAX_COST,
    Announcement,
    AnnouncementKind,
    Candidate,
    ChEntry,
    CostMode,
    NeighborEntry,
    NodeId,
    NodeState,
    ProtocolConfig,
    Role,
    RoleTag,
)
from src.protocol.state_machine import (
    accept_ach_decl,
    accept_cost_velocity,
    accept_join,
    adopt_promoted_ch,
    finalize_phase3,
    handle_send_failure,
    init_phase1,
    merge_declarations,
    promote_to_ch,
    rejoin_cluster,
    select_ach,
    step_phase2,
)

__all__ = [
    # Models
    "MAX_COST",
    "Announcement",
    "AnnouncementKind",
    "Candidate",
    "ChEntry",
    "CostMode",
    "NeighborEntry",
    "NodeId",
    "NodeState",
    "ProtocolConfig",
    "Role",
    "RoleTag",
    # Formulas
    "compute_ccf",
    "compute_ch_prob",
    "compute_va",
    "compute_vf",
    "least_cost",
    "max_iterations",
    "node_cost",
    # State machine
    "init_phase1",
    "step_phase2",
    "finalize_phase3",
    "select_ach",
    "handle_send_failure",
    "merge_declarations",
    "accept_cost_velocity",
    "accept_join",
    "accept_ach_decl",
    "adopt_promoted_ch",
    "promote_to_ch",
    "rejoin_cluster",
    # Errors
    "ProtocolError",
    "NoNeighborsError",
    "EnergyCapacityError",
    "NoCandidatesError",
    "PhaseTerminatedError",
    "NotClusterHeadError",
    "NotMemberError",
]
