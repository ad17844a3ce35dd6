"""
Protocol error types.

Every error raised by the per-node state machine derives from ``ProtocolError``
so the engine can tell a misuse of the protocol API apart from a modeled outcome
(packet loss, orphaning), which is never an exception.
"""


class ProtocolError(ValueError):
    """Base class for protocol state machine errors."""


class NoNeighborsError(ProtocolError):
    """A neighbor average was requested over an empty neighbor list."""

    def __init__(self) -> None:
        super().__init__("no neighbors")


class EnergyCapacityError(ProtocolError):
    """Residual energy is larger than the battery capacity."""

    def __init__(self, e_res: float, e_max: float) -> None:
        super().__init__(f"energy exceeds capacity ({e_res} J > {e_max} J)")


class NoCandidatesError(ProtocolError):
    """least_cost was called without candidates."""

    def __init__(self) -> None:
        super().__init__("no candidates")


class PhaseTerminatedError(ProtocolError):
    """step_phase2 was called on a node whose Phase II already finished."""

    def __init__(self, node: int) -> None:
        super().__init__(f"phase 2 already terminated (node {node})")


class NotClusterHeadError(ProtocolError):
    """A cluster head operation was invoked on a node that is not a final CH."""

    def __init__(self, node: int) -> None:
        super().__init__(f"not a cluster head (node {node})")


class NotMemberError(ProtocolError):
    """A member operation was invoked on a node that is not a cluster member."""

    def __init__(self, node: int) -> None:
        super().__init__(f"not a cluster member (node {node})")
