"""Inter-cluster data plane: CH overlay, guard relays and sink forwarding."""

from src.routing.forwarding import ForwardResult, InterClusterLink, forward_aggregate
from src.routing.overlay import (
    GuardEdge,
    Leg,
    Overlay,
    Sink,
    build_overlay,
    route_to_sink,
)

__all__ = [
    "ForwardResult",
    "GuardEdge",
    "InterClusterLink",
    "Leg",
    "Overlay",
    "Sink",
    "build_overlay",
    "forward_aggregate",
    "route_to_sink",
]
