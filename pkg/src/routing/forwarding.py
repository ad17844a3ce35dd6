"""
Round-end forwarding of a cluster's aggregate to the sink.
"""

from dataclasses import dataclass
from typing import Protocol

from loguru import logger

from src.protocol import NodeId
from src.routing.overlay import Overlay, route_to_sink

routing_log = logger.bind(module="Routing")


class InterClusterLink(Protocol):
    """Transport used by the forwarder. Charges energy and evaluates delivery."""

    def send_inter(self, src: NodeId, dst: NodeId, bits: int) -> bool: ...


@dataclass(frozen=True)
class ForwardResult:
    """
    Outcome of one aggregate.

    Attributes:
        delivered: The sink received the aggregate
        path: CH path last attempted
        rerouted: A repair route was computed
        partitioned: No route existed at the start
        transmissions: Physical transmissions spent
    """

    delivered: bool
    path: tuple[NodeId, ...] = ()
    rerouted: bool = False
    partitioned: bool = False
    transmissions: int = 0


@dataclass(frozen=True)
class _Walk:
    delivered: bool
    transmissions: int
    stranded: NodeId | None = None
    next_hop: NodeId | None = None
    via_guard_first_leg: bool = False


def _walk(link: InterClusterLink, overlay: Overlay, path: list[NodeId], bits: int) -> _Walk:
    sent = 0
    for hop in overlay.legs(path):
        holder, target = hop[0].src, hop[-1].dst
        for index, leg in enumerate(hop):
            sent += 1
            if not link.send_inter(leg.src, leg.dst, bits):
                return _Walk(
                    delivered=False,
                    transmissions=sent,
                    stranded=holder,
                    next_hop=target,
                    via_guard_first_leg=len(hop) == 2 and index == 0,
                )
    return _Walk(delivered=True, transmissions=sent)


def forward_aggregate(
    link: InterClusterLink, overlay: Overlay, src_ch: NodeId, bits: int
) -> ForwardResult:
    """
    Send ``bits`` from ``src_ch`` to the sink along the overlay.

    When a hop fails, the CH that still holds the aggregate computes one repair
    route that avoids the failed next hop (or only the failed guard link); a
    second failure loses the aggregate.
    """
    path = route_to_sink(overlay, src_ch)
    if path is None:
        return ForwardResult(delivered=False, partitioned=True)

    first = _walk(link, overlay, path, bits)
    if first.delivered:
        return ForwardResult(True, tuple(path), transmissions=first.transmissions)

    assert first.stranded is not None and first.next_hop is not None
    if first.next_hop == overlay.sink.id or first.via_guard_first_leg:
        repaired = overlay.without_link(first.stranded, first.next_hop)
    else:
        repaired = overlay.without_node(first.next_hop)

    detour = route_to_sink(repaired, first.stranded)
    if detour is None:
        routing_log.warning(f"CH {src_ch}: aggregate lost at {first.stranded}, no detour")
        return ForwardResult(
            False, tuple(path), rerouted=True, transmissions=first.transmissions
        )

    second = _walk(link, repaired, detour, bits)
    full_path = tuple(path[: path.index(first.stranded)] + detour)
    if not second.delivered:
        routing_log.warning(f"CH {src_ch}: aggregate lost on the detour")
    return ForwardResult(
        second.delivered,
        full_path,
        rerouted=True,
        transmissions=first.transmissions + second.transmissions,
    )
