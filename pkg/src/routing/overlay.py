"""
Cluster-head overlay and hop-count routing to the sink.

The overlay is an undirected networkx graph whose vertices are the alive
cluster heads plus the sink. An edge is either direct (both endpoints within
inter-band range) or relayed by a guard node, a non-CH node in range of both
endpoints. Edge attribute ``guard`` holds the relay id or None.
"""

from collections.abc import Iterable
from dataclasses import dataclass
from itertools import pairwise
from typing import NamedTuple

import networkx as nx
import numpy as np
from loguru import logger

from src.protocol import NodeId
from src.radio import PowerTable, distance_matrix

routing_log = logger.bind(module="Routing")


class Sink(NamedTuple):
    """The data collection point. Its id is one past the last sensor node."""

    id: NodeId
    position: tuple[float, float]


@dataclass(frozen=True)
class GuardEdge:
    ch_a: NodeId
    guard: NodeId
    ch_b: NodeId


@dataclass(frozen=True)
class Leg:
    """One physical transmission of a logical hop."""

    src: NodeId
    dst: NodeId


class Overlay:
    """Snapshot of CH-to-CH and CH-to-sink reachability."""

    def __init__(self, graph: nx.Graph, sink: Sink):
        self.graph = graph
        self.sink = sink

    @property
    def ch_set(self) -> list[NodeId]:
        return sorted(n for n in self.graph.nodes if n != self.sink.id)

    @property
    def edges(self) -> set[tuple[NodeId, NodeId]]:
        """Direct CH-CH edges, both orientations."""
        pairs: set[tuple[NodeId, NodeId]] = set()
        for a, b, guard in self.graph.edges(data="guard"):
            if guard is None and self.sink.id not in (a, b):
                pairs.update({(a, b), (b, a)})
        return pairs

    @property
    def guard_edges(self) -> list[GuardEdge]:
        """Guarded CH-CH edges with ``ch_a < ch_b``."""
        found = [
            GuardEdge(min(a, b), guard, max(a, b))
            for a, b, guard in self.graph.edges(data="guard")
            if guard is not None and self.sink.id not in (a, b)
        ]
        return sorted(found, key=lambda e: (e.ch_a, e.ch_b))

    @property
    def sink_attachment(self) -> list[NodeId]:
        if self.sink.id not in self.graph:
            return []
        return sorted(self.graph.neighbors(self.sink.id))

    def guard_of(self, a: NodeId, b: NodeId) -> NodeId | None:
        return self.graph.edges[a, b]["guard"]

    def has_link(self, a: NodeId, b: NodeId) -> bool:
        return self.graph.has_edge(a, b)

    def legs(self, path: list[NodeId]) -> list[list[Leg]]:
        """Physical legs of every logical hop of ``path``, sink hop included."""
        hops = []
        for a, b in pairwise([*path, self.sink.id]):
            guard = self.guard_of(a, b)
            if guard is None:
                hops.append([Leg(a, b)])
            else:
                hops.append([Leg(a, guard), Leg(guard, b)])
        return hops

    def without_node(self, node: NodeId) -> "Overlay":
        graph = self.graph.copy()
        graph.remove_node(node)
        return Overlay(graph, self.sink)

    def without_link(self, a: NodeId, b: NodeId) -> "Overlay":
        graph = self.graph.copy()
        graph.remove_edge(a, b)
        return Overlay(graph, self.sink)


def _pick_guard(
    dist: np.ndarray, a: int, b: int, relays: np.ndarray, reach: float
) -> int | None:
    """Relay within reach of both endpoints minimizing the longer leg; ties by id."""
    eligible = relays & (dist[a] <= reach) & (dist[b] <= reach)
    candidates = np.flatnonzero(eligible)
    if candidates.size == 0:
        return None
    worst = np.maximum(dist[a, candidates], dist[b, candidates])
    return int(candidates[np.argmin(worst)])


def build_overlay(
    heads: Iterable[NodeId],
    positions: np.ndarray,
    alive: np.ndarray,
    sink: Sink,
    table: PowerTable,
    *,
    guards_enabled: bool = True,
) -> Overlay:
    """
    Build the CH overlay for the current positions.

    Args:
        heads: Cluster heads; dead ones are skipped
        positions: (n, 2) node coordinates indexed by node id
        alive: (n,) liveness mask
        sink: Sink, whose id must be ``n``
        table: Power table; the top level bounds every edge
        guards_enabled: Bridge out-of-range pairs through guard nodes
    """
    n = len(positions)
    if sink.id != n:
        raise ValueError(f"sink id must be {n}, got {sink.id}")

    reach = table.inter_range
    dist = distance_matrix(np.vstack([positions, np.asarray(sink.position, dtype=float)]))
    live_heads = sorted(h for h in set(heads) if alive[h])

    relays = np.zeros(n + 1, dtype=bool)
    relays[:n] = alive
    relays[live_heads] = False

    graph = nx.Graph()
    endpoints = [*live_heads, sink.id]
    graph.add_nodes_from(endpoints)
    for i, a in enumerate(endpoints):
        for b in endpoints[i + 1 :]:
            if dist[a, b] <= reach:
                graph.add_edge(a, b, guard=None)
            elif guards_enabled:
                guard = _pick_guard(dist, a, b, relays, reach)
                if guard is not None:
                    graph.add_edge(a, b, guard=guard)

    overlay = Overlay(graph, sink)
    routing_log.debug(
        f"Overlay: {len(live_heads)} CHs, {len(overlay.edges) // 2} direct, "
        f"{len(overlay.guard_edges)} guarded, {len(overlay.sink_attachment)} at sink"
    )
    return overlay


def route_to_sink(overlay: Overlay, src_ch: NodeId) -> list[NodeId] | None:
    """
    Fewest-hop CH path from ``src_ch`` to a sink-attached CH.

    The returned path starts at ``src_ch`` and ends at the CH that transmits to
    the sink; a sink-attached CH routes as ``[src_ch]``. Guarded edges count as
    one hop. Among equally short continuations the smallest next-hop id wins.

    Returns:
        The path, or None when ``src_ch`` is partitioned from the sink
    """
    graph = overlay.graph
    if src_ch == overlay.sink.id or src_ch not in graph:
        raise ValueError(f"{src_ch} is not a cluster head of the overlay")

    depth = nx.single_source_shortest_path_length(graph, overlay.sink.id)
    if src_ch not in depth:
        routing_log.warning(f"CH {src_ch}: partitioned from the sink")
        return None

    path = [src_ch]
    current = src_ch
    while depth[current] > 1:
        current = min(n for n in graph.neighbors(current) if depth.get(n) == depth[current] - 1)
        path.append(current)
    return path
