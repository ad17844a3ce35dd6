"""
Unit tests for src/routing/overlay.py and src/routing/forwarding.py
"""

import networkx as nx
import numpy as np
import pytest

from src.routing import (
    GuardEdge,
    Leg,
    Sink,
    build_overlay,
    forward_aggregate,
    route_to_sink,
)
from src.radio import PowerTable
from tests.fixtures.routing import ScriptedLink, overlay_for

pytest_plugins = ["tests.fixtures.routing"]

pytestmark = pytest.mark.unit

FAR = (1000.0, 1000.0)


# ============================================================
# build_overlay
# ============================================================


class TestBuildOverlay:
    """Tests for build_overlay function."""

    def test_direct_edge(self):
        """CHs 80 m apart share a direct edge."""
        overlay = overlay_for([(0.0, 0.0), (80.0, 0.0)], heads=[0, 1], sink_at=(100.0, 100.0))
        assert overlay.edges == {(0, 1), (1, 0)}
        assert overlay.guard_of(0, 1) is None

    def test_guard_edge(self):
        """A node midway bridges CHs 150 m apart."""
        overlay = overlay_for(
            [(0.0, 0.0), (75.0, 0.0), (150.0, 0.0)], heads=[0, 2], sink_at=FAR
        )
        assert overlay.edges == set()
        assert overlay.guard_edges == [GuardEdge(0, 1, 2)]

    def test_no_common_node(self):
        """Without a shared neighbor the pair stays disconnected."""
        overlay = overlay_for(
            [(0.0, 0.0), (75.0, 200.0), (150.0, 0.0)], heads=[0, 2], sink_at=FAR
        )
        assert not overlay.has_link(0, 2)

    def test_guards_disabled(self):
        """Turning guards off drops relayed edges."""
        overlay = overlay_for(
            [(0.0, 0.0), (75.0, 0.0), (150.0, 0.0)],
            heads=[0, 2],
            sink_at=FAR,
            guards_enabled=False,
        )
        assert overlay.guard_edges == []

    def test_guard_minimizes_longer_leg(self):
        """The relay with the shorter worst leg wins over a lower id."""
        overlay = overlay_for(
            [(0.0, 0.0), (70.0, 10.0), (150.0, 0.0), (75.0, 0.0)],
            heads=[0, 2],
            sink_at=FAR,
        )
        assert overlay.guard_of(0, 2) == 3

    def test_guard_tie_by_id(self):
        """Symmetric relays: smallest id."""
        overlay = overlay_for(
            [(0.0, 0.0), (75.0, 10.0), (150.0, 0.0), (75.0, -10.0)],
            heads=[0, 2],
            sink_at=FAR,
        )
        assert overlay.guard_of(0, 2) == 1

    def test_dead_nodes_excluded(self):
        """Dead relays never guard and dead heads are not vertices."""
        overlay = overlay_for(
            [(0.0, 0.0), (75.0, 0.0), (150.0, 0.0), (10.0, 0.0)],
            heads=[0, 2, 3],
            sink_at=FAR,
            alive=[True, False, True, False],
        )
        assert overlay.ch_set == [0, 2]
        assert not overlay.has_link(0, 2)

    def test_sink_attachment_via_guard(self):
        """The sink hop may itself be guarded."""
        overlay = overlay_for([(0.0, 0.0), (75.0, 0.0)], heads=[0], sink_at=(150.0, 0.0))
        assert overlay.sink_attachment == [0]
        assert overlay.guard_of(0, 2) == 1

    def test_sink_id_checked(self):
        """The sink id must follow the last node id."""
        with pytest.raises(ValueError):
            build_overlay(
                [0], np.zeros((2, 2)), np.ones(2, dtype=bool), Sink(5, (0.0, 0.0)), PowerTable()
            )

    def test_edges_symmetric_and_guards_valid(self):
        """Random layouts: symmetric edges, guards alive non-heads in range of both."""
        rng = np.random.default_rng(8)
        table = PowerTable()
        for _ in range(20):
            points = rng.uniform(0, 300, size=(40, 2))
            heads = sorted(rng.choice(40, size=8, replace=False).tolist())
            overlay = overlay_for([tuple(p) for p in points], heads, sink_at=(150.0, 150.0))
            for a, b in overlay.edges:
                assert (b, a) in overlay.edges
            for edge in overlay.guard_edges:
                assert edge.guard not in heads
                for ch in (edge.ch_a, edge.ch_b):
                    gap = np.hypot(*(points[edge.guard] - points[ch]))
                    assert gap <= table.inter_range


# ============================================================
# route_to_sink
# ============================================================


class TestRouteToSink:
    """Tests for route_to_sink function."""

    def test_attached_source(self, diamond_overlay):
        """A sink-attached CH routes as itself."""
        assert route_to_sink(diamond_overlay, 1) == [1]

    def test_tie_smallest_next_hop(self, diamond_overlay):
        """Two equal routes: the smaller next hop."""
        assert route_to_sink(diamond_overlay, 0) == [0, 1]

    def test_guarded_sink_hop(self, guarded_line_overlay):
        """The only attached CH reaches the sink through its guard."""
        path = route_to_sink(guarded_line_overlay, 0)
        assert path == [0, 1]
        assert guarded_line_overlay.legs(path) == [
            [Leg(0, 1)],
            [Leg(1, 3), Leg(3, 4)],
        ]

    def test_matches_bfs(self, guarded_line_overlay):
        """Hop count equals the breadth-first distance minus the sink hop."""
        graph = guarded_line_overlay.graph
        for ch in guarded_line_overlay.ch_set:
            path = route_to_sink(guarded_line_overlay, ch)
            assert len(path) == nx.shortest_path_length(graph, ch, 4)
            for a, b in zip(path, path[1:], strict=False):
                assert graph.has_edge(a, b)

    def test_partitioned(self):
        """An isolated CH has no route."""
        overlay = overlay_for([(0.0, 0.0), (500.0, 500.0)], heads=[0, 1], sink_at=(10.0, 0.0))
        assert route_to_sink(overlay, 1) is None

    def test_not_a_head(self, diamond_overlay):
        """Only overlay CHs can be routed."""
        with pytest.raises(ValueError):
            route_to_sink(diamond_overlay, 3)


# ============================================================
# forward_aggregate
# ============================================================


class TestForwardAggregate:
    """Tests for forward_aggregate function."""

    def test_direct(self, diamond_overlay):
        """One hop on an ideal channel: one transmission."""
        link = ScriptedLink()
        result = forward_aggregate(link, diamond_overlay, 1, 2000)
        assert result.delivered and result.transmissions == 1
        assert link.sent == [(1, 3, 2000)]

    def test_guard_hop_two_transmissions(self, guarded_line_overlay):
        """A guarded hop costs two physical sends."""
        link = ScriptedLink()
        result = forward_aggregate(link, guarded_line_overlay, 1, 500)
        assert result.delivered
        assert [(s, d) for s, d, _ in link.sent] == [(1, 3), (3, 4)]

    def test_reroute_around_lost_next_hop(self, diamond_overlay):
        """A failed next hop is removed and the detour delivers."""
        link = ScriptedLink({(0, 1)})
        result = forward_aggregate(link, diamond_overlay, 0, 2000)
        assert result.delivered and result.rerouted
        assert result.path == (0, 2)
        assert result.transmissions == 3

    def test_reroute_after_sink_hop(self, diamond_overlay):
        """A failed sink hop drops only that link."""
        link = ScriptedLink({(1, 3)})
        result = forward_aggregate(link, diamond_overlay, 0, 2000)
        assert result.delivered
        assert result.path == (0, 1, 2)

    def test_no_alternate(self, guarded_line_overlay):
        """Without a detour the aggregate is lost."""
        link = ScriptedLink({(0, 1)})
        result = forward_aggregate(link, guarded_line_overlay, 0, 2000)
        assert not result.delivered and result.rerouted
        assert not result.partitioned

    def test_single_repair(self, diamond_overlay):
        """A second failure is final."""
        link = ScriptedLink({(0, 1), (0, 2)})
        result = forward_aggregate(link, diamond_overlay, 0, 2000)
        assert not result.delivered
        assert len(link.sent) == 2

    def test_partitioned(self):
        """No route: nothing is sent."""
        overlay = overlay_for([(0.0, 0.0), (500.0, 500.0)], heads=[0, 1], sink_at=(10.0, 0.0))
        link = ScriptedLink()
        result = forward_aggregate(link, overlay, 1, 2000)
        assert result.partitioned and not result.delivered
        assert link.sent == []
