"""
World construction: random streams, node placement, energy and the sink.
"""

from collections.abc import Sequence

import numpy as np

from src.engine.models import RandomStreams, WorldState
from src.mobility import MobilityConfig, Vector, initial_kinematics
from src.radio import EnergyLedger
from src.routing import Sink

STREAM_NAMES = RandomStreams._fields


def spawn_streams(seed: int) -> RandomStreams:
    """One independent generator per concern, all derived from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return RandomStreams(*(np.random.default_rng(child) for child in children))


def build_world(
    node_count: int,
    mobility: MobilityConfig,
    e_max: float,
    seed: int,
    *,
    positions: Sequence[Vector] | None = None,
    initial_energy: Sequence[float] | None = None,
    sink_position: Vector | None = None,
) -> WorldState:
    """
    Build the initial world of one run.

    Args:
        node_count: Number of sensor nodes (ids ``0..node_count-1``)
        mobility: Movement model and world bounds
        e_max: Battery capacity in joules
        seed: Run seed
        positions: Pinned initial positions, drawn uniformly when None
        initial_energy: Per-node starting energy, full batteries when None
        sink_position: Defaults to the center of the world
    """
    if node_count < 1:
        raise ValueError("node_count must be >= 1")
    if positions is not None and len(positions) != node_count:
        raise ValueError("positions must list every node")
    if initial_energy is not None and len(initial_energy) != node_count:
        raise ValueError("initial_energy must list every node")

    bounds = mobility.world
    for point in positions or ():
        if not bounds.contains(point):
            raise ValueError(f"position {point} lies outside the world")

    rngs = spawn_streams(seed)
    kinematics = [
        initial_kinematics(
            mobility,
            rngs.topology,
            position=tuple(positions[node]) if positions is not None else None,
        )
        for node in range(node_count)
    ]

    ledger = (
        EnergyLedger(initial_energy, e_max)
        if initial_energy is not None
        else EnergyLedger.full(node_count, e_max)
    )
    sink = Sink(
        id=node_count,
        position=sink_position or (bounds.width / 2.0, bounds.height / 2.0),
    )
    return WorldState(
        kinematics=kinematics,
        ledger=ledger,
        sink=sink,
        mobility=mobility,
        rngs=rngs,
    )
