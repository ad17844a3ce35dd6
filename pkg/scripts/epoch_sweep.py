#!/usr/bin/env python3
"""
Sweep clustering epochs across p_min values and report the worst case.

Each epoch is checked for bounded Phase II iterations, full coverage and a
unique cluster per node; the first violation aborts with exit code 2.

Usage:
    uv run python scripts/epoch_sweep.py
    uv run python scripts/epoch_sweep.py --epochs 200 --nodes 50 --p-min 16 256
"""

import argparse
import sys
import time
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.engine import (
    InvariantViolation,
    RoundSchedule,
    Simulator,
    build_world,
    check_coverage,
    check_uniqueness,
)
from src.mobility import MobilityConfig
from src.protocol import ProtocolConfig, max_iterations
from src.radio import PowerTable, RadioParams


def sweep(p_min: float, epochs: int, nodes: int) -> tuple[int, int]:
    """Run ``epochs`` seeded epochs; return (worst iterations, total CHs)."""
    protocol = ProtocolConfig(p_min=p_min)
    worst = heads = 0
    for seed in range(epochs):
        world = build_world(nodes, MobilityConfig(seed=seed), protocol.e_max, seed)
        sim = Simulator(world, protocol, PowerTable(), RadioParams(), RoundSchedule())
        snapshot = sim.run_clustering_epoch(0)
        check_coverage(sim.states, world.ledger.alive_nodes())
        check_uniqueness(sim.states)
        worst = max(worst, snapshot.max_iterations_run)
        heads += len(snapshot.heads)
    return worst, heads


def main(epochs: int, nodes: int, denominators: list[int]) -> int:
    print(f"\n{'=' * 60}")
    print("Clustering epoch sweep")
    print(f"Epochs: {epochs}, Nodes: {nodes}")
    print(f"{'=' * 60}\n")

    for denominator in denominators:
        p_min = 1.0 / denominator
        bound = max_iterations(p_min)
        start = time.perf_counter()
        try:
            worst, heads = sweep(p_min, epochs, nodes)
        except InvariantViolation as e:
            print(f"p_min=1/{denominator}: FAILED {e}")
            return 2
        elapsed = time.perf_counter() - start
        print(
            f"p_min=1/{denominator:<5} bound {bound:>2}  worst {worst:>2}  "
            f"mean CHs {heads / epochs:6.2f}  {elapsed:6.1f}s"
        )
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Sweep clustering epochs across p_min")
    parser.add_argument("--epochs", type=int, default=1000, help="Epochs per p_min")
    parser.add_argument("--nodes", type=int, default=100, help="Nodes per epoch")
    parser.add_argument(
        "--p-min",
        type=int,
        nargs="+",
        default=[16, 256, 1024],
        help="p_min denominators (p_min = 1/N)",
    )
    args = parser.parse_args()
    sys.exit(main(args.epochs, args.nodes, args.p_min))
