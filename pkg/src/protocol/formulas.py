"""
Clustering formulas.

Cost factors, velocity factor, cluster head probability and the iteration bound
of Phase II. All functions are pure and side-effect free.
"""

import math
from collections.abc import Iterable, Sequence

import numpy as np

from src.protocol.errors import EnergyCapacityError, NoCandidatesError, NoNeighborsError
from src.protocol.models import MAX_COST, Candidate, CostMode, NodeId, ProtocolConfig

# ============================================================
# Neighbor averages
# ============================================================


def compute_ccf(min_powers: Sequence[float]) -> float:
    """
    Communication cost factor: mean of the minimum power needed per neighbor.

    Args:
        min_powers: Minimum transmit power towards each neighbor

    Returns:
        Arithmetic mean of ``min_powers``

    Raises:
        NoNeighborsError: if ``min_powers`` is empty

    Examples:
        >>> compute_ccf([1, 2, 3])
        2.0
    """
    if len(min_powers) == 0:
        raise NoNeighborsError()
    return float(np.mean(min_powers))


def compute_va(relative_speeds: Sequence[float]) -> float:
    """
    Average relative speed between a node and its neighbors (m/s).

    Raises:
        NoNeighborsError: if ``relative_speeds`` is empty
    """
    if len(relative_speeds) == 0:
        raise NoNeighborsError()
    return float(np.mean(relative_speeds))


def compute_vf(va: float, va_threshold: float = 1.0) -> float:
    """
    Velocity factor in (0, 1].

    1 below the threshold, ``va_threshold / va`` at or above it. With the default
    threshold of 1 m/s this is exactly 1/Va.

    Examples:
        >>> compute_vf(0.5)
        1.0
        >>> compute_vf(4.0)
        0.25
    """
    if va < 0:
        raise ValueError("va must be >= 0")
    if va < va_threshold:
        return 1.0
    return va_threshold / va


# ============================================================
# Cluster head probability and cost
# ============================================================


def compute_ch_prob(cfg: ProtocolConfig, e_res: float, vf: float) -> float:
    """
    Initial probability of self-declaring as cluster head.

    ``K * E_res / E_max * VF`` clamped to ``[p_min, 1]``. In heed mode the velocity
    factor is ignored.

    Raises:
        EnergyCapacityError: if ``e_res`` exceeds ``cfg.e_max``
    """
    if e_res > cfg.e_max:
        raise EnergyCapacityError(e_res, cfg.e_max)
    if e_res < 0:
        raise ValueError("e_res must be >= 0")
    if not 0 < vf <= 1:
        raise ValueError("vf must be in (0, 1]")
    if cfg.heed_mode:
        vf = 1.0
    prob = cfg.k_fraction * (e_res / cfg.e_max) * vf
    return min(max(prob, cfg.p_min), 1.0)


def node_cost(cfg: ProtocolConfig, degree: int, ccf: float) -> float:
    """
    Cost a node advertises to its neighbors.

    Isolated nodes (degree 0) advertise ``MAX_COST`` in every mode so they never
    win against a real candidate.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if degree == 0:
        return MAX_COST
    if cfg.cost_mode == CostMode.INVERSE_DEGREE:
        return 1.0 / degree
    if cfg.cost_mode == CostMode.DEGREE:
        return float(degree)
    return ccf


def least_cost(candidates: Iterable[tuple[NodeId, float]]) -> NodeId:
    """
    Id of the cheapest candidate; ties go to the smallest id.

    Raises:
        NoCandidatesError: if ``candidates`` is empty

    Examples:
        >>> least_cost([(3, 0.5), (7, 0.5)])
        3
    """
    ranked = [Candidate(node, cost) for node, cost in candidates]
    if not ranked:
        raise NoCandidatesError()
    return min(ranked, key=lambda c: (c.cost, c.id)).id


# ============================================================
# Termination bound
# ============================================================


def max_iterations(p_min: float) -> int:
    """
    Upper bound on Phase II iterations: ``ceil(log2(1 / p_min)) + 1``.

    Examples:
        >>> max_iterations(1.0)
        1
        >>> max_iterations(1 / 1024)
        11
    """
    if p_min <= 0 or p_min > 1:
        raise ValueError("p_min must be in (0, 1]")
    return math.ceil(math.log2(1.0 / p_min)) + 1
