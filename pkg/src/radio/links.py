"""
Link geometry: distances, minimum power levels and range checks.
"""

from collections.abc import Sequence

import numpy as np

from src.radio.models import Band, PowerTable

Point = Sequence[float]


class UnreachableError(ValueError):
    """No level of the requested band covers the distance."""

    def __init__(self, distance: float, band: Band):
        self.distance = distance
        self.band = band
        super().__init__(f"unreachable: {distance:.2f} m exceeds the {band} band")


def distance(a: Point, b: Point) -> float:
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def distance_matrix(positions: np.ndarray) -> np.ndarray:
    """
    All-pairs Euclidean distances.

    Args:
        positions: (n, 2) array of coordinates

    Returns:
        (n, n) symmetric matrix with a zero diagonal
    """
    delta = positions[:, np.newaxis, :] - positions[np.newaxis, :, :]
    return np.hypot(delta[..., 0], delta[..., 1])


def min_power_level(distance_m: float, table: PowerTable, band: Band) -> int:
    """
    Smallest level of ``band`` whose range covers ``distance_m``.

    Raises:
        UnreachableError: if even the top level of the band is too short
    """
    if distance_m < 0:
        raise ValueError("distance must be >= 0")
    for level in table.band_levels(band):
        if table.levels[level].range_m >= distance_m:
            return level
    raise UnreachableError(distance_m, band)


def in_range(pos_a: Point, pos_b: Point, table: PowerTable, level: int) -> bool:
    """True iff the two points are at most the range of ``level`` apart (inclusive)."""
    return distance(pos_a, pos_b) <= table.range_of(level)
