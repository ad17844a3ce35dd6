"""
First-order radio energy model and the per-node energy ledger.

The ledger stores residual energy as integer picojoules. Joule amounts are
rounded once, at debit time, so that

    initial total == residual total + debited total

holds as an integer equality for every run.
"""

from collections.abc import Sequence
from enum import StrEnum

import numpy as np
from loguru import logger

from src.radio.models import RadioParams

radio_log = logger.bind(module="Radio")

PJ_PER_J = 10**12


def to_pj(joules: float) -> int:
    return int(round(joules * PJ_PER_J))


def to_joules(picojoules: int) -> float:
    return picojoules / PJ_PER_J


# ============================================================
# Radio model
# ============================================================


def tx_energy(bits: int, distance_m: float, params: RadioParams) -> float:
    """
    Energy to transmit ``bits`` over ``distance_m``: ``E_elec*k + eps_amp*k*d^2``.

    Examples:
        >>> tx_energy(1000, 0.0, RadioParams())
        5e-05
    """
    if bits <= 0:
        raise ValueError("bits must be > 0")
    if distance_m < 0:
        raise ValueError("distance must be >= 0")
    return params.e_elec * bits + params.eps_amp * bits * distance_m**2


def rx_energy(bits: int, params: RadioParams) -> float:
    """Energy to receive ``bits``: ``E_elec*k``."""
    if bits <= 0:
        raise ValueError("bits must be > 0")
    return params.e_elec * bits


# ============================================================
# Ledger
# ============================================================


class ConsumeOutcome(StrEnum):
    ALIVE = "alive"
    DIED = "died"


class UnknownNodeError(KeyError):
    """Node id outside the ledger."""

    def __init__(self, node: int):
        self.node = node
        super().__init__(f"unknown node {node}")


class EnergyLedger:
    """
    Residual energy and liveness of every node.

    Single writer: only the simulation loop debits. ``kill`` models a crash,
    so a dead node may still hold charge; an empty node is always dead.
    """

    def __init__(self, initial: Sequence[float], e_max: float):
        if e_max <= 0:
            raise ValueError("e_max must be > 0")
        for value in initial:
            if not 0 <= value <= e_max:
                raise ValueError(f"initial energy {value} outside [0, {e_max}]")

        self.e_max = e_max
        self._residual = np.array([to_pj(v) for v in initial], dtype=np.int64)
        self._alive = self._residual > 0
        self._initial_total = int(self._residual.sum())
        self._debited = 0

    @classmethod
    def full(cls, node_count: int, e_max: float) -> "EnergyLedger":
        """Ledger with every node charged to ``e_max``."""
        return cls([e_max] * node_count, e_max)

    def __len__(self) -> int:
        return len(self._residual)

    def _check(self, node: int) -> None:
        if not 0 <= node < len(self._residual):
            raise UnknownNodeError(node)

    # ------------------------------------------------------------
    # Reads
    # ------------------------------------------------------------

    def residual(self, node: int) -> float:
        """Residual energy in joules."""
        self._check(node)
        return to_joules(int(self._residual[node]))

    def residual_pj(self, node: int) -> int:
        self._check(node)
        return int(self._residual[node])

    def is_alive(self, node: int) -> bool:
        self._check(node)
        return bool(self._alive[node])

    def alive_nodes(self) -> list[int]:
        return [int(n) for n in np.flatnonzero(self._alive)]

    def alive_mask(self) -> np.ndarray:
        return self._alive.copy()

    @property
    def initial_total_pj(self) -> int:
        return self._initial_total

    @property
    def residual_total_pj(self) -> int:
        return int(self._residual.sum())

    @property
    def debited_pj(self) -> int:
        """Sum of every debit so far."""
        return self._debited

    # ------------------------------------------------------------
    # Writes
    # ------------------------------------------------------------

    def consume(self, node: int, amount: float) -> ConsumeOutcome:
        """
        Debit ``amount`` joules, clamping the residual at zero.

        Dead nodes are not debited.

        Returns:
            ``DIED`` if the node is dead afterwards, ``ALIVE`` otherwise
        """
        self._check(node)
        if amount < 0:
            raise ValueError("amount must be >= 0")
        if not self._alive[node]:
            return ConsumeOutcome.DIED

        debit = min(to_pj(amount), int(self._residual[node]))
        self._residual[node] -= debit
        self._debited += debit
        if self._residual[node] == 0:
            self._alive[node] = False
            radio_log.debug(f"Node {node}: battery exhausted")
            return ConsumeOutcome.DIED
        return ConsumeOutcome.ALIVE

    def drain(self, node: int) -> int:
        """
        Empty the battery of a node.

        Returns:
            The debited amount in picojoules (0 for a node already dead)
        """
        self._check(node)
        if not self._alive[node]:
            return 0
        debit = int(self._residual[node])
        self._residual[node] = 0
        self._debited += debit
        self._alive[node] = False
        return debit

    def kill(self, node: int) -> None:
        """Mark a node dead without touching its charge."""
        self._check(node)
        self._alive[node] = False
