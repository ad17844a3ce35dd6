"""Radio: power levels, link ranges and the energy ledger."""

from src.radio.energy import (
    PJ_PER_J,
    ConsumeOutcome,
    EnergyLedger,
    UnknownNodeError,
    rx_energy,
    to_joules,
    to_pj,
    tx_energy,
)
from src.radio.links import (
    UnreachableError,
    distance,
    distance_matrix,
    in_range,
    min_power_level,
)
from src.radio.models import Band, PowerLevel, PowerTable, RadioParams

__all__ = [
    "PJ_PER_J",
    "Band",
    "ConsumeOutcome",
    "EnergyLedger",
    "PowerLevel",
    "PowerTable",
    "RadioParams",
    "UnknownNodeError",
    "UnreachableError",
    "distance",
    "distance_matrix",
    "in_range",
    "min_power_level",
    "rx_energy",
    "to_joules",
    "to_pj",
    "tx_energy",
]
