"""
Radio configuration: discrete transmit power levels and energy constants.
"""

from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Band(StrEnum):
    """Power band a transmission is restricted to."""

    INTRA = "intra"  # member <-> CH, lower levels
    INTER = "inter"  # CH <-> CH and CH <-> sink, upper levels


class PowerLevel(BaseModel):
    """One transmit power setting and the distance it covers."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tx_power_mw: float = Field(gt=0)
    range_m: float = Field(gt=0)


def _default_levels() -> tuple[PowerLevel, ...]:
    return (
        PowerLevel(tx_power_mw=1.0, range_m=25.0),
        PowerLevel(tx_power_mw=4.0, range_m=50.0),
        PowerLevel(tx_power_mw=16.0, range_m=100.0),
    )


class PowerTable(BaseModel):
    """
    Ascending table of power levels split into an intra and an inter band.

    Levels ``0..intra_cluster_max_level`` form the intra band and
    ``inter_cluster_min_level..`` the inter band. The two bands only share a
    level when the table has a single level.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    levels: tuple[PowerLevel, ...] = Field(default_factory=_default_levels)
    intra_cluster_max_level: int = Field(1, ge=0)
    inter_cluster_min_level: int = Field(2, ge=0)

    @model_validator(mode="after")
    def _check_levels(self) -> "PowerTable":
        if not self.levels:
            raise ValueError("power table needs at least one level")
        for lower, upper in zip(self.levels, self.levels[1:], strict=False):
            if upper.tx_power_mw <= lower.tx_power_mw or upper.range_m <= lower.range_m:
                raise ValueError("power levels must be strictly ascending in power and range")

        top = len(self.levels) - 1
        if self.intra_cluster_max_level > top or self.inter_cluster_min_level > top:
            raise ValueError("band level index outside the power table")
        if len(self.levels) == 1:
            if self.intra_cluster_max_level != self.inter_cluster_min_level:
                raise ValueError("single-level table must use level 0 for both bands")
        elif self.intra_cluster_max_level >= self.inter_cluster_min_level:
            raise ValueError(
                "intra_cluster_max_level must be below inter_cluster_min_level"
            )
        return self

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1

    @property
    def intra_range(self) -> float:
        """Neighbor-discovery and cluster radius (m)."""
        return self.levels[self.intra_cluster_max_level].range_m

    @property
    def inter_range(self) -> float:
        """Longest CH-to-CH reach (m)."""
        return self.levels[self.max_level].range_m

    def band_levels(self, band: Band) -> range:
        if band == Band.INTRA:
            return range(0, self.intra_cluster_max_level + 1)
        return range(self.inter_cluster_min_level, self.max_level + 1)

    def range_of(self, level: int) -> float:
        return self._level(level).range_m

    def power_of(self, level: int) -> float:
        return self._level(level).tx_power_mw

    def _level(self, level: int) -> PowerLevel:
        if not 0 <= level <= self.max_level:
            raise ValueError(f"invalid power level {level}")
        return self.levels[level]


class RadioParams(BaseModel):
    """
    First-order radio model constants.

    Attributes:
        e_elec: Electronics energy, J/bit (TX and RX)
        eps_amp: Free-space amplifier energy, J/bit/m^2
        idle_energy: Listening cost charged to every alive node per round, J
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    e_elec: float = Field(50e-9, ge=0)
    eps_amp: float = Field(100e-12, ge=0)
    idle_energy: float = Field(0.0, ge=0)
