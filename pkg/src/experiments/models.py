"""
Experiment configuration and per-round metrics.

A ``ScenarioConfig`` is the validated form of a scenario document. Sub-configs
reuse the domain models of the simulation packages so their invariants are
checked once, in one place.
"""

from pathlib import Path

from pydantic import (
    AliasChoices,
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from src.engine import FailureMode, FailureTarget, RoundSchedule
from src.experiments.errors import ScenarioError
from src.experiments.registry import mode_keys
from src.mobility import MobilityConfig, MobilitySettings, Vector, WorldBounds
from src.protocol import ProtocolConfig
from src.radio import PowerTable, RadioParams

# ============================================================
# Scenario
# ============================================================


class FailureSpec(BaseModel):
    """
    One scheduled failure.

    Either explicit (``node`` + ``time``) or targeted (``target`` + ``round``,
    optionally ``frame``): a targeted failure hits whichever node holds the
    role when that frame starts.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: FailureMode = FailureMode.CRASH
    node: int | None = Field(None, ge=0)
    time: float | None = Field(None, ge=0)
    target: FailureTarget | None = None
    round: int | None = Field(None, ge=0)
    frame: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_kind(self) -> "FailureSpec":
        explicit = self.node is not None or self.time is not None
        targeted = self.target is not None or self.round is not None
        if explicit and targeted:
            raise ValueError("give either node/time or target/round, not both")
        if explicit and (self.node is None or self.time is None):
            raise ValueError("explicit failure needs both node and time")
        if targeted and (self.target is None or self.round is None):
            raise ValueError("targeted failure needs both target and round")
        if not explicit and not targeted:
            raise ValueError("failure needs node/time or target/round")
        return self

    @property
    def is_targeted(self) -> bool:
        return self.target is not None


class OutputSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dir: Path | None = None
    trace: bool = False


class ScenarioConfig(BaseModel):
    """
    A complete experiment description.

    ``seeds`` also accepts the key ``seed``. Defaults reproduce the reference
    scenario: 100 nodes in a 200 x 200 m field, random waypoint at 0-5 m/s,
    20 rounds of 10 frames.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    node_count: int = Field(100, ge=1)
    world: WorldBounds = WorldBounds()
    mobility: MobilitySettings = MobilitySettings()
    power_table: PowerTable = PowerTable()
    radio: RadioParams = RadioParams()
    protocol: ProtocolConfig = ProtocolConfig()
    schedule: RoundSchedule = RoundSchedule()
    rounds: int = Field(20, ge=1)
    p_loss: float = Field(0.0, ge=0.0, le=1.0)
    guards_enabled: bool = True
    mid_round_rejoin: bool = False
    mode: str = "mecp"
    failures: tuple[FailureSpec, ...] = ()
    ch_crash_each_round: bool = False
    ch_crash_frame: int = Field(0, ge=0)
    seeds: tuple[int, ...] = Field(
        (1,), validation_alias=AliasChoices("seeds", "seed")
    )
    positions: tuple[Vector, ...] | None = None
    sink_position: Vector | None = None
    output: OutputSettings = OutputSettings()

    @field_validator("seeds", mode="before")
    @classmethod
    def _coerce_seeds(cls, v):
        # A bare integer is a one-seed list.
        if isinstance(v, int):
            return (v,)
        return v

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v:
            raise ValueError("seed list must not be empty")
        if any(s < 0 for s in v):
            raise ValueError("seeds must be >= 0")
        if len(set(v)) != len(v):
            raise ValueError("seed list has duplicates")
        return v

    @field_validator("mode")
    @classmethod
    def _check_mode(cls, v: str) -> str:
        if v not in mode_keys():
            raise ValueError(f"unknown mode '{v}'")
        return v

    @model_validator(mode="after")
    def _check_references(self) -> "ScenarioConfig":
        if self.positions is not None:
            if len(self.positions) != self.node_count:
                raise ValueError("positions must list every node")
            for point in self.positions:
                if not self.world.contains(point):
                    raise ValueError(f"position {list(point)} lies outside the world")
        if self.sink_position is not None and not self.world.contains(self.sink_position):
            raise ValueError("sink_position lies outside the world")

        frames = self.schedule.frames_per_round
        if self.ch_crash_frame >= frames:
            raise ValueError("ch_crash_frame must be below frames_per_round")
        for failure in self.failures:
            if failure.is_targeted:
                if failure.round >= self.rounds:  # type: ignore[operator]
                    raise ValueError(f"failure round {failure.round} is past the last round")
                if failure.frame >= frames:
                    raise ValueError(f"failure frame {failure.frame} is past the last frame")
            elif failure.node >= self.node_count:  # type: ignore[operator]
                raise ValueError(f"failure node {failure.node} does not exist")
        return self

    def mobility_config(self, seed: int) -> MobilityConfig:
        """Movement parameters bound to this world and ``seed``."""
        return MobilityConfig(
            **self.mobility.model_dump(), world=self.world, seed=seed
        )

    def with_seeds(self, seeds: list[int]) -> "ScenarioConfig":
        """
        Copy with a replaced seed list, validated again.

        Raises:
            ScenarioError: duplicate or negative seeds, or an empty list
        """
        data = self.model_dump()
        data["seeds"] = seeds
        try:
            return ScenarioConfig.model_validate(data)
        except ValidationError as e:
            raise ScenarioError.from_validation(e) from e


# ============================================================
# Metrics
# ============================================================

METRICS_VERSION = 1

METRICS_COLUMNS: tuple[str, ...] = (
    "mode",
    "seed",
    "round",
    "delivery_ratio",
    "aggregate_delivery_ratio",
    "ch_count",
    "mean_cluster_size",
    "max_cluster_size",
    "clustering_iterations_max",
    "energy_consumed_j",
    "alive_count",
    "orphan_count",
    "recovery_frames_lost",
    "control_messages",
)


class MetricsRecord(BaseModel):
    """One metrics row: one seed, one round."""

    model_config = ConfigDict(frozen=True)

    mode: str
    seed: int
    round: int
    delivery_ratio: float
    aggregate_delivery_ratio: float
    ch_count: int
    mean_cluster_size: float
    max_cluster_size: int
    clustering_iterations_max: int
    energy_consumed_j: float
    alive_count: int
    orphan_count: int
    recovery_frames_lost: int
    control_messages: int

    def as_row(self) -> dict[str, object]:
        """Return the record keyed by ``METRICS_COLUMNS``."""
        return {column: getattr(self, column) for column in METRICS_COLUMNS}
