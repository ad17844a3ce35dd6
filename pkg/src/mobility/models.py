"""
Mobility models and node kinematics.
"""

from dataclasses import dataclass
from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator

Vector = tuple[float, float]


class MobilityModel(StrEnum):
    """Supported movement patterns."""

    STATIC = "static"
    CONSTANT_VELOCITY = "constant_velocity"
    RANDOM_WAYPOINT = "random_waypoint"


class WorldBounds(BaseModel):
    """Rectangular deployment area [0, width] x [0, height] in meters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    width: float = Field(200.0, gt=0)
    height: float = Field(200.0, gt=0)

    def contains(self, point: Vector) -> bool:
        x, y = point
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height


class MobilitySettings(BaseModel):
    """Movement parameters as they appear in a scenario file."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    model: MobilityModel = MobilityModel.RANDOM_WAYPOINT
    v_min: float = Field(0.0, ge=0)
    v_max: float = Field(5.0, ge=0)
    pause_time: float = Field(0.0, ge=0)
    noise_std: float = Field(0.0, ge=0)  # velocity sensor noise, m/s

    @model_validator(mode="after")
    def _check_speed_range(self):
        if self.v_min > self.v_max:
            raise ValueError("v_min must not exceed v_max")
        return self


class MobilityConfig(MobilitySettings):
    """Movement parameters bound to a world and a seed."""

    world: WorldBounds = WorldBounds()
    seed: int = Field(0, ge=0)


@dataclass(frozen=True)
class Kinematics:
    """
    Position and motion of one node.

    Attributes:
        position: (x, y) in meters
        velocity: (vx, vy) in m/s
        waypoint: Random-waypoint target, None while pausing or when unused
        pause_until: Simulation time (s) until which the node stays put
    """

    position: Vector
    velocity: Vector = (0.0, 0.0)
    waypoint: Vector | None = None
    pause_until: float = 0.0
