"""Node mobility: movement models, motion integration and velocity sensing."""

from src.mobility.kinematics import (
    initial_kinematics,
    relative_speed,
    sense_velocity,
    speed_between,
    step_kinematics,
)
from src.mobility.models import (
    Kinematics,
    MobilityConfig,
    MobilityModel,
    MobilitySettings,
    Vector,
    WorldBounds,
)

__all__ = [
    "Kinematics",
    "MobilityConfig",
    "MobilityModel",
    "MobilitySettings",
    "Vector",
    "WorldBounds",
    "initial_kinematics",
    "relative_speed",
    "sense_velocity",
    "speed_between",
    "step_kinematics",
]
