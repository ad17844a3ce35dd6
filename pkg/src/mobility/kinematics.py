"""
Node kinematics: placement, motion integration and velocity sensing.

Every function takes its random stream explicitly. Draw order is part of the
contract (tests replay it):

    initial placement      x, y
    constant velocity      x, y, speed, heading
    random waypoint pick   waypoint x, waypoint y, speed
"""

import math
from dataclasses import replace

import numpy as np
from loguru import logger

from src.mobility.models import Kinematics, MobilityConfig, MobilityModel, Vector

mobility_log = logger.bind(module="Mobility")


# ============================================================
# Vector helpers
# ============================================================


def speed_between(v_a: Vector, v_b: Vector) -> float:
    """Euclidean norm of the velocity difference (m/s)."""
    return float(np.hypot(v_a[0] - v_b[0], v_a[1] - v_b[1]))


def relative_speed(a: Kinematics, b: Kinematics) -> float:
    """
    Relative speed of two nodes, |v_a - v_b|.

    Examples:
        >>> relative_speed(Kinematics((0, 0), (3.0, 0.0)), Kinematics((0, 0), (0.0, 4.0)))
        5.0
    """
    return speed_between(a.velocity, b.velocity)


def _heading(origin: Vector, target: Vector, speed: float) -> Vector:
    delta = np.subtract(target, origin)
    distance = float(np.linalg.norm(delta))
    if distance == 0.0 or speed == 0.0:
        return (0.0, 0.0)
    v = delta / distance * speed
    return (float(v[0]), float(v[1]))


def _clip(point: np.ndarray, cfg: MobilityConfig) -> Vector:
    return (
        float(np.clip(point[0], 0.0, cfg.world.width)),
        float(np.clip(point[1], 0.0, cfg.world.height)),
    )


def _reflect(x: float, v: float, upper: float) -> tuple[float, float]:
    """Fold a coordinate back into [0, upper], flipping the velocity per bounce."""
    while x < 0.0 or x > upper:
        if x < 0.0:
            x, v = -x, -v
        else:
            x, v = 2.0 * upper - x, -v
    return x, v


# ============================================================
# Placement
# ============================================================


def _pick_waypoint(k: Kinematics, cfg: MobilityConfig, rng: np.random.Generator) -> Kinematics:
    waypoint = (
        float(rng.uniform(0.0, cfg.world.width)),
        float(rng.uniform(0.0, cfg.world.height)),
    )
    speed = float(rng.uniform(cfg.v_min, cfg.v_max))
    return replace(k, waypoint=waypoint, velocity=_heading(k.position, waypoint, speed))


def initial_kinematics(
    cfg: MobilityConfig,
    rng: np.random.Generator,
    position: Vector | None = None,
) -> Kinematics:
    """
    Place a node and give it its initial motion.

    Args:
        cfg: Mobility configuration
        rng: Mobility stream
        position: Fixed position; drawn uniformly from the world when None
    """
    if position is None:
        position = (
            float(rng.uniform(0.0, cfg.world.width)),
            float(rng.uniform(0.0, cfg.world.height)),
        )
    k = Kinematics(position=position)

    if cfg.model == MobilityModel.CONSTANT_VELOCITY:
        speed = float(rng.uniform(cfg.v_min, cfg.v_max))
        angle = float(rng.uniform(0.0, 2.0 * math.pi))
        return replace(k, velocity=(speed * math.cos(angle), speed * math.sin(angle)))
    if cfg.model == MobilityModel.RANDOM_WAYPOINT:
        return _pick_waypoint(k, cfg, rng)
    return k


# ============================================================
# Motion
# ============================================================


def step_kinematics(
    k: Kinematics,
    cfg: MobilityConfig,
    dt: float,
    rng: np.random.Generator,
    now: float = 0.0,
) -> Kinematics:
    """
    Advance a node by ``dt`` seconds.

    - static: unchanged
    - constant_velocity: linear motion with specular reflection at the borders
    - random_waypoint: move towards the waypoint; on arrival pause for
      ``pause_time`` then draw a new waypoint and speed

    Args:
        k: Current kinematics
        cfg: Mobility configuration
        dt: Step length in seconds (> 0)
        rng: Mobility stream
        now: Simulation time at the start of the step
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")

    if cfg.model == MobilityModel.STATIC:
        return k

    if cfg.model == MobilityModel.CONSTANT_VELOCITY:
        x, vx = _reflect(k.position[0] + k.velocity[0] * dt, k.velocity[0], cfg.world.width)
        y, vy = _reflect(k.position[1] + k.velocity[1] * dt, k.velocity[1], cfg.world.height)
        return replace(k, position=_clip(np.array([x, y]), cfg), velocity=(vx, vy))

    return _step_random_waypoint(k, cfg, dt, rng, now)


def _step_random_waypoint(
    k: Kinematics,
    cfg: MobilityConfig,
    dt: float,
    rng: np.random.Generator,
    now: float,
) -> Kinematics:
    if now < k.pause_until:
        return replace(k, velocity=(0.0, 0.0))
    if k.waypoint is None:
        k = _pick_waypoint(k, cfg, rng)

    position = np.array(k.position)
    waypoint = np.array(k.waypoint)
    remaining = float(np.linalg.norm(waypoint - position))
    travel = float(np.hypot(*k.velocity)) * dt

    if travel >= remaining or travel == 0.0:
        # Arrived (a zero-speed draw counts as arriving where the node stands).
        arrived_at = waypoint if travel >= remaining else position
        return Kinematics(
            position=_clip(arrived_at, cfg),
            velocity=(0.0, 0.0),
            waypoint=None,
            pause_until=now + dt + cfg.pause_time,
        )

    moved = position + (waypoint - position) * (travel / remaining)
    return replace(k, position=_clip(moved, cfg))


# ============================================================
# Sensing
# ============================================================


def sense_velocity(k: Kinematics, noise_std: float, rng: np.random.Generator) -> Vector:
    """
    Velocity as read by the node's own sensor.

    Zero-mean Gaussian noise of ``noise_std`` per axis; exact when 0.
    """
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    if noise_std == 0:
        return k.velocity
    noise = rng.normal(0.0, noise_std, size=2)
    return (k.velocity[0] + float(noise[0]), k.velocity[1] + float(noise[1]))
