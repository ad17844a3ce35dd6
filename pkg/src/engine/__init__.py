"""Discrete-event simulation engine."""

from src.engine.events import EventQueue
from src.engine.invariants import (
    DuplicateInjectionError,
    InvariantViolation,
    ViolationType,
    check_ach_continuity,
    check_ach_membership,
    check_coverage,
    check_energy_conservation,
    check_termination,
    check_uniqueness,
)
from src.engine.models import (
    ClusterSnapshot,
    Event,
    EventKind,
    FailureMode,
    FailureRecord,
    FailureTarget,
    RandomStreams,
    RoundSchedule,
    RoundStats,
    WorldState,
)
from src.engine.simulator import FailureInjection, Simulator
from src.engine.trace import TraceEvent, TraceKind, Tracer, read_trace
from src.engine.world import build_world, spawn_streams

__all__ = [
    # Models
    "ClusterSnapshot",
    "Event",
    "EventKind",
    "FailureInjection",
    "FailureMode",
    "FailureRecord",
    "FailureTarget",
    "RandomStreams",
    "RoundSchedule",
    "RoundStats",
    "WorldState",
    # Loop
    "EventQueue",
    "Simulator",
    "build_world",
    "spawn_streams",
    # Trace
    "TraceEvent",
    "TraceKind",
    "Tracer",
    "read_trace",
    # Invariants
    "DuplicateInjectionError",
    "InvariantViolation",
    "ViolationType",
    "check_ach_continuity",
    "check_ach_membership",
    "check_coverage",
    "check_energy_conservation",
    "check_termination",
    "check_uniqueness",
]
