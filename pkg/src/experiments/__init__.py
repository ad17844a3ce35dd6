"""Scenario configuration, experiment runs and mode comparison."""

from src.experiments.compare import (
    Comparison,
    ModeSummary,
    PairedDifference,
    SignTest,
    check_modes,
    compare_modes,
    write_comparison,
)
from src.experiments.errors import (
    DuplicateModeError,
    ModeError,
    ScenarioError,
    UnknownModeError,
)
from src.experiments.metrics import (
    check_record,
    read_metrics,
    record_from_stats,
    write_metrics,
)
from src.experiments.models import (
    METRICS_COLUMNS,
    METRICS_VERSION,
    FailureSpec,
    MetricsRecord,
    OutputSettings,
    ScenarioConfig,
)
from src.experiments.registry import MODES, ModeDescriptor, apply_mode, get_mode, mode_keys
from src.experiments.runner import (
    ExperimentResult,
    SeedResult,
    run_experiment,
    run_seed,
    schedule_failures,
)
from src.experiments.scenario import emit_scenario, load_scenario, parse_scenario

__all__ = [
    # Config
    "FailureSpec",
    "OutputSettings",
    "ScenarioConfig",
    "emit_scenario",
    "load_scenario",
    "parse_scenario",
    # Modes
    "MODES",
    "ModeDescriptor",
    "apply_mode",
    "get_mode",
    "mode_keys",
    # Metrics
    "METRICS_COLUMNS",
    "METRICS_VERSION",
    "MetricsRecord",
    "check_record",
    "read_metrics",
    "record_from_stats",
    "write_metrics",
    # Runs
    "ExperimentResult",
    "SeedResult",
    "run_experiment",
    "run_seed",
    "schedule_failures",
    # Comparison
    "Comparison",
    "ModeSummary",
    "PairedDifference",
    "SignTest",
    "check_modes",
    "compare_modes",
    "write_comparison",
    # Errors
    "DuplicateModeError",
    "ModeError",
    "ScenarioError",
    "UnknownModeError",
]
