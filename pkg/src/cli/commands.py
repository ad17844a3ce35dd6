"""
CLI commands.

Each command registers its own arguments and returns a ``CommandResult``;
``main`` owns printing and the mapping from errors to exit codes.
"""

import argparse
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from config.settings import Settings
from src.experiments import (
    ScenarioConfig,
    ScenarioError,
    compare_modes,
    emit_scenario,
    load_scenario,
    mode_keys,
    run_experiment,
)

cli_log = logger.bind(module="CLI")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2


@dataclass
class CommandResult:
    """
    Structured result from command execution.

    Attributes:
        exit_code: Process exit status
        message: Text for stdout
        data: Additional structured data (paths, summaries)
    """

    exit_code: int = EXIT_OK
    message: str = ""
    data: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def ok(cls, message: str, **data) -> "CommandResult":
        return cls(exit_code=EXIT_OK, message=message, data=data)


def parse_seed_list(text: str) -> list[int]:
    """
    Parse ``"1,2,3"`` into ``[1, 2, 3]``.

    Raises:
        ScenarioError: empty list or a non-integer item
    """
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise ScenarioError("seed-override", "seed list must not be empty")
    try:
        return [int(item) for item in items]
    except ValueError:
        raise ScenarioError("seed-override", f"not a seed list: {text!r}") from None


def parse_mode_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


class BaseCommand(ABC):
    """Base class for all subcommands."""

    name: str = ""
    description: str = ""

    def __init__(self, settings: Settings):
        self.settings = settings

    @classmethod
    def configure(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "scenario",
            type=Path,
            nargs="?",
            help="scenario YAML file (default: MECP_DEFAULT_SCENARIO)",
        )

    def scenario_path(self, args: argparse.Namespace) -> Path:
        return args.scenario or self.settings.simulation.default_scenario

    def load(self, args: argparse.Namespace) -> ScenarioConfig:
        cfg = load_scenario(self.scenario_path(args))
        seeds = getattr(args, "seed_override", None)
        if seeds:
            cfg = cfg.with_seeds(parse_seed_list(seeds))
        return cfg

    def out_dir(self, args: argparse.Namespace, cfg: ScenarioConfig) -> Path:
        return args.out or cfg.output.dir or self.settings.simulation.output_dir

    def workers(self, args: argparse.Namespace) -> int:
        return args.workers or self.settings.simulation.max_workers

    @abstractmethod
    def execute(self, args: argparse.Namespace) -> CommandResult:
        """
        Run the command.

        Raises:
            ScenarioError, ModeError, DuplicateInjectionError: bad configuration
            InvariantViolation: the simulation broke a checked property
        """


class RunCommand(BaseCommand):
    name = "run"
    description = "run one mode over the scenario's seeds"

    @classmethod
    def configure(cls, parser: argparse.ArgumentParser) -> None:
        super().configure(parser)
        parser.add_argument("--seed-override", help="comma-separated seeds, e.g. 1,2,3")
        parser.add_argument("--mode", choices=mode_keys(), help="protocol mode")
        parser.add_argument("--out", type=Path, help="output directory")
        parser.add_argument("--trace", choices=("on", "off"), help="write per-seed traces")
        parser.add_argument("--workers", type=int, help="parallel seeds")

    def execute(self, args: argparse.Namespace) -> CommandResult:
        cfg = self.load(args)
        if args.trace is None:
            trace = cfg.output.trace or self.settings.simulation.trace_enabled
        else:
            trace = args.trace == "on"
        out_dir = self.out_dir(args, cfg)

        result = run_experiment(
            cfg,
            mode=args.mode,
            out_dir=out_dir,
            trace=trace,
            max_workers=self.workers(args),
        )
        records = result.records
        mean_delivery = float(np.mean([r.delivery_ratio for r in records]))
        mean_aggregate = float(np.mean([r.aggregate_delivery_ratio for r in records]))
        lines = [
            f"mode {result.mode}: {len(result.seeds)} seeds, {len(records)} rounds",
            f"  mean delivery_ratio            {mean_delivery:.6f}",
            f"  mean aggregate_delivery_ratio  {mean_aggregate:.6f}",
            f"  metrics: {result.metrics_path}",
        ]
        if result.trace_paths:
            lines.append(f"  traces:  {result.trace_paths[0].parent}")
        return CommandResult.ok(
            "\n".join(lines),
            metrics=result.metrics_path,
            traces=result.trace_paths,
        )


class CompareCommand(BaseCommand):
    name = "compare"
    description = "run several modes on the same seeds and compare them"

    @classmethod
    def configure(cls, parser: argparse.ArgumentParser) -> None:
        super().configure(parser)
        parser.add_argument(
            "--modes",
            required=True,
            help=f"comma-separated, first is the baseline ({', '.join(mode_keys())})",
        )
        parser.add_argument("--seed-override", help="comma-separated seeds, e.g. 1,2,3")
        parser.add_argument("--out", type=Path, help="output directory")
        parser.add_argument("--workers", type=int, help="parallel seeds")

    def execute(self, args: argparse.Namespace) -> CommandResult:
        cfg = self.load(args)
        comparison = compare_modes(
            cfg,
            parse_mode_list(args.modes),
            out_dir=self.out_dir(args, cfg),
            max_workers=self.workers(args),
        )
        lines = [f"baseline {comparison.baseline}"]
        for summary in comparison.summaries:
            lines.append(
                f"  {summary.mode:<12} delivery {summary.means['delivery_ratio']:.6f}"
                f"  recovery_lost {summary.means['recovery_frames_lost']:.3f}"
            )
        for test in comparison.sign_tests:
            lines.append(
                f"  sign test vs {test.mode}: +{test.wins} -{test.losses} ={test.ties}"
                f" p={test.p_value:.4g}"
            )
        return CommandResult.ok("\n".join(lines), comparison=comparison)


class ValidateCommand(BaseCommand):
    name = "validate"
    description = "check a scenario file and print it with defaults filled in"

    @classmethod
    def configure(cls, parser: argparse.ArgumentParser) -> None:
        super().configure(parser)
        parser.add_argument(
            "--quiet", action="store_true", help="only report whether the file is valid"
        )

    def execute(self, args: argparse.Namespace) -> CommandResult:
        path = self.scenario_path(args)
        cfg = load_scenario(path)
        cli_log.info(f"{path} is valid")
        if args.quiet:
            return CommandResult.ok(f"{path}: ok")
        return CommandResult.ok(emit_scenario(cfg).rstrip("\n"), config=cfg)


# Command registry: name -> command class
COMMANDS: dict[str, type[BaseCommand]] = {
    RunCommand.name: RunCommand,
    CompareCommand.name: CompareCommand,
    ValidateCommand.name: ValidateCommand,
}


def get_command(name: str) -> type[BaseCommand] | None:
    return COMMANDS.get(name.lower())
