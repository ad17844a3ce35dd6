"""
Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 invariant violation.
"""

import argparse
import sys

from dotenv import load_dotenv
from loguru import logger

from config.settings import get_settings
from src.cli.commands import COMMANDS, EXIT_CONFIG, EXIT_INVARIANT, get_command
from src.cli.logging import setup_logging
from src.engine import DuplicateInjectionError, InvariantViolation
from src.experiments import ModeError, ScenarioError

cli_log = logger.bind(module="CLI")

CONFIG_ERRORS = (ScenarioError, ModeError, DuplicateInjectionError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mecp-sim",
        description="Mobility-aware WSN clustering simulator",
    )
    parser.add_argument(
        "--log-level", help="override LOG_LEVEL (DEBUG, INFO, WARNING, ...)"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, command in COMMANDS.items():
        sub = subparsers.add_parser(name, help=command.description)
        command.configure(sub)
    return parser


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    settings = get_settings()
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or settings.effective_log_level)

    command_cls = get_command(args.command)
    assert command_cls is not None  # argparse restricts the choices
    command = command_cls(settings)

    try:
        result = command.execute(args)
    except CONFIG_ERRORS as e:
        cli_log.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except InvariantViolation as e:
        cli_log.error(f"Invariant violated: {e}")
        return EXIT_INVARIANT

    if result.message:
        print(result.message)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
