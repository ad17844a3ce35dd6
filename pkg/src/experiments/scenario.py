"""
Scenario documents: YAML text <-> ScenarioConfig.

The grammar is documented in docs/SCENARIO.md. Parsing never raises anything
but ``ScenarioError``; the message starts with the dotted key path of the
first offending value.
"""

from pathlib import Path

import yaml
from loguru import logger
from pydantic import ValidationError

from src.experiments.errors import ScenarioError
from src.experiments.models import ScenarioConfig

runner_log = logger.bind(module="Runner")


def parse_scenario(text: str) -> ScenarioConfig:
    """
    Parse and validate a scenario document.

    Args:
        text: YAML document; an empty document yields the defaults

    Returns:
        Validated config with defaults filled in

    Raises:
        ScenarioError: malformed YAML, a non-mapping document, unknown keys or
            any invariant violation of the config models
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ScenarioError("", f"malformed document: {e}") from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError("", "scenario must be a mapping")

    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ScenarioError.from_validation(e) from e


def emit_scenario(cfg: ScenarioConfig) -> str:
    """Serialize ``cfg`` so that ``parse_scenario`` returns an equal config."""
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False)


def load_scenario(path: Path) -> ScenarioConfig:
    """
    Read and parse a scenario file.

    Raises:
        ScenarioError: unreadable file or invalid document
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError("", f"cannot read {path}: {e.strerror or e}") from e
    cfg = parse_scenario(text)
    runner_log.debug(
        f"Loaded {path}: {cfg.node_count} nodes, {cfg.rounds} rounds, seeds {list(cfg.seeds)}"
    )
    return cfg
