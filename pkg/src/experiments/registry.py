"""
Protocol mode registry.

Single declaration of every mode an experiment can run. Add a mode = append
one ``ModeDescriptor`` to ``MODES``; the runner and the CLI resolve modes
through the helpers below.
"""

from dataclasses import dataclass

from src.experiments.errors import UnknownModeError
from src.protocol import ProtocolConfig


@dataclass(frozen=True)
class ModeDescriptor:
    """One protocol variant.

    Attributes:
        key: Stable id used on the command line and in metrics rows.
        description: One-line summary for help output.
        heed_mode: Force VF = 1 and disable the assistant CH.
        ach_enabled: Let cluster heads select an assistant.
    """

    key: str
    description: str
    heed_mode: bool = False
    ach_enabled: bool = True

    def apply(self, protocol: ProtocolConfig) -> ProtocolConfig:
        """Return ``protocol`` with this mode's switches set."""
        return protocol.model_copy(
            update={"heed_mode": self.heed_mode, "ach_enabled": self.ach_enabled}
        )


MODES: list[ModeDescriptor] = [
    ModeDescriptor(
        key="mecp",
        description="mobility- and energy-aware clustering with assistant CH",
    ),
    ModeDescriptor(
        key="heed_mode",
        description="baseline: velocity factor 1, no assistant CH",
        heed_mode=True,
        ach_enabled=False,
    ),
    ModeDescriptor(
        key="mecp_no_ach",
        description="mobility-aware clustering without assistant CH",
        ach_enabled=False,
    ),
]

_BY_KEY: dict[str, ModeDescriptor] = {d.key: d for d in MODES}


def mode_keys() -> list[str]:
    """Return the registered mode keys (e.g. ['mecp', 'heed_mode', ...])."""
    return [d.key for d in MODES]


def get_mode(key: str) -> ModeDescriptor:
    """
    Raises:
        UnknownModeError: if no mode is registered for ``key``
    """
    try:
        return _BY_KEY[key]
    except KeyError:
        raise UnknownModeError(key) from None


def apply_mode(key: str, protocol: ProtocolConfig) -> ProtocolConfig:
    return get_mode(key).apply(protocol)
