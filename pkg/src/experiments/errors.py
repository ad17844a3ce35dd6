"""
Experiment configuration errors. The CLI maps all of them to exit code 1.
"""

from pydantic import ValidationError

_VALUE_ERROR_PREFIX = "Value error, "


class ScenarioError(ValueError):
    """
    Invalid scenario document.

    Attributes:
        path: Dotted key path of the offending value ("" for the document)
        reason: What is wrong with it
    """

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}" if path else reason)

    def __reduce__(self):
        return (self.__class__, (self.path, self.reason))

    @classmethod
    def from_validation(cls, exc: ValidationError) -> "ScenarioError":
        """Build the error from the first pydantic error."""
        first = exc.errors()[0]
        # Positions inside lists render as "failures.1.node".
        path = ".".join(str(part) for part in first["loc"])
        reason = first["msg"]
        if reason.startswith(_VALUE_ERROR_PREFIX):
            reason = reason[len(_VALUE_ERROR_PREFIX) :]
        return cls(path, reason)


class ModeError(ValueError):
    """Invalid mode selection."""


class UnknownModeError(ModeError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"unknown mode '{key}'")

    def __reduce__(self):
        return (self.__class__, (self.key,))


class DuplicateModeError(ModeError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"mode '{key}' listed more than once")

    def __reduce__(self):
        return (self.__class__, (self.key,))
