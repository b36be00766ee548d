"""Error types shared by every module.

The CLI maps these onto exit codes: integrity -> 1, parameter -> 2,
not-stabilized -> 3.
"""

from __future__ import annotations


class ArtifactError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(ArtifactError, ValueError):
    """A parameter is outside its documented range."""


class SchemaError(ParameterError):
    """Input data does not match the expected layout."""


class DomainError(ParameterError):
    """A trace, line or site lies outside the domain it is used with."""


class UnsupportedInputError(ParameterError):
    """The operation is only defined for a narrower class of inputs."""


class IntegrityError(ArtifactError):
    """An invariant that must always hold was violated.

    This signals a bug or corrupted input, never a legitimate outcome.
    """

    def __init__(self, message: str, **values):
        super().__init__(message)
        self.values = values


class OrderError(IntegrityError):
    """Traces handed to recomposition are not strictly ordered."""

    def __init__(self, message: str, pair: tuple[int, int]):
        super().__init__(message, pair=pair)
        self.pair = pair


class NotStabilized(ArtifactError):
    """A stabilization run exhausted its step cap."""

    def __init__(self, step_cap: int, state=None):
        super().__init__(f"not stabilized within {step_cap} steps")
        self.step_cap = step_cap
        self.state = state
