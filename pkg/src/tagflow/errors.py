"""Exception types shared across the package."""


class TagflowError(Exception):
    """Base class for every error raised by this package."""


class IoFailure(TagflowError):
    """A file could not be read or written."""


class ParseFailure(TagflowError):
    """A serialized artifact is malformed. Carries the 1-based line number."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class VersionMismatch(TagflowError):
    """A serialized artifact was written by an incompatible format version."""


class PlacementFailure(TagflowError):
    """Scene rejection sampling exhausted its attempt budget."""


class DataFailure(TagflowError):
    """Demonstration collection could not retain enough episodes."""


class DegenerateEpisode(TagflowError):
    """An episode is too short for the requested operation."""


class ShapeMismatch(TagflowError):
    """An array does not match the expected dimensions."""


class NonFiniteGradient(TagflowError):
    """A gradient contains NaN or infinity."""


class NonFiniteLoss(TagflowError):
    """The training loss is NaN or infinity."""


class NonFiniteState(TagflowError):
    """An ODE intermediate diverged (typically an excessive guidance scale)."""


class BackendFailure(TagflowError):
    """A pipeline backend raised; carries the stage and attempt index."""

    def __init__(self, stage: str, attempt: int, cause: BaseException):
        super().__init__(f"{stage} failed on attempt {attempt}: {cause}")
        self.stage = stage
        self.attempt = attempt
        self.cause = cause


class ConfigError(TagflowError):
    """An experiment config file is invalid."""
