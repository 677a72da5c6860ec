"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataIOError -> 3,
TrainingError -> 4.
"""


class TryOnLabError(Exception):
    """Base class for all package errors."""


class ConfigError(TryOnLabError):
    """Invalid configuration or unmet run precondition."""


class ShapeError(TryOnLabError, ValueError):
    """Tensor shape or dimension contract violated."""


class DataIOError(TryOnLabError, IOError):
    """Missing, truncated or schema-mismatched on-disk artifact."""


class TrainingError(TryOnLabError):
    """Training diverged (NaN/inf loss)."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class CheckpointVersionError(TryOnLabError):
    """Checkpoint config hash does not match the current config."""
