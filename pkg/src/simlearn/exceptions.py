"""Exception types shared across the package."""


class SimlearnError(Exception):
    """Base class for errors raised by this package."""


class UnsupportedImageFormat(SimlearnError, ValueError):
    """The file is not one of the supported image formats."""


class CorruptImage(SimlearnError, ValueError):
    """The file matched a supported format but its contents are damaged."""


class ConfigError(SimlearnError, ValueError):
    """A run configuration failed schema or semantic validation."""


class DegenerateScaleError(SimlearnError, ValueError):
    """A normalization constant came out zero and cannot be used as a divisor."""


class NonFiniteActivation(SimlearnError, ValueError):
    """A layer produced inf or nan during a forward pass."""


class DivergenceError(SimlearnError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"non-finite training loss at epoch {epoch}")


class NotFittedError(SimlearnError, ValueError):
    """An estimator method that requires fitting was called before fit."""
