"""Exception hierarchy shared by every subpackage."""


class EstrnnError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(EstrnnError, ValueError):
    pass


class ConfigError(EstrnnError, ValueError):
    """Invalid configuration. ``key`` names the offending field when known."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class ArityError(EstrnnError, ValueError):
    pass


class SequenceTooShortError(EstrnnError, ValueError):
    def __init__(self, length: int, minimum: int):
        super().__init__(
            f"sequence has {length} frames but at least {minimum} are required"
        )
        self.length = length
        self.minimum = minimum


class RangeError(EstrnnError, ValueError):
    pass


class TrainingDivergedError(EstrnnError, RuntimeError):
    def __init__(self, epoch: int, step: int, loss: float):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}, step {step}")
        self.epoch = epoch
        self.step = step
        self.loss = loss
