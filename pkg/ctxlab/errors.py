"""Exception hierarchy shared by every ctxlab module."""


class CtxLabError(Exception):
    """Base class for all errors raised by ctxlab."""


class InvalidArgumentError(CtxLabError, ValueError):
    pass


class ConfigError(CtxLabError):
    pass


class CheckpointError(CtxLabError):
    pass


class NumericOverflowError(CtxLabError, ArithmeticError):
    """Raised when an integrator state stops being finite."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite state at integration step {step}")


class OutOfRangeError(CtxLabError, LookupError):
    """Raised when a requested length exceeds what a basis cache covers."""

    def __init__(self, requested: int, max_length: float):
        self.requested = requested
        self.max_length = max_length
        super().__init__(
            f"length {requested} exceeds the maximum supported length {max_length:g}"
        )


class TrainingDivergedError(CtxLabError):
    """Raised when a training step produces a non-finite loss."""

    def __init__(self, record: dict):
        self.record = record
        super().__init__(f"non-finite loss at step {record.get('step')}: {record}")
