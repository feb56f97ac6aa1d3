"""Exception hierarchy shared by every subsystem."""


class SemcommError(Exception):
    """Base class for all package errors."""


class DimensionError(SemcommError, ValueError):
    pass


class ContractError(SemcommError, ValueError):
    """A documented precondition was violated by the caller."""


class ConfigError(SemcommError, ValueError):
    pass


class DegenerateInputError(SemcommError, ValueError):
    pass


class SingularChannelError(SemcommError):
    """Channel gain too small to equalize; the frame is dropped."""

    def __init__(self, gain: float):
        super().__init__(f"channel gain {gain:.3e} below equalization floor")
        self.gain = gain


class TrainingDivergedError(SemcommError, RuntimeError):
    def __init__(self, stage: str, step: int, loss: float):
        super().__init__(f"loss became non-finite in {stage} stage at step {step}: {loss!r}")
        self.stage = stage
        self.step = step
        self.loss = loss


class EmptyBatchError(SemcommError):
    pass


class TransportError(SemcommError):
    """Remote knowledge-base backend failed after exhausting its retry budget."""

    def __init__(self, message: str, status: int | None = None, attempts: int = 0):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


class DatasetLoadError(SemcommError):
    pass


class StageError(SemcommError):
    """Wraps a failure inside the end-to-end pipeline with the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"pipeline stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
