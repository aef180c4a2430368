"""Shared error types for training and orchestration."""


class DivergenceError(RuntimeError):
    """Raised when a training loop produces non-finite parameters or loss."""


class PipelineError(RuntimeError):
    """Wraps a module error with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
