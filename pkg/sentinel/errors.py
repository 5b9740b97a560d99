"""
Exception hierarchy shared by the corpus layer, the engines and the CLI.
"""


class SentinelError(Exception):
    """Base class for all BotnetSentinel errors."""


class DataError(SentinelError, ValueError):
    """Input data or a precondition is unusable; the CLI exits with 2."""


class TrainingDivergedError(SentinelError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"Training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss
