"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition (bad shape, range, kind)."""


class InvalidDataError(ValueError):
    """Input data is unusable: non-finite values, ragged rows, non-numeric cells."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss; carries the last known state."""

    def __init__(self, message, epoch=None, step=None):
        super().__init__(message)
        self.epoch = epoch
        self.step = step
