"""Exception types raised by the simulator."""

from __future__ import annotations


class ConfigError(ValueError):
    """An invalid experiment configuration or dimension."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class TrainingError(RuntimeError):
    """Student training could not run (e.g. no data)."""


class DivergenceError(TrainingError):
    """SGD produced a non-finite loss or weight."""

    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss encountered at epoch {epoch}")
        self.epoch = epoch


class UndefinedCorrelationError(ValueError):
    """Correlation is undefined because an input has zero variance."""


class SimulationError(RuntimeError):
    """A realization failed; carries the realization index."""

    def __init__(self, realization: int, cause: BaseException):
        super().__init__(f"realization {realization} failed: {cause}")
        self.realization = realization


class ExperimentError(RuntimeError):
    """One or more realizations of an experiment failed.

    ``partial`` holds the results that did complete (``None`` for the
    failed slots), ordered by realization index.
    """

    def __init__(self, message: str, partial: list):
        super().__init__(message)
        self.partial = partial
