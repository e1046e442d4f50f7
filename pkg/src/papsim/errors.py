"""Exception hierarchy.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical-invariant failures with 3.
"""


class PapError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(PapError, ValueError):
    """Invalid physical or numerical setup."""


class DomainError(PapError, ValueError):
    """Argument outside the mathematical domain of a function."""


class NumericalInvariantError(PapError, RuntimeError):
    """A numerical invariant (unitarity, no wrap-around, ...) was violated."""


class GridTooCoarseError(NumericalInvariantError):
    """Synthesized envelope does not fit in the FFT time window."""

    def __init__(self, message, required_n_points):
        super().__init__(f"{message}; use n_points >= {required_n_points}")
        self.required_n_points = required_n_points


class IntegratorFailure(NumericalInvariantError):
    def __init__(self, drift):
        super().__init__(f"norm drift {drift:.3e} exceeds 1e-6")
        self.drift = drift


class NotATrainError(PapError, ValueError):
    """Envelope has fewer than two significant peaks."""


class SamplingError(PapError, ValueError):
    def __init__(self, message, required_n):
        super().__init__(f"{message}; need n >= {required_n}")
        self.required_n = required_n


class ControlFailure(NumericalInvariantError):
    """Amplitude-control loop cannot proceed (e.g. an empty target level)."""
