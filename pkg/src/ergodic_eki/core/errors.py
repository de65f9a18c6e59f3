"""
Exception hierarchy for ergodic-eki.
"""


class ErgodicEkiError(Exception):
    """Base class for all package errors."""


# ==================== Integration ====================

class IntegrationError(ErgodicEkiError):
    """Raised when a stochastic integration cannot proceed."""


class NonFiniteState(IntegrationError):
    """A state component became NaN or infinite."""

    def __init__(self, step: int):
        super().__init__(f"Non-finite state at step {step}")
        self.step = step


class InsufficientHistory(IntegrationError):
    """The seed history of a delay equation is shorter than the largest delay."""


class NonPositiveDamping(IntegrationError):
    """Langevin damping evaluated to a non-positive value."""

    def __init__(self, phi: float):
        super().__init__(f"Non-positive damping at angle {phi:.6g}")
        self.phi = phi


# ==================== Statistics ====================

class StatisticsError(ErgodicEkiError):
    """Raised when ergodic statistics cannot be computed."""


class WindowTooShort(StatisticsError):
    """The averaging window does not support the requested statistic."""


class EmptyBand(StatisticsError):
    """The PSD frequency band holds too few frequencies for the fit."""


class InvalidStatistics(StatisticsError):
    """A statistics request is malformed (lag off the grid, bad component)."""


# ==================== Solver ====================

class SolverError(ErgodicEkiError):
    """Raised by the ensemble Kalman inversion."""


class SingularSystem(SolverError):
    """The innovation covariance could not be factorized."""


class AllMembersFailed(SolverError):
    """Every forward evaluation of a generation failed."""

    def __init__(self, generation: int):
        super().__init__(f"All ensemble members failed in generation {generation}")
        self.generation = generation


class ForwardFailed(SolverError):
    """A single forward map evaluation failed."""


# ==================== Function parameterization ====================

class FunctionParamError(ErgodicEkiError):
    """Raised by function parameterizations."""


class SingularGram(FunctionParamError):
    """The GP Gram system is singular even after jitter."""


class LayoutMismatch(FunctionParamError):
    """A parameter vector or mapping does not match its layout."""


# ==================== Configuration and data ====================

class ConfigError(ErgodicEkiError):
    """Invalid experiment configuration."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class DataFileError(ErgodicEkiError):
    """Unreadable or malformed data file."""


class ParseError(DataFileError):
    """A data file row could not be parsed."""

    def __init__(self, line: int, message: str = "unparseable row"):
        super().__init__(f"line {line}: {message}")
        self.line = line


class BinMismatch(DataFileError):
    """Histograms with different bin edges were compared."""
