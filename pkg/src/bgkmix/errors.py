"""Exception hierarchy.

Configuration-type errors map to CLI exit code 1, everything deriving from
:class:`NumericalError` maps to exit code 2.
"""
from __future__ import annotations


class BGKError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BGKError, ValueError):
    """Invalid configuration value; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        if key is not None and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)


class AdmissibilityError(ConfigurationError):
    """Mixture parameters or closures outside their admissible region."""


class DimensionError(BGKError, ValueError):
    """Array shapes or grids do not match."""


class NumericalError(BGKError, ArithmeticError):
    """Runtime numerics failure."""


class ZeroDensityError(NumericalError):
    """Moments requested for a cell with zero density."""


class VacuumError(NumericalError):
    """Total density n1 + n2 vanishes, collision frequencies undefined."""


class DegenerateTemperatureError(NumericalError):
    """Maxwellian requested with non-positive temperature and positive density."""


class StateDegenerateError(NumericalError):
    """Macroscopic state left the region T_k > 0."""


class ConstantDegenerateError(NumericalError):
    """A derived estimate constant is infinite for the given parameters."""


class PreconditionError(BGKError, ValueError):
    """Operation called outside its stated domain (e.g. q too small)."""


class DiagnosticError(BGKError, ValueError):
    """Simulation trace lacks fields required by a checker."""


class NonConvergenceError(NumericalError):
    """Iteration did not reach tolerance; ``trace`` holds the history."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace
