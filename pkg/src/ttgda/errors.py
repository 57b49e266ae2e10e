"""Exception hierarchy shared across the package.

Two branches matter to callers: ConfigError (bad experiment description,
CLI exit code 2) and NumericalError (a computation refused or failed,
CLI exit code 3). Everything else derives from those.
"""

from __future__ import annotations


class TTGDAError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(TTGDAError):
    """Invalid experiment configuration. Carries a dotted field path."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class NumericalError(TTGDAError):
    """A numerical routine failed or refused to proceed."""


class DimensionError(NumericalError):
    """Operands have incompatible shapes."""


class ContractViolation(NumericalError):
    """An input violates a documented precondition (asymmetry, indefiniteness, ...)."""


class AssumptionViolation(NumericalError):
    """A structural assumption required by the analysis does not hold."""


class NoGuaranteeError(NumericalError):
    """The requested certificate does not exist for this input.

    ``value`` holds the offending quantity (e.g. the nonpositive minimum
    eigenvalue of the symmetric part).
    """

    def __init__(self, message: str, value: float | None = None):
        super().__init__(message)
        self.value = value


class StepSizeError(NumericalError):
    """Explicit integrator step too large for stability."""


class DivergenceError(NumericalError):
    """A simulated state became non-finite. ``step`` is the offending index."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class ConstructionError(NumericalError):
    """A constructive procedure could not meet its own verification."""


class OutOfRegimeError(NumericalError):
    """Inputs fall outside the validity region of a closed-form bound."""
