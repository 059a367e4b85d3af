"""
Exception types raised by the cheeger_gap library.

Errors are grouped by how the CLI reports them: a failed verification exits
with code 1, input and validation problems with code 2, numerical failures
with code 3.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .report import Report


class CheegerGapError(Exception):
    """Base class for all library errors."""

    exit_code: int = 2


class InvalidModelError(CheegerGapError, ValueError):
    """Exception raised when model parameters are out of range."""

    pass


class ConfigurationError(CheegerGapError, ValueError):
    """Exception raised for an unusable setting, option value or suite name."""

    pass


class ReducibilityError(InvalidModelError):
    """Exception raised when a model would produce a reducible matrix."""

    pass


class MatrixParseError(CheegerGapError):
    """Exception raised for malformed matrix files."""

    def __init__(self, message: str, *, path: str, line: int | None = None):
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line


class ValidationError(CheegerGapError):
    """Exception raised when a matrix fails the stoquastic preconditions."""

    def __init__(self, report: "Report"):
        failure = report.first_failure()
        name = failure.name if failure is not None else "unknown"
        detail = f" ({failure.detail})" if failure is not None and failure.detail else ""
        super().__init__(f"{report.title}: check '{name}' failed{detail}")
        self.report = report


class SizeLimitError(CheegerGapError):
    """Exception raised when an input exceeds a configured size ceiling."""

    pass


class DegenerateCutError(CheegerGapError):
    """Exception raised for an empty or full vertex subset."""

    pass


class EmptyFamilyError(CheegerGapError):
    """Exception raised when a cut family yields no feasible cut."""

    pass


class DegenerateReductionError(CheegerGapError):
    """Exception raised when a reduced graph cannot produce a bound."""

    pass


class DegeneracyError(CheegerGapError):
    """Exception raised when an operation needs a unique first excited state."""

    pass


class SupportError(CheegerGapError):
    """Exception raised when the positive support of the excited state is unusable."""

    pass


class CapacityOverflowError(CheegerGapError):
    """Exception raised when network capacities cannot be integerized precisely."""

    pass


class ConvergenceError(CheegerGapError):
    """Exception raised when an eigensolver misses its tolerance."""

    exit_code = 3

    def __init__(self, message: str, *, residual: float, iterations: int):
        super().__init__(
            f"{message} (residual {residual:.3e} after {iterations} iterations)"
        )
        self.residual = residual
        self.iterations = iterations


class PositivityError(CheegerGapError):
    """Exception raised when a ground state has non-positive components."""

    exit_code = 3


class StaleGroundStateError(CheegerGapError):
    """Exception raised when a ground state does not match its Hamiltonian."""

    exit_code = 3


class VerificationError(CheegerGapError):
    """Exception raised when an invariant report has a failing check."""

    exit_code = 1
