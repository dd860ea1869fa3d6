"""
Error hierarchy shared by the services and the command-line front end.

Every error carries the process exit code the CLI maps it to.
"""
from typing import Optional


class TTWError(Exception):
    """
    Base class for all errors raised by the toolkit.
    """
    exit_code: int = 1


class ConfigError(TTWError, ValueError):
    """
    Invalid run configuration or command-line input.
    """
    exit_code = 2


class DomainError(TTWError, ValueError):
    """
    Argument outside the domain of an operation (walls, origin, bad parameters).
    """
    exit_code = 3


class ConvergenceError(TTWError, ArithmeticError):
    """
    A series or iteration did not converge within its budget.
    """
    exit_code = 3


class QuadratureError(ConvergenceError):
    """
    Successive quadrature orders disagree beyond tolerance.
    """


class TruncationError(ConvergenceError):
    """
    The last retained shell of a truncated series is too large.
    """


class OracleConvergenceError(ConvergenceError):
    """
    Richardson-extrapolated eigenvalues have not settled at the finest grid.
    """


class ConstraintViolationError(TTWError, ValueError):
    """
    Amplitudes do not satisfy the charge constraint a formula relies on.
    """
    exit_code = 3


class InfeasibleChargesError(TTWError, ValueError):
    """
    No amplitudes exist for the requested energy and charge constraints.
    """
    exit_code = 4

    def __init__(self, message: str, minimal_energy: Optional[float] = None) -> None:
        super().__init__(message)
        self.minimal_energy = minimal_energy


class StepCollapseError(TTWError, ArithmeticError):
    """
    The adaptive integrator step fell below its floor.
    """
    exit_code = 5


class InconclusiveArbitrationError(TTWError):
    """
    An oracle arbitration did not single out exactly one convention.
    """
    exit_code = 6
