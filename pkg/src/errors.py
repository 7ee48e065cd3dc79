"""Exception types raised by the toolkit.

Every error carries the process exit code the CLI maps it to.
"""


class SuperSinhError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 2


class ConfigurationError(SuperSinhError):
    """Invalid configuration, literal or mismatched ring size."""

    exit_code = 2


class ParityError(SuperSinhError, TypeError):
    """An operand has the wrong Grassmann parity."""

    exit_code = 2


class DomainError(SuperSinhError, ValueError):
    """Argument outside the real domain of a function or solver."""

    exit_code = 2


class NotInvertible(SuperSinhError, ZeroDivisionError):
    """Division by an element whose body vanishes."""

    exit_code = 2


class ExtrapolationError(SuperSinhError, ValueError):
    """Evaluation requested outside a sampled grid."""

    exit_code = 2


class NotReducible(SuperSinhError):
    """The subalgebra does not yield a reduced system in its invariants."""

    exit_code = 3


class NumericalError(SuperSinhError, ArithmeticError):
    """Non-finite values or failed convergence."""

    exit_code = 4


class ConstraintError(NumericalError):
    """A conserved quantity or algebraic constraint drifted past tolerance."""

    exit_code = 4


class PoleError(NumericalError):
    """Evaluation too close to a pole."""

    exit_code = 4
