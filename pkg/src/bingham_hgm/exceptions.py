"""Exception types shared across the package."""


class BinghamError(Exception):
    """Base class for all package errors."""


class InputError(BinghamError, ValueError):
    """Invalid user input (bad shapes, non-finite values, degenerate data)."""


class NumericalError(BinghamError, ArithmeticError):
    """A numerical procedure could not deliver the requested accuracy."""


class SingularPointError(NumericalError):
    """Pfaffian coefficients requested too close to a tie between parameters."""
