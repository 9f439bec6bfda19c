class NumericalConsistencyError(ArithmeticError):
    """Raised when two quantities that must agree analytically do not agree numerically."""


class VerificationFailure(AssertionError):
    """Raised by the verification suite when a property check fails."""
