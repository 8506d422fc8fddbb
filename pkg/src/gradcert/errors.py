"""Exception types shared across the package."""


class GradcertError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(GradcertError):
    """Raised when an argument or configuration value is invalid.

    Kept distinct from ``ValueError`` so callers can tell package errors
    from built-in ones.
    """


class AssumptionError(GradcertError):
    """Raised when inputs are valid but a mathematical assumption fails.

    Typical cases: the acuteness/positivity assumption on the linearized
    operator does not hold, a step family is outside its validity region,
    or the relaxation slope at zero is >= 1 so no certificate can exist.
    """


class BreakdownError(AssumptionError):
    """Raised when a step-size denominator degenerates during iteration."""


class DivergenceError(GradcertError):
    """Raised when the majorant series is evaluated outside its domain."""


class ConvergenceError(GradcertError):
    """Raised when an iterative oracle fails to reach its tolerance."""
