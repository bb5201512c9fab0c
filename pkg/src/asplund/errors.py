"""Exception hierarchy.

Validation problems (bad input, violated invariants) and numerical failures
(divergence, truncation) are kept apart so that callers such as the command
line front end can map them to different exit codes.
"""


class AsplundError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AsplundError, ValueError):
    """Input violates a documented precondition or type invariant."""


class ImproperFunctionError(ValidationError):
    """A convex function is identically ``+inf`` (the log-concave function vanishes)."""


class NumericalError(AsplundError, ArithmeticError):
    """A computation could not produce a trustworthy number."""


class TruncationError(NumericalError):
    """The quadrature box cuts off a non-negligible part of the mass."""


class DivergenceError(NumericalError):
    """A quantity that must be finite for the operation diverged."""


class IndeterminateError(NumericalError):
    """A limit neither converged cleanly nor triggered the divergence detector."""
