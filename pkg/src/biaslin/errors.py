"""Exception types shared across the package."""


class BiaslinError(Exception):
    """Base class for all library errors."""


class ValidationError(BiaslinError, ValueError):
    """Bad input: wrong arity, out-of-range parameters, malformed files."""


class InvalidArityError(ValidationError):
    pass


class OutOfRangeError(ValidationError):
    pass


class BoundaryInfeasibleError(ValidationError):
    """Full even-weight support is impossible at the bias-interval boundary."""


class UnsupportedShapeError(ValidationError):
    """Operation requires a Hamming-symmetric distribution."""


class InvalidMixtureError(ValidationError):
    pass


class ModeError(ValidationError):
    """Exact mode requested for an input that only supports sampling."""


class SizeError(ValidationError):
    """Problem too large for the exact/dense code path."""


class ComputationError(BiaslinError, RuntimeError):
    """A search or iterative procedure failed to produce a result."""


class PairwiseIndependenceError(ComputationError):
    """The witness construction must fail: some coordinate is pairwise independent."""


class NotFoundError(ComputationError):
    """A bounded search exhausted its range without success."""


class ConvergenceError(ComputationError):
    pass


class MatrixError(ComputationError):
    """Covariance matrix is not usable (not PSD within tolerance)."""
