"""Exception hierarchy shared by all sparseobs modules."""


class SparseObsError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(SparseObsError):
    """Operands have incompatible shapes."""


class NotSymmetric(SparseObsError):
    """A matrix required to be symmetric fails the relative tolerance check."""


class NotPositiveDefinite(SparseObsError):
    """Cholesky pivot fell below threshold; dampening is too small."""


class SingularSubmatrix(SparseObsError):
    """A principal submatrix of the inverse Hessian is numerically singular."""


class NumericallySingularDiagonal(SparseObsError):
    """An inverse-Hessian diagonal entry is too small to divide by safely."""


class KOutOfRange(SparseObsError):
    """Sparsity budget outside [0, d]."""


class BatchOutOfRange(SparseObsError):
    """Mini-batch size outside [1, n]."""


class SearchTooLarge(SparseObsError):
    """Brute-force mask enumeration would exceed the configured limits."""


class ZeroGradient(SparseObsError):
    """Stochastic step size undefined: lambda = 0 and the sampled gradient is zero."""


class NonFiniteLoss(SparseObsError):
    """A training loss became NaN or infinite; aborting with diagnostics."""


class ImageLoadError(SparseObsError):
    """Image file is missing, malformed, or not 8-bit grayscale PGM."""


class EmptySignal(SparseObsError):
    """An image signal has no nonzero pixels, so no sparsity target exists."""
