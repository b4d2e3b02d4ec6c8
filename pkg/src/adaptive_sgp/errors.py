"""Exception types shared across the package."""


class AdaptiveSgpError(Exception):
    """Base class for all library errors."""


class NotSymmetric(AdaptiveSgpError):
    """Matrix failed the symmetry check."""


class NotPsd(AdaptiveSgpError):
    """Factorization failed even at maximum jitter."""


class DimensionMismatch(AdaptiveSgpError):
    """Operands have incompatible shapes."""


class SchurNotPositive(AdaptiveSgpError):
    """Bordered-matrix extension rejected: Schur complement not positive.

    Callers are expected to fall back to a from-scratch factorization.
    """


class InvalidLambda(AdaptiveSgpError):
    """Forgetting factor outside (0, 1]."""


class EmptyRecords(AdaptiveSgpError):
    """Metric requested over an empty record list."""


class MapeUndefined(AdaptiveSgpError):
    """MAPE undefined because some |y_true| is below tolerance."""


class TooShort(AdaptiveSgpError):
    """Series too short for the requested embedding or baseline."""
