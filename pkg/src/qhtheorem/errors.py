"""Exception types raised across the package."""


class QHError(Exception):
    """Base class for all package errors."""


class InvalidParameter(QHError, ValueError):
    """A configuration or argument failed validation."""


class ZeroNorm(QHError, ValueError):
    pass


class NotHermitian(QHError, ValueError):
    pass


class NotPSD(QHError, ValueError):
    pass


class TraceNotOne(QHError, ValueError):
    pass


class NotNormalized(QHError, ValueError):
    pass


class NotUnitNorm(QHError, ValueError):
    pass


class DimensionMismatch(QHError, ValueError):
    pass


class NotPSDResult(QHError, ArithmeticError):
    """A Schur-product channel produced a matrix with negative eigenvalues."""

    def __init__(self, min_eigenvalue: float):
        super().__init__(f"result is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")
        self.min_eigenvalue = min_eigenvalue


class DivergentElement(QHError, ArithmeticError):
    """Element-wise ratio has a zero denominator with a nonzero numerator."""

    def __init__(self, indices):
        self.indices = [tuple(int(v) for v in ij) for ij in indices]
        super().__init__(f"divergent decoherence-matrix elements at {self.indices}")


class StateExplosion(QHError, RuntimeError):
    """The number of stored terms exceeded the configured cap.

    ``reached`` is the last time fully simulated and ``partial`` holds whatever
    results were accumulated before the cap was hit.
    """

    def __init__(self, reached, n_terms: int, cap: int, partial=None):
        super().__init__(f"{n_terms} terms exceed cap {cap} after reaching t={reached}")
        self.reached = reached
        self.n_terms = n_terms
        self.cap = cap
        self.partial = partial


class NoDropFound(QHError, LookupError):
    pass


class InsufficientData(QHError, ValueError):
    pass


class GridAliasing(QHError, ValueError):
    """Free evolution would wrap around the periodic grid."""

    def __init__(self, message: str, suggested_points: int):
        super().__init__(f"{message}; try at least {suggested_points} grid points")
        self.suggested_points = suggested_points
