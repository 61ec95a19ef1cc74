"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operator or state dimensions do not match the requested operation."""


class NotHermitianError(ValueError):
    pass


class DomainError(ValueError):
    """A probability or parameter lies outside its admissible range."""


class UnphysicalViolationError(ValueError):
    """CHSH value above the Tsirelson bound 2*sqrt(2)."""


class UndefinedRegimeError(ValueError):
    """A bound is not defined for the supplied statistics."""


class NoRootError(ValueError):
    pass


class NotDichotomicError(ValueError):
    """Observable is not Hermitian with eigenvalues +1/-1."""


class EstimationUndefinedError(ValueError):
    """A setting pair needed by an estimator received no rounds."""

    def __init__(self, pair, what):
        self.pair = pair
        super().__init__(f"cannot estimate {what}: no rounds for setting pair {pair}")
