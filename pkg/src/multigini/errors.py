"""Exception and warning types shared across the package."""


class DataError(ValueError):
    """Malformed or unusable input data (bad weights, bad CSV, size caps)."""


class NumericalError(ArithmeticError):
    """A computation is numerically undefined for this input.

    Raised for singular or indefinite covariance matrices, zero-mean
    components, and zero whitened-mean norms.
    """


class NegativityWarning(UserWarning):
    """A non-negative sample was whitened to a point with negative entries.

    The inequality index stays well defined, but its [0, 1] range guarantee
    is forfeited.
    """
