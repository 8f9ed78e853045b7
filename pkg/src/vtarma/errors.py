"""Exception types raised across the package."""


class VtArmaError(Exception):
    """Base class for package errors."""


class InvalidSpecError(VtArmaError, ValueError):
    """A parameter lies outside its admissible domain."""


class InvalidGeneratorError(InvalidSpecError):
    """A generator is not a continuous strictly increasing cdf on [0, 1]."""


class InvalidProfileError(InvalidSpecError):
    """A volatility proxy profile is not strictly increasing with g(0) = 0."""


class NoDualError(VtArmaError, ValueError):
    """The fulcrum has no dual point."""


class DataError(VtArmaError, ValueError):
    """Input data are malformed or incompatible with the model."""


class DegenerateInputError(DataError):
    """Input has no variation (for example constant residuals)."""


class NumericError(VtArmaError, ArithmeticError):
    """A quadrature, root search or optimisation failed to converge."""
