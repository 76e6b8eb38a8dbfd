"""Exception types raised by tildelab."""


class TildeLabError(ValueError):
    """Base class for all library errors."""


class EmptySubset(TildeLabError):
    pass


class ShapeMismatch(TildeLabError):
    pass


class TooManyParties(TildeLabError):
    pass


class BadDimension(TildeLabError):
    pass


class UnequalDims(TildeLabError):
    pass


class PureStateRequired(TildeLabError):
    pass


class NotHermitian(TildeLabError):
    pass


class ConsistencyError(TildeLabError):
    """Two independent evaluation routes disagreed beyond tolerance."""


class StateFileError(TildeLabError):
    """Malformed state or operator file."""
