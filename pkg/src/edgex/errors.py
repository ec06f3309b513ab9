"""Exception types raised across the package."""


class EdgexError(Exception):
    pass


class ParameterDomainError(EdgexError, ValueError):
    """A model parameter lies outside its admissible range."""


class DegenerateSpecError(EdgexError, ValueError):
    pass


class DegenerateMatrixError(EdgexError, ValueError):
    """The intensity has no usable mass (e.g. zero total mass)."""


class CapacityError(EdgexError, OverflowError):
    pass


class MassDivergenceError(EdgexError, ValueError):
    pass


class UnsupportedFamilyError(EdgexError, ValueError):
    pass


class ParityError(EdgexError, ValueError):
    pass


class UndefinedStatisticError(EdgexError, ValueError):
    pass


class DimensionError(EdgexError, ValueError):
    pass


class SchemaError(EdgexError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
