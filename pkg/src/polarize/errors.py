"""Exception types shared across the package."""


class PolarizeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(PolarizeError):
    pass


class UnboundedSpace(PolarizeError):
    pass


class EmptySpace(PolarizeError):
    pass


class InvalidShape(PolarizeError):
    pass


class LevelOverflow(PolarizeError):
    pass


class UnknownLetter(PolarizeError):
    pass


class CapacityError(PolarizeError):
    pass


class LevelTooLow(PolarizeError):
    pass


class ShapeRequired(PolarizeError):
    pass


class ZeroColumn(PolarizeError):
    pass


class ZeroRow(PolarizeError):
    pass


class DomainError(PolarizeError):
    pass


class BackendFailure(PolarizeError):
    pass
