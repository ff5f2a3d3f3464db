"""Exception types raised across the package."""


class LSortError(Exception):
    """Base class for all package errors."""


class ConfigMismatch(LSortError, ValueError):
    pass


class InvalidConfig(LSortError, ValueError):
    pass


class OutOfOrderInput(LSortError, ValueError):
    pass


class InvalidBand(LSortError, ValueError):
    pass


class CoeffOverflow(LSortError, OverflowError):
    pass


class EmptyInput(LSortError, ValueError):
    pass


class WrongLength(LSortError, ValueError):
    pass


class UnknownChannel(LSortError, KeyError):
    pass


class ZeroMass(LSortError, ZeroDivisionError):
    pass


class NoClusters(LSortError, LookupError):
    pass


class ParseError(LSortError, ValueError):
    pass


class DuplicateChannel(ParseError):
    pass


class MissingChannel(ParseError):
    pass


class FieldOverflow(LSortError, OverflowError):
    pass


class TruncatedFrame(LSortError, ValueError):
    pass


class TruncatedFrameWarning(UserWarning):
    """A recording ended mid-frame; the partial frame was dropped."""
