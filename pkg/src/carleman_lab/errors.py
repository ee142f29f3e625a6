"""Exception hierarchy shared by all modules."""


class CarlemanLabError(Exception):
    """Base class for every error raised by carleman_lab."""


class InvalidDomain(CarlemanLabError):
    pass


class CornerPoint(CarlemanLabError):
    pass


class ResolutionTooCoarse(CarlemanLabError):
    pass


class DegenerateField(CarlemanLabError):
    pass


class OutOfHorizon(CarlemanLabError):
    pass


class NotC1(CarlemanLabError):
    pass


class ApertureOutOfRange(CarlemanLabError):
    pass


class PartitionFailure(CarlemanLabError):
    pass


class InvalidPartition(CarlemanLabError):
    pass


class SlackNonpositive(CarlemanLabError):
    pass


class OutOfDomain(CarlemanLabError):
    pass


class RhoOutOfRange(CarlemanLabError):
    pass


class GridMismatch(CarlemanLabError):
    pass


class WindowOutOfRange(CarlemanLabError):
    pass


class ParseError(CarlemanLabError):
    """Malformed config document; carries the offending line or key."""

    def __init__(self, message, line=None, key=None):
        super().__init__(message)
        self.line = line
        self.key = key


class ValidationError(CarlemanLabError):
    pass
