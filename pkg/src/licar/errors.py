"""Exception hierarchy shared across the package.

Each error carries a ``category`` used by the CLI to pick an exit code.
"""


class LicarError(Exception):
    category = "data"


class ParseError(LicarError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingChannel(LicarError):
    category = "io"


class DimensionMismatch(LicarError):
    pass


class BadEncoding(LicarError):
    pass


class EmptyChannel(LicarError):
    pass


class OutOfFov(LicarError):
    pass


class InvalidPixel(LicarError):
    pass


class ZeroRange(LicarError):
    pass


class DegeneratePolygon(LicarError):
    pass


class BadRatios(LicarError):
    pass


class UnknownId(LicarError):
    pass


class ScoreRange(ParseError):
    pass


class BadBox(ParseError):
    pass


class NumericalFailure(LicarError):
    pass


class InsufficientFrames(LicarError):
    pass


class ConfigError(LicarError):
    category = "config"
