"""Exception types raised across the toolkit."""


class AvseldError(Exception):
    """Base class for all toolkit errors."""


class ZeroVector(AvseldError, ValueError):
    pass


class EmptyClip(AvseldError, ValueError):
    pass


class SilentClip(AvseldError, ValueError):
    pass


class SampleRateMismatch(AvseldError, ValueError):
    pass


class NotFoa(AvseldError, ValueError):
    pass


class GeometryMismatch(AvseldError, ValueError):
    pass


class InfeasibleScene(AvseldError, RuntimeError):
    pass


class ParseError(AvseldError, ValueError):
    """Malformed line in a text input file."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.path = path
        self.line = line


class RangeError(ParseError):
    """A parsed field is syntactically fine but outside its valid range."""


class TooManySources(AvseldError, ValueError):
    pass


class SilentSegment(AvseldError, ValueError):
    pass
