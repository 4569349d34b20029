"""Exception hierarchy.

Errors split into configuration problems, data problems and internal
invariant violations so the CLI can map them onto distinct exit codes.
"""


class DepthSightError(Exception):
    exit_code = 3


class ConfigError(DepthSightError, ValueError):
    exit_code = 1


class DataError(DepthSightError, ValueError):
    exit_code = 2


class InvariantViolation(DepthSightError, AssertionError):
    exit_code = 3


# geometry
class DegenerateDisparity(DataError):
    pass


class NonPositiveDepth(DataError):
    pass


class OutOfBounds(DataError):
    pass


# depth maps and file formats
class ChannelMismatch(DataError):
    pass


class UnknownFormat(DataError):
    pass


# synthesis
class EmptyScene(DataError):
    pass


# detection
class NoValidDepth(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class NegativeDimension(DataError):
    pass


# localization
class NoDepthInBox(DataError):
    pass


class InsufficientDetections(DepthSightError, UserWarning):
    """Fewer frames than requested produced a usable detection.

    Issued as a warning by the depth study; the affected rows carry the
    actual sample count instead.
    """

    exit_code = 2
