"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(ToolkitError):
    """Invalid configuration, e.g. a frame grid with hop_s <= 0 or win_s < hop_s."""


class AnnotationError(ToolkitError):
    """Inconsistent error/correction annotations on a segment."""


class ParseError(ToolkitError):
    """Malformed input file. Carries the path and 1-based line number when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}:"
            if line is not None:
                loc += f"{line}:"
            loc += " "
        super().__init__(loc + message)


class TrackMismatchError(ToolkitError):
    """Frame-level tracks of different lengths were compared (no silent truncation)."""


class StreamError(ToolkitError):
    """Feature streams with incompatible dimensions or irreconcilable row counts."""
