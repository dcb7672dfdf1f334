"""Exception hierarchy shared by every stage of the toolkit."""


class SvbError(Exception):
    """Base class for all toolkit errors."""


class CircuitParseError(SvbError, ValueError):
    """Malformed circuit or device file."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        super().__init__(message + where)


class CircuitStructureError(SvbError, ValueError):
    """A syntactically valid circuit that violates a structural invariant."""


class UnsupportedGateError(SvbError, ValueError):
    pass


class CapacityError(SvbError):
    """Dense computation or device too small for the requested width."""


class ShapeError(SvbError, ValueError):
    pass


class EmbeddingError(SvbError):
    """No subset of the device is equivalent to the prototype."""


class UnsupportedNoiseModelError(SvbError, ValueError):
    pass


class IncompleteDataError(SvbError):
    def __init__(self, missing_widths):
        self.missing_widths = tuple(sorted(missing_widths))
        super().__init__(f"no effective error rate for widths {list(self.missing_widths)}")


class UndefinedWidthError(SvbError):
    pass


class ConfigError(SvbError):
    pass


class StageError(SvbError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
