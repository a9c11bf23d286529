"""Exception hierarchy.

Every error raised by the library derives from :class:`LDPNBError`, which is
itself a :class:`ValueError` so callers that only care about bad input can
catch the builtin.
"""


class LDPNBError(ValueError):
    pass


class InvalidDomainError(LDPNBError):
    pass


class InvalidInputError(LDPNBError):
    pass


class EmptyInputError(LDPNBError):
    pass


class InconsistentReportsError(LDPNBError):
    pass


class NormalizationError(LDPNBError):
    """A value expected in [-1, 1] (or [0, 1] for squares) fell outside it."""


class DegeneratePriorError(LDPNBError):
    pass


class SchemaError(LDPNBError):
    pass


class ParseError(LDPNBError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateColumnError(LDPNBError):
    pass


class InvalidDimsError(LDPNBError):
    pass


class DegenerateDataError(LDPNBError):
    pass


class DegenerateLabelsError(LDPNBError):
    pass


class ConfigError(LDPNBError):
    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
