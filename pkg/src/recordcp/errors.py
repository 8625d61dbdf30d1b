"""Exception hierarchy.

Everything raised on purpose by this package derives from ``RecordTestError``.
``DataError`` subclasses map to exit code 2 in the CLI, ``ConfigurationError``
to exit code 1.
"""


class RecordTestError(Exception):
    pass


class ConfigurationError(RecordTestError, ValueError):
    """Invalid combination of options (e.g. asymptotic p-value with weights)."""


class DataError(RecordTestError, ValueError):
    pass


class TooShort(DataError):
    pass


class TiesDetected(DataError):
    """An observation equals the running extremum, so record status is ambiguous."""


class MissingData(DataError):
    pass


class AllZeroWeights(ConfigurationError):
    pass


class DegenerateVariance(DataError):
    pass


class OutOfDomain(RecordTestError, ValueError):
    pass


class InvalidIndices(ConfigurationError):
    pass


class InsufficientYears(DataError):
    pass


class IncompleteYear(DataError):
    pass


class InvalidScenario(ConfigurationError):
    pass


class EmptyInput(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
