"""Exception hierarchy shared across the package."""


class NsumError(Exception):
    """Base class for all package errors."""


class ParameterError(NsumError, ValueError):
    """Invalid or inconsistent input parameters."""


class SingularityError(ParameterError):
    """A closed-form expression has a zero denominator."""


class IngestionError(NsumError):
    """Malformed network or attribute file."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f", line {line}"
            where += ": "
        super().__init__(where + message)


class CaseConstructionError(NsumError):
    """Not enough candidate groups to build the requested cases."""


class UndefinedStatisticError(NsumError):
    """A graph statistic is undefined for the given input."""


class InsufficientDataError(NsumError):
    """A Monte Carlo conditioning event never occurred."""
