"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code so scripted callers can distinguish
bad input from bad data from numerical breakdown.
"""


class PhaselabError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidInputError(PhaselabError):
    """Malformed arguments, schemas, or violated preconditions."""

    exit_code = 1


class ConsistencyError(PhaselabError):
    """Marginals fail their compatibility relations beyond tolerance."""

    exit_code = 2


class NumericalError(PhaselabError):
    """Quadrature or eigensolver failure."""

    exit_code = 3
