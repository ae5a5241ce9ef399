"""Exception hierarchy.

Validation problems (bad arguments, malformed files, inconsistent configs)
raise :class:`InvalidInputError`; failures of the numerical machinery
(non-convergent fits, degenerate data) raise :class:`NumericalError`.
The CLI maps the former to exit code 1 and the latter to exit code 2.
"""


class ElokitError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(ElokitError, ValueError):
    """An argument, record, or configuration value violates its contract."""


class SchemaError(InvalidInputError):
    """A file does not conform to the documented schema or version."""


class NumericalError(ElokitError, RuntimeError):
    """A numerical procedure failed to produce a usable result."""


class ConvergenceError(NumericalError):
    """An iterative fit did not reach its stopping criterion."""


class DegenerateDataError(NumericalError):
    """The data cannot identify the requested parameters."""
