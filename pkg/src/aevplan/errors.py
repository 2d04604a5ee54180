"""Exception types shared across the package.

The CLI maps these onto exit codes: input problems exit 2, infeasible
planning problems exit 1.
"""


class AevPlanError(Exception):
    """Base class for all package errors."""


class InputError(AevPlanError, ValueError):
    """Malformed or inconsistent user input (bad file, bad parameter)."""


class ParseError(InputError):
    """Input file could not be parsed; carries the offending line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class InfeasibilityError(AevPlanError, RuntimeError):
    """The planning problem (or a required sub-problem) has no solution."""
