"""Exception hierarchy shared across the package.

The CLI maps :class:`InputError` to exit code 2 and :class:`PreconditionError`
to exit code 3.
"""


class DRNError(Exception):
    """Base class for all package errors."""


class InputError(DRNError, ValueError):
    """Malformed input files, codebooks, or configuration."""


class SurveyFormatError(InputError):
    """A survey cell failed validation.

    Carries the 1-based data row number (header excluded), column name and
    raw value so the message can point at the offending cell.
    """

    def __init__(self, message: str, *, row: int | None = None, column: str | None = None,
                 value: str | None = None, path: str | None = None):
        self.row = row
        self.column = column
        self.value = value
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if value is not None:
            where.append(f"value {value!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class PreconditionError(DRNError, ValueError):
    """A statistical or structural precondition of an analysis is unmet."""


class InsufficientEvidence(PreconditionError):
    """No labeled co-member supports a tier prediction."""
