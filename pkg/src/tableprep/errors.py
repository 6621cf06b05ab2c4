"""Exception hierarchy shared across the package.

Every error raised by tableprep derives from :class:`TablePrepError`, so the
pipeline engine can catch exactly the failures it is allowed to absorb
(truncation policy) while programming errors still propagate.
"""

from __future__ import annotations


class TablePrepError(Exception):
    """Base class for all tableprep errors."""


# --- table construction / ingestion ---

class DuplicateColumnError(TablePrepError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"duplicate column name: {column!r}")


class RaggedRowError(TablePrepError):
    def __init__(self, row_index: int, expected: int, got: int):
        self.row_index = row_index
        super().__init__(
            f"row {row_index} has {got} cells, expected {expected}"
        )


class EmptyInputError(TablePrepError):
    pass


class InvalidCellError(TablePrepError):
    pass


# --- operator parsing ---

class OperatorParseError(TablePrepError):
    pass


class UnknownOperatorError(OperatorParseError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown operator: {name!r}")


class MissingParamError(OperatorParseError):
    def __init__(self, op: str, param: str):
        self.op = op
        self.param = param
        super().__init__(f"operator {op!r} is missing parameter {param!r}")


class BadParamTypeError(OperatorParseError):
    def __init__(self, op: str, param: str, detail: str = ""):
        self.op = op
        self.param = param
        msg = f"operator {op!r} has invalid parameter {param!r}"
        super().__init__(msg + (f": {detail}" if detail else ""))


class PipelineParseError(TablePrepError):
    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"invalid operator at index {index}: {cause}")


# --- operator execution ---

class OperatorError(TablePrepError):
    """An operator failed on its input table; absorbed by trace truncation."""


class ColumnNotFoundError(OperatorError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"column not found: {column!r}")


class NoValidColumnsError(OperatorError):
    def __init__(self, requested: tuple[str, ...]):
        self.requested = requested
        super().__init__(f"none of the requested columns exist: {list(requested)}")


class ColumnExistsError(OperatorError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"column already exists: {column!r}")


class ExecutorFailureError(OperatorError):
    """A semantic executor refused or failed; treated as an op failure."""


# --- reward computation ---

class DegenerateInitialTableError(TablePrepError):
    pass


class BadBudgetError(TablePrepError):
    pass


# --- merge ---

class EmptyCandidatesError(TablePrepError):
    pass


# --- group gate ---

class EmptyGroupError(TablePrepError):
    pass


class GroupTooSmallError(TablePrepError):
    pass


# --- generation client ---

class EmptyQuestionError(TablePrepError):
    pass


class AuthMissingError(TablePrepError):
    def __init__(self, env_var: str):
        self.env_var = env_var
        super().__init__(f"API key environment variable {env_var!r} is not set")


class AllRequestsFailedError(TablePrepError):
    pass


class NoJsonFoundError(TablePrepError):
    pass


# --- QA client ---

class QaTransportError(TablePrepError):
    """Transport-level QA failure. ``state`` is set by the rollback machine."""

    def __init__(self, message: str, state: int | None = None):
        self.state = state
        super().__init__(message)


# --- CLI surface ---

class ConfigError(TablePrepError):
    pass


class DatasetError(TablePrepError):
    pass
