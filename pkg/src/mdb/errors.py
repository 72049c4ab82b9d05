"""Exception hierarchy shared by every layer of the engine."""

from __future__ import annotations


class MdbError(Exception):
    """Base class for all engine errors."""


# -- core model ---------------------------------------------------------------

class NotAValueError(MdbError):
    pass


class CorruptionError(MdbError):
    pass


class PropertyConflictError(MdbError):
    pass


# -- storage ------------------------------------------------------------------

class StorageError(MdbError):
    def __init__(self, message: str, path=None):
        super().__init__(f"{message}: {path}" if path is not None else message)
        self.path = path


class PoolExhaustedError(StorageError):
    pass


class SortOrderError(StorageError):
    pass


class UnknownEdgeError(StorageError):
    pass


# -- text formats ---------------------------------------------------------------

class QuerySyntaxError(MdbError):
    """Raised for malformed import or query text; carries a 1-based location."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f" at line {line}, column {column}" if line else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column


class UnknownClauseError(QuerySyntaxError):
    pass


class UndeclaredAliasError(QuerySyntaxError):
    pass


class DuplicateAliasError(QuerySyntaxError):
    pass


class UnknownVariableError(MdbError):
    pass


class WellDesignednessError(MdbError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


# -- evaluation ---------------------------------------------------------------

class IncompatibleError(MdbError):
    pass


class StrategyUnavailableError(MdbError):
    pass


class PermutationUnavailableError(MdbError):
    pass


class UnboundEndpointsError(MdbError):
    pass
