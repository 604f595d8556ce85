"""
Exception hierarchy for iqrewrite.

Library code raises these; only main.run turns them into exit codes.
"""

from __future__ import annotations


class IQRewriteError(Exception):
    """Base class. ``exit_code`` is what the CLI returns for this error."""

    exit_code = 3

    def to_dict(self) -> dict:
        return {"type": type(self).__name__, "message": str(self)}


class ParseError(IQRewriteError):
    """Syntax error in a DSL document, with 1-based line/column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")

    def to_dict(self) -> dict:
        data = super().to_dict()
        data.update({"line": self.line, "column": self.column})
        return data


class ReservedNameError(ParseError):
    """Input used an identifier from the reserved '@' namespace."""

    def __init__(self, name: str, line: int | None = None, column: int | None = None):
        self.name = name
        super().__init__(f"identifier '{name}' is reserved for generated names", line, column)


class DialectViolation(IQRewriteError):
    """A document body uses constructs its declared dialect forbids."""

    def __init__(self, dialect: str, violations: list[str]):
        self.dialect = dialect
        self.violations = list(violations)
        super().__init__(f"dialect {dialect} forbids: {', '.join(self.violations)}")

    def to_dict(self) -> dict:
        data = super().to_dict()
        data.update({"dialect": self.dialect, "violations": self.violations})
        return data


class UsageError(IQRewriteError):
    """Bad flag combination or missing input."""


class UnsupportedTarget(IQRewriteError):
    """The requested target/TBox combination has no implemented procedure."""


class PreconditionError(IQRewriteError):
    """A construction was called on an input outside its precondition.

    ``witness`` is rendered text (a cycle, a variable, a component) explaining why.
    """

    exit_code = 1

    def __init__(self, message: str, witness: str | None = None):
        self.witness = witness
        suffix = f": {witness}" if witness else ""
        super().__init__(f"{message}{suffix}")

    def to_dict(self) -> dict:
        data = super().to_dict()
        data["witness"] = self.witness
        return data


class ClusterPropertyError(PreconditionError):
    """The cluster decomposition of a non-f-acyclic query was requested."""


class ResourceLimitExceeded(IQRewriteError):
    """A search hit its configured budget before reaching an answer."""

    exit_code = 4

    def __init__(self, what: str, budget: int | float):
        self.what = what
        self.budget = budget
        super().__init__(f"{what} exceeded budget {budget}")

    def to_dict(self) -> dict:
        data = super().to_dict()
        data.update({"what": self.what, "budget": self.budget})
        return data


class BudgetExceeded(ResourceLimitExceeded):
    """MMSNP evaluation would enumerate more second-order assignments than allowed."""
