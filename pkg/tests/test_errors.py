"""
Tests for the exception hierarchy and its exit codes (errors.py).
"""
import pytest

from errors import (
    BudgetExceeded,
    ClusterPropertyError,
    DialectViolation,
    IQRewriteError,
    ParseError,
    PreconditionError,
    ReservedNameError,
    ResourceLimitExceeded,
    UnsupportedTarget,
    UsageError,
)


@pytest.mark.parametrize(
    "error, code",
    [
        (ParseError("bad", 1, 2), 3),
        (ReservedNameError("@p0"), 3),
        (DialectViolation("alc", ["inverse role"]), 3),
        (UsageError("no input"), 3),
        (UnsupportedTarget("alc"), 3),
        (PreconditionError("not x-acyclic", "r(y,y)"), 1),
        (ClusterPropertyError("joins"), 1),
        (ResourceLimitExceeded("tableau", 10), 4),
        (BudgetExceeded("MMSNP evaluation", 10), 4),
    ],
)
def test_exit_codes(error, code):
    """Each error class maps to its CLI exit code."""
    assert isinstance(error, IQRewriteError)
    assert error.exit_code == code


def test_parse_error_message_and_dict():
    """Line and column appear in the message and in the details."""
    error = ParseError("unexpected input", 3, 7)
    assert str(error) == "unexpected input (line 3, column 7)"
    assert error.to_dict() == {"type": "ParseError", "message": str(error), "line": 3, "column": 7}


def test_reserved_name_is_a_parse_error():
    """Reserved identifiers are reported like syntax errors."""
    error = ReservedNameError("@p0", 2, 1)
    assert isinstance(error, ParseError)
    assert error.name == "@p0"
    assert error.line == 2


def test_precondition_witness():
    """The witness is appended to the message."""
    error = PreconditionError("query is not x-acyclic", "r(y,y)")
    assert str(error) == "query is not x-acyclic: r(y,y)"
    assert error.to_dict()["witness"] == "r(y,y)"


def test_dialect_violation_lists_constructs():
    """Every violated construct is kept."""
    error = DialectViolation("alc", ["inverse role", "functionality"])
    assert error.to_dict()["violations"] == ["inverse role", "functionality"]


def test_budget_details():
    """What ran out and the budget it had."""
    data = BudgetExceeded("MMSNP evaluation", 100).to_dict()
    assert data["what"] == "MMSNP evaluation"
    assert data["budget"] == 100
