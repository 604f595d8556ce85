"""
Tests for the command logging middleware (middleware.py).
"""
import logging
from argparse import Namespace

import pytest

from commands import CommandResult
from deps import Settings
from errors import PreconditionError
from middleware import CommandLoggingMiddleware


def ok_handler(args, settings):
    return CommandResult(0, {}, "done")


def failing_handler(args, settings):
    raise PreconditionError("query is not x-acyclic", "r(y,y)")


def test_logs_command_and_exit_code(caplog):
    """One INFO line with command, input and exit code."""
    caplog.set_level(logging.INFO, logger="iqrewrite.commands")
    args = Namespace(command="decide", input="q.omq")
    result = CommandLoggingMiddleware(ok_handler)(args, Settings())
    assert result.text == "done"
    (record,) = [r for r in caplog.records if r.name == "iqrewrite.commands"]
    assert record.getMessage().startswith("decide q.omq exit=0 ")


def test_logs_error_exit_code(caplog):
    """Errors are logged with their exit code and re-raised."""
    caplog.set_level(logging.INFO, logger="iqrewrite.commands")
    args = Namespace(command="rewrite", input=None)
    with pytest.raises(PreconditionError):
        CommandLoggingMiddleware(failing_handler)(args, Settings(jobs=2))
    message = caplog.records[-1].getMessage()
    assert message.startswith("rewrite - exit=1 ")
    assert message.endswith("jobs=2")


def test_skips_parse_check(caplog):
    """parse-check is not logged."""
    caplog.set_level(logging.INFO, logger="iqrewrite.commands")
    CommandLoggingMiddleware(ok_handler)(Namespace(command="parse-check", input=None), Settings())
    assert not [r for r in caplog.records if r.name == "iqrewrite.commands"]
