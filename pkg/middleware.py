"""
Command logging middleware for iqrewrite.

Logs every command with: command name, input file, exit code and latency in
milliseconds.

Usage:
    from middleware import CommandLoggingMiddleware
    handler = CommandLoggingMiddleware(handler)
"""
from __future__ import annotations

import time
import logging

from errors import IQRewriteError

logger = logging.getLogger("iqrewrite.commands")


class CommandLoggingMiddleware:
    """Wraps a command handler and logs one line per invocation with timing."""

    # Commands too cheap to be worth a log line
    SKIP_COMMANDS = frozenset({"parse-check"})

    def __init__(self, handler):
        self.handler = handler

    def __call__(self, args, settings):
        command = getattr(args, "command", "?")
        if command in self.SKIP_COMMANDS:
            return self.handler(args, settings)

        start = time.perf_counter()
        status = "error"
        try:
            result = self.handler(args, settings)
            status = result.exit_code
            return result
        except IQRewriteError as e:
            status = e.exit_code
            raise
        finally:
            latency_ms = (time.perf_counter() - start) * 1000
            logger.info(
                "%(command)s %(input)s exit=%(status)s %(latency).0fms%(jobs)s",
                {
                    "command": command,
                    "input": getattr(args, "input", None) or "-",
                    "status": status,
                    "latency": latency_ms,
                    "jobs": f" jobs={settings.jobs}" if settings.jobs > 1 else "",
                },
            )
