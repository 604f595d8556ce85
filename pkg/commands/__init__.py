# iqrewrite subcommands
# Each module exposes register(subparsers, common) which adds one or more
# subparsers and binds their handler through set_defaults(handler=...).
# Handlers take (args, settings) and return a CommandResult; main.run owns
# printing, exit codes and error conversion.

from __future__ import annotations

import sys
import logging
from dataclasses import dataclass, field

from errors import UsageError
from models import AboxOut, BoundsOut, VerdictOut
from syntax import ABox, render_abox

logger = logging.getLogger(__name__)

# Exit codes shared by every command
EXIT_OK, EXIT_NEGATIVE, EXIT_UNKNOWN = 0, 1, 2


@dataclass
class CommandResult:
    exit_code: int
    payload: dict = field(default_factory=dict)
    text: str = ""
    style: str | None = None  # colour of the first text line


def read_text(path: str | None) -> str:
    """Contents of ``path``; None or "-" reads stdin."""
    if path is None or path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except FileNotFoundError:
        raise UsageError(f"input file {path} not found") from None


def bounds_out(bounds: dict) -> BoundsOut:
    return BoundsOut(**{k: v for k, v in bounds.items() if k in BoundsOut.model_fields})


def verdict_out(verdict) -> VerdictOut:
    """VerdictOut for a reasoner.Verdict3; certificates are serialized with their to_dict."""
    certificate = verdict.certificate
    return VerdictOut(
        kind=verdict.kind,
        exact=verdict.exact,
        reason=verdict.reason,
        bounds=bounds_out(verdict.bounds),
        certificate=certificate.to_dict() if hasattr(certificate, "to_dict") else None,
    )


def abox_out(abox: ABox) -> AboxOut:
    return AboxOut(text=render_abox(abox), individuals=list(abox.individuals), assertions=len(abox))


def verdict_exit_code(kind: str) -> int:
    return {"yes": EXIT_OK, "no": EXIT_NEGATIVE}.get(kind, EXIT_UNKNOWN)


def report_exit_code(report) -> int:
    """Discrepancies beat unknown cells."""
    if not report.passed:
        return EXIT_NEGATIVE
    if not report.complete:
        return EXIT_UNKNOWN
    return EXIT_OK
