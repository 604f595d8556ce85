"""
decide: is the OMQ rewritable into an IQ of the target dialect?

Exit code 0 = rewritable, 1 = not rewritable, 2 = unknown within the bounds.
"""

import logging

from commands import CommandResult, read_text
from decider import NOT_REWRITABLE, REWRITABLE, decide
from models import DecisionOut
from syntax import parse_omq

logger = logging.getLogger(__name__)

_STYLES = {REWRITABLE: "green", NOT_REWRITABLE: "red"}


def register(subparsers, common):
    parser = subparsers.add_parser("decide", parents=[common], help="decide IQ-rewritability")
    parser.add_argument("--fixed-tbox", action="store_true",
                        help="do not extend the TBox (ALC targets need a full signature)")
    parser.add_argument("--verify", action="store_true",
                        help="check a produced rewriting on all Σ-ABoxes up to --max-ind individuals")
    parser.set_defaults(handler=handle)


def _summary(decision) -> list[str]:
    lines = [f"{decision.verdict} ({decision.target})"]
    if decision.reason:
        lines.append(f"  reason: {decision.reason}")
    if decision.bounds:
        lines.append("  bounds: " + ", ".join(f"{k}={v}" for k, v in sorted(decision.bounds.items())))
    if decision.certificate is not None:
        for key, value in decision.certificate.to_dict().items():
            if value:
                lines.append(f"  {key}: {str(value).replace(chr(10), ', ')}")
    if decision.rewriting is not None:
        lines.append("")
        lines.append(decision.rewriting.to_dict()["document"].rstrip())
    if decision.verification is not None:
        lines.append("")
        lines.append(decision.verification.summary())
    return lines


def handle(args, settings) -> CommandResult:
    omq = parse_omq(read_text(args.input))
    target = settings.target or "alci"
    decision = decide(omq, target, settings, extend_tbox=not args.fixed_tbox, verify=args.verify)
    logger.info(f"decide {target}: {decision.verdict}")
    out = DecisionOut(**decision.to_dict())
    return CommandResult(decision.exit_code, out.model_dump(), "\n".join(_summary(decision)),
                         _STYLES.get(decision.verdict, "yellow"))
