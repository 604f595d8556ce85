"""
verify: compare an OMQ with a claimed IQ rewriting on every Σ-ABox up to a bound.

Input is either a JSON pair {"original": "<document>", "rewriting": "<document>"}
or an original document with --rewriting FILE.
"""

import json
import logging

from commands import CommandResult, read_text, report_exit_code
from errors import UsageError
from harness import verify_rewriting
from models import VerificationReportOut
from syntax import IQ, parse_omq

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser("verify", parents=[common], help="check a rewriting against its OMQ")
    parser.add_argument("--rewriting", help="rewritten OMQ document (else --in is a JSON pair)")
    parser.add_argument("--functional-only", action="store_true",
                        help="only ABoxes that respect the functionality assertions")
    parser.set_defaults(handler=handle)


def load_pair(args) -> tuple[str, str]:
    text = read_text(args.input)
    if args.rewriting:
        return text, read_text(args.rewriting)
    try:
        pair = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"expected a JSON pair or --rewriting FILE: {e}") from None
    if not isinstance(pair, dict) or not {"original", "rewriting"} <= set(pair):
        raise UsageError("the JSON pair needs 'original' and 'rewriting' documents")
    return pair["original"], pair["rewriting"]


def handle(args, settings) -> CommandResult:
    original_text, rewriting_text = load_pair(args)
    original = parse_omq(original_text)
    rewritten = parse_omq(rewriting_text, allow_reserved=True)
    if not isinstance(rewritten.query, IQ):
        raise UsageError("the rewriting must have an instance query")
    if rewritten.sigma != original.sigma:
        logger.warning("the rewriting declares a different signature; using the original one")
    report = verify_rewriting(original, rewritten, settings.max_ind, settings.max_extra,
                              settings=settings, functional_only=args.functional_only)
    out = VerificationReportOut(**report.to_dict())
    style = "green" if report.passed and report.complete else ("red" if not report.passed else "yellow")
    return CommandResult(report_exit_code(report), out.model_dump(), report.summary(), style)
