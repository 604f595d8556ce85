"""
rewrite: run one rewriting construction on an OMQ document.

The output is the rewritten OMQ as a document (TBox, Σ, IQ) that parse-check
and verify accept back with reserved names allowed.
"""

import logging

from commands import EXIT_OK, CommandResult, read_text, report_exit_code
from errors import UsageError
from functional_rewriter import rewrite_functional
from harness import verify_rewriting
from models import RewriteOut, VerificationReportOut
from rewriter import (
    baq_to_aq,
    rewrite_alc,
    rewrite_alc_u,
    rewrite_alch_extend_tbox,
    rewrite_alci,
    rewrite_alci_u,
)
from syntax import parse_omq

logger = logging.getLogger(__name__)

REWRITERS = {
    "alci": rewrite_alci,
    "alci+u": rewrite_alci_u,
    "alch-ext": rewrite_alch_extend_tbox,
    "alc": rewrite_alc,
    "alc+u": rewrite_alc_u,
    "functional": lambda omq: rewrite_functional(omq, universal=False),
    "functional+u": lambda omq: rewrite_functional(omq, universal=True),
    "baq": baq_to_aq,
}


def register(subparsers, common):
    parser = subparsers.add_parser("rewrite", parents=[common], help="rewrite an OMQ into an IQ")
    parser.add_argument("--verify", action="store_true",
                        help="check the rewriting on all Σ-ABoxes up to --max-ind individuals")
    parser.set_defaults(handler=handle)


def handle(args, settings) -> CommandResult:
    target = (settings.target or "alci").lower()
    rewriter = REWRITERS.get(target)
    if rewriter is None:
        raise UsageError(f"unknown rewrite target '{target}' (choose from {', '.join(REWRITERS)})")
    omq = parse_omq(read_text(args.input))
    result = rewriter(omq)
    out = RewriteOut(**result.to_dict())
    text = result.to_dict()["document"]
    exit_code = EXIT_OK

    if args.verify:
        functional_only = target.startswith("functional")
        report = verify_rewriting(omq, result.omq, settings.max_ind, settings.max_extra,
                                  settings=settings, functional_only=functional_only)
        out.verification = VerificationReportOut(**report.to_dict())
        exit_code = report_exit_code(report)
        text = f"{text.rstrip()}\n# verification\n" + "\n".join(f"# {l}" for l in report.summary().splitlines())
    return CommandResult(exit_code, out.model_dump(), text)
