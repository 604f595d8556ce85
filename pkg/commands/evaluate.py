"""
eval: certain answers of an OMQ over an ABox.

The ABox comes from --abox FILE or from an [abox] section of the input
document. An ABox inconsistent with the TBox exits with 1.
"""

import logging

from commands import EXIT_NEGATIVE, EXIT_OK, EXIT_UNKNOWN, CommandResult, abox_out, read_text, verdict_out
from errors import UsageError
from harness import answers
from models import AnswersOut
from reasoner import Reasoner
from syntax import parse_abox, parse_document, parse_omq

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser("eval", parents=[common], help="certain answers over an ABox")
    parser.add_argument("--abox", help="ABox file (default: the [abox] section of --in)")
    parser.add_argument("--individual", help="answer only for this individual")
    parser.set_defaults(handler=handle)


def handle(args, settings) -> CommandResult:
    text = read_text(args.input)
    omq = parse_omq(text)
    if args.abox:
        abox = parse_abox(read_text(args.abox))
    else:
        abox = parse_document(text).get("abox")
        if abox is None:
            raise UsageError("no ABox: pass --abox FILE or add an [abox] section")

    reasoner = Reasoner(settings)
    if not reasoner.consistent(abox, omq.tbox):
        out = AnswersOut(consistent=False, abox=abox_out(abox))
        return CommandResult(EXIT_NEGATIVE, out.model_dump(), "ABox is inconsistent with the TBox", "red")

    if args.individual is not None:
        if args.individual not in abox.individuals:
            raise UsageError(f"individual {args.individual} does not occur in the ABox")
        table = {args.individual: reasoner.certain_answer(omq, abox, args.individual, settings.max_extra)}
    else:
        table = answers(omq, abox, reasoner, settings.max_extra)

    out = AnswersOut(consistent=True, abox=abox_out(abox),
                     answers={a: verdict_out(v) for a, v in table.items()})
    lines = [f"{a}: {v.kind}" + (f" ({v.reason})" if v.reason else "") for a, v in sorted(table.items())]
    certain = sorted(a for a, v in table.items() if v.is_yes)
    lines.insert(0, f"certain answers: {', '.join(certain) or '(none)'}")
    undecided = any(v.is_unknown for v in table.values())
    return CommandResult(EXIT_UNKNOWN if undecided else EXIT_OK, out.model_dump(), "\n".join(lines))
