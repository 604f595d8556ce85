"""
MMSNP commands: mmsnp-eval, mmsnp-acyc, mmsnp-colored and mmsnp-check.
"""

import logging

from commands import EXIT_NEGATIVE, EXIT_OK, CommandResult, bounds_out, read_text, verdict_exit_code
from errors import UsageError
from mmsnp import (
    build_phi_acyc,
    build_phi_colored,
    check_csp_definable,
    check_du_preservation,
    find_coloring,
    parse_instance,
    parse_sentence,
    render_sentence,
)
from models import MmsnpEvalOut, MmsnpVerdictOut, SentenceOut

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser("mmsnp-eval", parents=[common], help="evaluate a sentence on an instance")
    parser.add_argument("--instance", required=True, help="instance file")
    parser.set_defaults(handler=handle_eval)

    parser = subparsers.add_parser("mmsnp-acyc", parents=[common], help="print the acyclic part of a sentence")
    parser.set_defaults(handler=handle_acyc)

    parser = subparsers.add_parser("mmsnp-colored", parents=[common],
                                   help="print the coloured disjoint-union sentence")
    parser.add_argument("--n1", default="", help="comma-separated nullary predicates true in the first part")
    parser.add_argument("--n2", default="", help="comma-separated nullary predicates true in the second part")
    parser.set_defaults(handler=handle_colored)

    parser = subparsers.add_parser("mmsnp-check", parents=[common], help="bounded CSP-definability check")
    parser.add_argument("--max-dom", type=int, default=5, help="largest instance domain searched")
    parser.add_argument("--preservation-only", action="store_true",
                        help="only check preservation under disjoint union")
    parser.set_defaults(handler=handle_check)


def _sentence_result(phi) -> CommandResult:
    text = render_sentence(phi)
    return CommandResult(EXIT_OK, SentenceOut(sentence=text, rules=len(phi.rules)).model_dump(), text.rstrip())


def handle_eval(args, settings) -> CommandResult:
    phi = parse_sentence(read_text(args.input))
    instance = parse_instance(read_text(args.instance), phi)
    coloring = find_coloring(phi, instance, settings.mmsnp_eval_budget)
    out = MmsnpEvalOut(holds=coloring is not None, domain_size=len(instance.domain), coloring=coloring)
    if coloring is None:
        return CommandResult(EXIT_NEGATIVE, out.model_dump(), "false", "red")
    lines = ["true"] + [f"  {e}: {', '.join(c) or '-'}" for e, c in coloring.items()]
    return CommandResult(EXIT_OK, out.model_dump(), "\n".join(lines), "green")


def handle_acyc(args, settings) -> CommandResult:
    return _sentence_result(build_phi_acyc(parse_sentence(read_text(args.input))))


def _names(value: str, phi) -> set[str]:
    names = {n.strip() for n in value.split(",") if n.strip()}
    unknown = names - set(phi.nullary)
    if unknown:
        raise UsageError(f"not nullary predicates of the sentence: {', '.join(sorted(unknown))}")
    return names


def handle_colored(args, settings) -> CommandResult:
    phi = parse_sentence(read_text(args.input))
    return _sentence_result(build_phi_colored(phi, _names(args.n1, phi), _names(args.n2, phi)))


def handle_check(args, settings) -> CommandResult:
    phi = parse_sentence(read_text(args.input))
    check = check_du_preservation if args.preservation_only else check_csp_definable
    verdict = check(phi, args.max_dom, settings)
    certificate = verdict.certificate.to_dict() if verdict.certificate is not None else None
    out = MmsnpVerdictOut(kind=verdict.kind, reason=verdict.reason, bounds=bounds_out(verdict.bounds),
                          certificate=certificate)
    lines = [verdict.kind + (f" ({verdict.reason})" if verdict.reason else "")]
    if certificate:
        lines.append(f"  {certificate['note']} ({certificate['domain_size']} elements)")
        lines.extend(f"  {l}" for l in certificate["instance"].splitlines())
    styles = {"yes": "green", "no": "red"}
    return CommandResult(verdict_exit_code(verdict.kind), out.model_dump(), "\n".join(lines),
                         styles.get(verdict.kind, "yellow"))
