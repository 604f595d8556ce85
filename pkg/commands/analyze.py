"""
analyze: structural report on an OMQ.

Prints dialect, signature and per-disjunct properties (x-acyclicity,
connectedness, x-accessibility, f-acyclicity, core) without deciding anything.
"""

import logging

from commands import EXIT_OK, CommandResult, read_text
from models import AnalysisOut, DisjunctAnalysisOut
from query_structure import (
    build_q_acyc,
    core,
    find_f_cycle,
    find_x_cycle,
    is_connected,
    is_tree_shaped,
    unreachable_variables,
)
from syntax import IQ, as_ucq, minimal_dialect, parse_omq, render_query, render_signature, signature_of

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser("analyze", parents=[common], help="structural report on an OMQ")
    parser.add_argument("--acyc", action="store_true", help="also count the disjuncts of q_acyc")
    parser.set_defaults(handler=handle)


def _tbox_kind(tbox) -> str:
    if tbox.is_empty():
        return "empty"
    if tbox.functionality_only():
        return "functionality-only"
    return "general"


def analyze_disjunct(cq, tbox) -> DisjunctAnalysisOut:
    x_cycle = find_x_cycle(cq)
    functional = bool(tbox.functional)
    f_cycle = find_f_cycle(cq, tbox) if functional else None
    return DisjunctAnalysisOut(
        query=render_query(cq),
        variables=len(cq.variables),
        atoms=len(cq.atoms),
        x_acyclic=x_cycle is None,
        x_cycle=str(x_cycle) if x_cycle is not None else None,
        connected=is_connected(cq),
        x_accessible=not unreachable_variables(cq),
        tree_shaped=is_tree_shaped(cq),
        f_acyclic=(f_cycle is None) if functional else None,
        f_cycle=str(f_cycle) if f_cycle is not None else None,
        core=render_query(core(cq)),
    )


def handle(args, settings) -> CommandResult:
    omq = parse_omq(read_text(args.input))
    full = signature_of(omq.tbox) | signature_of(omq.query)
    out = AnalysisOut(
        dialect=omq.dialect.tag,
        minimal_dialect=minimal_dialect(omq.tbox, omq.query).tag,
        sigma=render_signature(omq.sigma),
        full_signature=full <= omq.sigma,
        tbox_kind=_tbox_kind(omq.tbox),
    )
    if not isinstance(omq.query, IQ):
        out.disjuncts = [analyze_disjunct(cq, omq.tbox) for cq in as_ucq(omq.query).disjuncts]
        if args.acyc:
            out.q_acyc_disjuncts = len(build_q_acyc(omq.query, omq.tbox).disjuncts)

    lines = [f"dialect {out.dialect} (minimal {out.minimal_dialect}), TBox {out.tbox_kind}",
             f"sigma: {out.sigma}{' (full)' if out.full_signature else ''}"]
    for d in out.disjuncts:
        flags = [
            "x-acyclic" if d.x_acyclic else f"x-cycle {d.x_cycle}",
            "connected" if d.connected else "disconnected",
            "x-accessible" if d.x_accessible else "not x-accessible",
        ]
        if d.f_acyclic is not None:
            flags.append("f-acyclic" if d.f_acyclic else f"f-cycle {d.f_cycle}")
        lines.append(f"{d.query}\n  {', '.join(flags)}\n  core: {d.core}")
    if out.q_acyc_disjuncts is not None:
        lines.append(f"q_acyc: {out.q_acyc_disjuncts} disjuncts")
    return CommandResult(EXIT_OK, out.model_dump(), "\n".join(lines))
