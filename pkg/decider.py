"""
Rewritability decisions.

decide_empty_tbox and decide_functional are exact: they inspect cores and
subqueries. decide_with_tbox compares the OMQ with a derived x-acyclic query
and is only as good as the bounded containment search behind it, so its
verdicts carry the bounds that were used.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator

from deps import Settings
from errors import ClusterPropertyError, PreconditionError, UnsupportedTarget
from query_structure import (
    build_q_acyc,
    canonical_abox,
    clusters,
    components,
    dreach,
    find_f_cycle,
    find_x_cycle,
    is_tree_shaped,
    minimize_ucq,
    q_con,
    restrict,
    subqueries,
    ucq_equivalent,
    unreachable_variables,
)
from reasoner import Counterexample, Reasoner, Verdict3
from rewriter import (
    RewriteResult,
    build_result,
    name_supply,
    rewrite_alc,
    rewrite_alc_u,
    rewrite_alch_extend_tbox,
    rewrite_alci,
    rewrite_alci_u,
)
from functional_rewriter import rewrite_functional
from syntax import (
    ABox,
    BOTTOM,
    CQ,
    EMPTY_TBOX,
    IQ,
    OMQ,
    Concept,
    ConceptAtom,
    Dialect,
    Not,
    Top,
    Bottom,
    as_ucq,
    make_cq,
    make_ucq,
    render_concept,
    render_query,
    signature_of,
    subconcepts,
    validate_dialect,
)

logger = logging.getLogger(__name__)

REWRITABLE, NOT_REWRITABLE, UNKNOWN = "rewritable", "not-rewritable", "unknown"

_EXIT_CODES = {REWRITABLE: 0, NOT_REWRITABLE: 1, UNKNOWN: 2}


@dataclass(frozen=True)
class StructuralCertificate:
    """A minimal disjunct (core) and the property it violates."""

    core: CQ
    problem: str
    witness: str = ""

    def to_dict(self) -> dict:
        return {"core": render_query(self.core), "problem": self.problem, "witness": self.witness}


@dataclass
class Decision:
    verdict: str
    target: str
    witness: object = None  # UCQ the rewriting was built from
    rewriting: RewriteResult | None = None
    certificate: object = None  # StructuralCertificate or Counterexample
    bounds: dict = field(default_factory=dict)
    reason: str = ""
    exact: bool = True
    verification: object = None  # harness.VerificationReport

    @property
    def exit_code(self) -> int:
        return _EXIT_CODES[self.verdict]

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "target": self.target,
            "exact": self.exact,
            "reason": self.reason,
            "bounds": dict(self.bounds),
            "witness": render_query(self.witness) if self.witness is not None else None,
            "rewriting": self.rewriting.to_dict() if self.rewriting is not None else None,
            "certificate": self.certificate.to_dict() if self.certificate is not None else None,
            "verification": self.verification.to_dict() if self.verification is not None else None,
        }


def _dialect(target) -> Dialect:
    return target if isinstance(target, Dialect) else Dialect.parse(target)


def _empty_rewriting(omq: OMQ, construction: str) -> RewriteResult:
    return build_result(omq, omq.tbox, BOTTOM, name_supply(omq), {}, (), construction)


# ---------------------------------------------------------------------------
# Empty TBox
# ---------------------------------------------------------------------------

def structural_problem(cq: CQ, target: Dialect) -> tuple[str, str] | None:
    """Why ``cq`` is not a valid shape for ``target`` under the empty TBox, or None."""
    cycle = find_x_cycle(cq)
    if cycle is not None:
        return "cycle avoiding the answer variable", str(cycle)
    if not target.universal:
        extra = components(cq)[1:]
        if extra:
            return "not connected", ",".join(sorted(extra[0]))
        if not target.inverse:
            missing = unreachable_variables(cq)
            if missing:
                return "not x-accessible", ",".join(missing)
    return None


def _rewriter_for(target: Dialect):
    if target.inverse:
        return rewrite_alci_u if target.universal else rewrite_alci
    return rewrite_alc_u if target.universal else rewrite_alc


def decide_empty_tbox(query, target, sigma=None) -> Decision:
    """Exact decision for (∅, Σ_full, q): every core must be x-acyclic (plus the target's extras)."""
    dialect = _dialect(target)
    if isinstance(query, OMQ):
        sigma = query.sigma if sigma is None else sigma
        query = query.query
    minimal = minimize_ucq(query)
    for cq in minimal.disjuncts:
        problem = structural_problem(cq, dialect)
        if problem is not None:
            logger.info(f"not rewritable into {dialect.tag}: {problem[0]}")
            return Decision(
                NOT_REWRITABLE, dialect.tag, witness=minimal,
                certificate=StructuralCertificate(cq, *problem),
                reason=f"core {problem[0]}",
            )
    sigma = signature_of(minimal) if sigma is None else sigma
    omq = OMQ(EMPTY_TBOX, sigma, minimal)
    if not minimal.disjuncts:
        rewriting = _empty_rewriting(omq, "empty")
    else:
        rewriting = _rewriter_for(dialect)(omq)
    logger.info(f"rewritable into {dialect.tag} via {rewriting.construction}")
    return Decision(REWRITABLE, dialect.tag, witness=minimal, rewriting=rewriting,
                    reason="every core has the required shape")


def brute_force_empty_tbox(query, target) -> bool:
    """Rewritability by trying every subquery of every disjunct; slow reference for the core-based test."""
    dialect = _dialect(target)
    for cq in minimize_ucq(query).disjuncts:
        if not any(
            structural_problem(sub, dialect) is None and ucq_equivalent(sub, cq)
            for sub in subqueries(cq)
        ):
            return False
    return True


# ---------------------------------------------------------------------------
# Functionality-only TBoxes
# ---------------------------------------------------------------------------

def functional_problem(cq: CQ, tbox, universal: bool) -> tuple[str, str] | None:
    """Why ``cq`` cannot be rewritten by rewrite_functional, or None."""
    cycle = find_f_cycle(cq, tbox)
    if cycle is not None:
        return "f-cycle", str(cycle)
    parts = components(cq)
    if len(parts) > 1:
        if not universal:
            return "not connected", ",".join(sorted(parts[1]))
        for comp in parts[1:]:
            sub = make_cq(min(comp), (a for a in cq.atoms if set(a.variables) <= comp))
            if not is_tree_shaped(sub):
                return "Boolean component is not tree-shaped", ",".join(sorted(comp))
    try:
        clusters(restrict(cq, parts[0]), tbox)
    except ClusterPropertyError as e:
        return "cluster property fails", e.witness or ""
    return None


def _equivalent(p1: CQ, p2: CQ, omq: OMQ, reasoner: Reasoner) -> Verdict3:
    if ucq_equivalent(p1, p2):
        return Verdict3.yes(reason="homomorphically equivalent")
    left = reasoner.omq_contained_bounded(omq.with_query(as_ucq(p1)), omq.with_query(as_ucq(p2)))
    if not left.is_yes:
        return left
    right = reasoner.omq_contained_bounded(omq.with_query(as_ucq(p2)), omq.with_query(as_ucq(p1)))
    if not right.is_yes:
        return right
    return Verdict3.yes(exact=left.exact and right.exact, reason="equivalent under the TBox")


def decide_functional(omq: OMQ, target="alci", equivalence_bound: int | None = None,
                      reasoner: Reasoner | None = None) -> Decision:
    """Exact decision for TBoxes made of functionality assertions over the full signature.

    Every minimal disjunct must be equivalent to one of its subqueries that
    rewrite_functional accepts; candidates are tried largest first.
    """
    dialect = _dialect(target)
    reasoner = reasoner or Reasoner()
    if not omq.tbox.functionality_only():
        raise UnsupportedTarget(
            "only functionality assertions are supported here; "
            "IQ-rewritability under ALCF TBoxes with concept inclusions is undecidable"
        )
    if not dialect.inverse:
        raise UnsupportedTarget("functional rewritings need inverse roles in the target")
    if isinstance(omq.query, IQ):
        raise PreconditionError("query is already an instance query")
    if not signature_of(omq) <= omq.sigma:
        raise UnsupportedTarget("functional decisions need the full signature")
    bound = reasoner.settings.equivalence_bound if equivalence_bound is None else equivalence_bound
    tbox = omq.tbox
    minimal = minimize_ucq(omq.query)
    chosen: list[CQ] = []
    exact = True
    for cq in minimal.disjuncts:
        found = None
        shape_only = True
        for sub in subqueries(cq):
            problem = functional_problem(sub, tbox, dialect.universal)
            if problem is not None:
                if problem[0] != "Boolean component is not tree-shaped":
                    shape_only = False
                continue
            verdict = _equivalent(sub, cq, omq, reasoner)
            if verdict.is_yes:
                found = sub
                exact = exact and verdict.exact
                break
        if found is None:
            if dialect.universal and shape_only:
                return Decision(UNKNOWN, dialect.tag, witness=minimal, exact=False,
                                reason="only candidates with non-tree Boolean components exist")
            problem = functional_problem(cq, tbox, dialect.universal) or ("no suitable subquery", "")
            logger.info(f"not rewritable under functionality: {problem[0]}")
            return Decision(NOT_REWRITABLE, dialect.tag, witness=minimal,
                            certificate=StructuralCertificate(cq, *problem),
                            reason="no f-acyclic equivalent subquery")
        chosen.append(found)
    witness = make_ucq(chosen, minimal.answer_var)
    target_omq = omq.with_query(witness)
    if witness.disjuncts:
        rewriting = rewrite_functional(target_omq, universal=dialect.universal)
    else:
        rewriting = _empty_rewriting(target_omq, "empty")

    from harness import verify_rewriting

    report = verify_rewriting(omq, rewriting.omq, bound, settings=reasoner.settings, functional_only=True)
    bounds = {"equivalence_bound": bound}
    if not report.passed:
        logger.warning(f"functional rewriting disagrees with the query on {len(report.discrepancies)} ABoxes")
        return Decision(UNKNOWN, dialect.tag, witness=witness, rewriting=rewriting, bounds=bounds,
                        exact=False, verification=report,
                        reason="equivalent subquery found but the rewriting failed confirmation")
    logger.info(f"rewritable under functionality via {rewriting.construction}")
    return Decision(REWRITABLE, dialect.tag, witness=witness, rewriting=rewriting, bounds=bounds,
                    exact=exact, verification=report, reason="f-acyclic equivalent subquery")


# ---------------------------------------------------------------------------
# TBoxes with concept inclusions
# ---------------------------------------------------------------------------

def tbox_subconcepts(tbox) -> list[Concept]:
    """Subconcepts of the TBox that are worth deciding on (⊤ and ⊥ excluded)."""
    found = set()
    for c, d in tbox.concept_inclusions:
        found |= subconcepts(c) | subconcepts(d)
    found = {c for c in found if not isinstance(c, (Top, Bottom))}
    return sorted(found, key=render_concept)


def build_q_deco(omq: OMQ, reasoner: Reasoner | None = None) -> Iterator[CQ]:
    """Decorations of the disjuncts of q_acyc by T-types, restricted to dreach.

    Every directed-reachable variable gets C or ¬C for each subconcept C of
    the TBox; decorations whose eABox is inconsistent with the TBox are dropped.
    """
    reasoner = reasoner or Reasoner()
    tbox = omq.tbox
    concepts = tbox_subconcepts(tbox)
    seen: set = set()
    for cq in build_q_acyc(omq.query, tbox).disjuncts:
        reach = sorted(dreach(cq))
        base = canonical_abox(cq)
        types = [
            frozenset(c if keep else Not(c) for c, keep in zip(concepts, signs))
            for signs in product((True, False), repeat=len(concepts))
        ]

        def extend(i: int, abox: ABox, decoration: list):
            if reasoner.deadline.expired():
                return
            if i == len(reach):
                yield decoration
                return
            y = reach[i]
            for t in types:
                extended = abox.add([(c, y) for c in t])
                if reasoner.consistent(extended, tbox):
                    yield from extend(i + 1, extended, decoration + [(y, t)])

        if not reasoner.consistent(base, tbox):
            continue
        for decoration in extend(0, base, []):
            atoms = list(restrict(cq, reach).atoms)
            atoms += [ConceptAtom(c, y) for y, t in decoration for c in t]
            decorated = make_cq(cq.answer_var, atoms)
            if decorated.atoms in seen:
                continue
            seen.add(decorated.atoms)
            yield decorated


def check_empty(omq: OMQ, max_ind: int | None = None, max_extra: int | None = None,
                reasoner: Reasoner | None = None) -> Verdict3:
    """Yes when the OMQ has no answer on any Σ-ABox; only ever proved for Σ = ∅.

    A No carries the Σ-ABox and individual that were answered.
    """
    reasoner = reasoner or Reasoner()
    max_ind = reasoner.settings.max_ind if max_ind is None else max_ind
    max_extra = reasoner.settings.max_extra if max_extra is None else max_extra
    bounds = {"max_ind": max_ind, "max_extra": max_extra}
    if omq.sigma.is_empty():
        return Verdict3.yes(reason="the only Σ-ABox is empty")
    if not isinstance(omq.query, IQ):
        for cq in as_ucq(omq.query).disjuncts:
            if not cq.is_plain or not signature_of(cq) <= omq.sigma:
                continue
            abox = canonical_abox(cq)
            x = cq.answer_var
            if x not in abox.individuals or not reasoner.consistent(abox, omq.tbox):
                continue
            if reasoner.certain_answer(omq, abox, x, max_extra).is_yes:
                return Verdict3.no(Counterexample(abox, x, "canonical ABox of a disjunct"), bounds)

    from harness import enumerate_aboxes

    for abox in enumerate_aboxes(omq.sigma, max_ind, consistent_with=omq.tbox, reasoner=reasoner,
                                 max_assertions=reasoner.settings.max_assertions,
                                 deadline=reasoner.deadline):
        for individual in abox.individuals:
            if reasoner.certain_answer(omq, abox, individual, max_extra).is_yes:
                return Verdict3.no(Counterexample(abox, individual, "answered Σ-ABox"), bounds)
    return Verdict3.unknown(bounds, reason="no answered Σ-ABox within the bound")


def _comparison(omq: OMQ, dialect: Dialect, extend_tbox: bool, reasoner: Reasoner):
    """Comparison query, its name, the rewriter to apply to it and whether Q_cmp ⊆ Q must be checked."""
    full = signature_of(omq) <= omq.sigma
    if dialect.inverse:
        if dialect.universal:
            return build_q_acyc(omq.query, omq.tbox), "q_acyc", rewrite_alci_u, False
        return q_con(build_q_acyc(omq.query, omq.tbox)), "q_con_acyc", rewrite_alci, True
    if dialect.universal:
        return build_q_acyc(omq.query, omq.tbox), "q_acyc", rewrite_alc_u, False
    if extend_tbox:
        return q_con(build_q_acyc(omq.query, omq.tbox)), "q_con_acyc", rewrite_alch_extend_tbox, True
    if not full:
        raise UnsupportedTarget(
            f"{dialect.tag} without TBox extension is only characterised for the full signature"
        )
    answer_var = as_ucq(omq.query).answer_var
    return make_ucq(build_q_deco(omq, reasoner), answer_var), "q_deco_acyc", rewrite_alc, True


def decide_with_tbox(omq: OMQ, target, max_ind: int | None = None, max_extra: int | None = None,
                     extend_tbox: bool = True, reasoner: Reasoner | None = None) -> Decision:
    """Bounded decision for ALC(H)(I) TBoxes by comparison with an x-acyclic query."""
    dialect = _dialect(target)
    reasoner = reasoner or Reasoner()
    max_ind = reasoner.settings.max_ind if max_ind is None else max_ind
    max_extra = reasoner.settings.max_extra if max_extra is None else max_extra
    bounds = {"max_ind": max_ind, "max_extra": max_extra}
    if isinstance(omq.query, IQ):
        raise PreconditionError("query is already an instance query")
    violations = validate_dialect(omq.tbox, dialect)
    if violations:
        raise UnsupportedTarget(f"the TBox uses {', '.join(violations)}, which {dialect.tag} forbids")

    empty = check_empty(omq, max_ind, max_extra, reasoner)
    if empty.is_yes:
        rewriting = _empty_rewriting(omq, "empty")
        return Decision(REWRITABLE, dialect.tag, witness=make_ucq([], as_ucq(omq.query).answer_var),
                        rewriting=rewriting, bounds=bounds, reason="the OMQ is empty")

    cmp_query, name, rewriter, check_back = _comparison(omq, dialect, extend_tbox, reasoner)
    cmp_query = minimize_ucq(cmp_query)
    cmp_omq = omq.with_query(cmp_query)
    logger.debug(f"{name} has {len(cmp_query.disjuncts)} disjuncts after minimisation")

    forward = reasoner.omq_contained_bounded(omq, cmp_omq, max_ind, max_extra)
    verdicts = [forward]
    if forward.is_yes and check_back:
        verdicts.append(reasoner.omq_contained_bounded(cmp_omq, omq, max_ind, max_extra))
    for direction, verdict in zip(("Q ⊆ " + name, name + " ⊆ Q"), verdicts):
        if verdict.is_no:
            logger.info(f"not rewritable into {dialect.tag}: {direction} fails")
            return Decision(NOT_REWRITABLE, dialect.tag, witness=cmp_query, certificate=verdict.certificate,
                            bounds=bounds, reason=f"{direction} fails")
        if verdict.is_unknown:
            logger.warning(f"{direction} undecided within the bounds: {verdict.reason}")
            return Decision(UNKNOWN, dialect.tag, witness=cmp_query, bounds=bounds, exact=False,
                            reason=f"{direction} undecided: {verdict.reason}")

    if cmp_query.disjuncts:
        rewriting = rewriter(cmp_omq)
    else:
        rewriting = _empty_rewriting(cmp_omq, "empty")
    exact = all(v.exact for v in verdicts)
    logger.info(f"rewritable into {dialect.tag} via {rewriting.construction} (exact={exact})")
    return Decision(REWRITABLE, dialect.tag, witness=cmp_query, rewriting=rewriting, bounds=bounds,
                    exact=exact, reason=f"Q is equivalent to {name}")


# ---------------------------------------------------------------------------
# Dispatcher
# ---------------------------------------------------------------------------

def decide(omq: OMQ, target, settings: Settings | None = None, extend_tbox: bool = True,
           verify: bool = False, reasoner: Reasoner | None = None) -> Decision:
    """Pick the procedure from the shape of the TBox and run it."""
    settings = settings or Settings()
    reasoner = reasoner or Reasoner(settings)
    dialect = _dialect(target)
    full = signature_of(omq.query) <= omq.sigma
    if omq.tbox.is_empty() and full:
        decision = decide_empty_tbox(omq, dialect)
    elif omq.tbox.functionality_only() and not omq.tbox.is_empty():
        decision = decide_functional(omq, dialect, settings.equivalence_bound, reasoner)
    else:
        decision = decide_with_tbox(omq, dialect, settings.max_ind, settings.max_extra, extend_tbox, reasoner)
    if verify and decision.rewriting is not None and decision.verification is None:
        from harness import verify_rewriting

        report = verify_rewriting(omq, decision.rewriting.omq, settings.max_ind, settings.max_extra,
                                  settings=settings, functional_only=not omq.tbox.is_empty()
                                  and omq.tbox.functionality_only())
        decision.verification = report
        if not report.passed and decision.verdict == REWRITABLE:
            decision.verdict = UNKNOWN
            decision.exact = False
            decision.reason = "the rewriting failed verification"
    return decision
