"""
Semantic oracles: ABox consistency, IQ certain answers, empty-TBox CQ answers,
bounded UCQ certain answers and bounded OMQ containment.

Every three-valued answer is a Verdict3. A "no" carries a certificate that can
be re-checked: a countermodel (Interpretation) or a Counterexample ABox.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

from networkx.utils import UnionFind

from deps import Deadline, Settings
from errors import PreconditionError, ResourceLimitExceeded
from interpretation import Interpretation, abox_interpretation
from model_finder import find_countermodel, find_model
from query_structure import build_q_acyc, canonical_abox, homomorphism, is_x_acyclic
from syntax import (
    ABox,
    IQ,
    OMQ,
    TBox,
    UCQ,
    UNIVERSAL_ROLE,
    Forall,
    Not,
    as_ucq,
    render_abox,
    signature_of,
)
from tableau import Tableau

logger = logging.getLogger(__name__)

YES, NO, UNKNOWN = "yes", "no", "unknown"


@dataclass(frozen=True)
class Counterexample:
    """A Σ-ABox and individual on which two queries disagree."""

    abox: ABox
    individual: str
    note: str = ""

    def to_dict(self) -> dict:
        return {"abox": render_abox(self.abox), "individual": self.individual, "note": self.note}


@dataclass(frozen=True)
class Verdict3:
    kind: str
    certificate: Any = None
    bounds: dict = field(default_factory=dict)
    exact: bool = True
    reason: str = ""

    @classmethod
    def yes(cls, exact: bool = True, bounds: dict | None = None, reason: str = "") -> "Verdict3":
        return cls(YES, None, bounds or {}, exact, reason)

    @classmethod
    def no(cls, certificate, bounds: dict | None = None, reason: str = "") -> "Verdict3":
        return cls(NO, certificate, bounds or {}, True, reason)

    @classmethod
    def unknown(cls, bounds: dict | None = None, reason: str = "") -> "Verdict3":
        return cls(UNKNOWN, None, bounds or {}, False, reason)

    @property
    def is_yes(self) -> bool:
        return self.kind == YES

    @property
    def is_no(self) -> bool:
        return self.kind == NO

    @property
    def is_unknown(self) -> bool:
        return self.kind == UNKNOWN


class Reasoner:
    """Oracle front end bound to one Settings object; caches tableaux and answers."""

    def __init__(self, settings: Settings | None = None, deadline: Deadline | None = None):
        self.settings = settings or Settings()
        self.deadline = deadline or Deadline(self.settings.deadline)
        self._tableaux: dict = {}
        self._consistent: dict = {}
        self._answers: dict = {}
        self._rewritten: dict = {}

    # -- consistency -------------------------------------------------------

    def tableau(self, tbox: TBox) -> Tableau:
        if tbox not in self._tableaux:
            self._tableaux[tbox] = Tableau(tbox, self.settings.tableau_node_budget)
        return self._tableaux[tbox]

    def consistent(self, abox: ABox, tbox: TBox) -> bool:
        key = (abox, tbox)
        if key not in self._consistent:
            self._consistent[key] = self.tableau(tbox).is_consistent(abox)
        return self._consistent[key]

    def countermodel(self, abox: ABox, tbox: TBox) -> Interpretation | None:
        """A finite model of abox and tbox, if the tableau yields one."""
        return self.tableau(tbox).model(abox)

    # -- instance queries --------------------------------------------------

    def iq_certain_answer(self, tbox: TBox, iq: IQ, abox: ABox, individual: str) -> bool:
        if iq.boolean:
            return self.boolean_certain_answer(tbox, iq, abox)
        if individual not in abox.individuals:
            raise PreconditionError("individual does not occur in the ABox", individual)
        return not self.consistent(abox.add([(Not(iq.concept), individual)]), tbox)

    def boolean_certain_answer(self, tbox: TBox, iq: IQ, abox: ABox) -> bool:
        """A ⊨ ∃x C(x) iff A ∪ {(∀u.¬C)(a)} is inconsistent with the TBox."""
        anchor = abox.individuals[0] if abox.individuals else "@i0"
        return not self.consistent(abox.add([(Forall(UNIVERSAL_ROLE, Not(iq.concept)), anchor)]), tbox)

    def iq_countermodel(self, tbox: TBox, iq: IQ, abox: ABox, individual: str) -> Interpretation | None:
        """A model of ``abox`` and ``tbox`` where ``iq`` fails at ``individual`` (anywhere, if Boolean).

        The folded tableau is tried first; when it does not fold into a model,
        z3 searches for one with up to max_extra anonymous elements.
        """
        if iq.boolean:
            anchor = abox.individuals[0] if abox.individuals else "@i0"
            extended = abox.add([(Forall(UNIVERSAL_ROLE, Not(iq.concept)), anchor)])
        else:
            extended = abox.add([(Not(iq.concept), individual)])
        model = self.countermodel(extended, tbox)
        if model is not None:
            return model
        try:
            model = find_model(
                extended, tbox, self.settings.max_extra,
                deadline=self.deadline,
                assignment_budget=self.settings.hom_assignment_budget,
                seed=self.settings.seed,
            )
        except ResourceLimitExceeded as e:
            logger.warning(f"countermodel search for a refuted IQ stopped: {e}")
            return None
        if model is None or not model.is_model(extended, tbox):
            logger.warning(f"no finite countermodel with {self.settings.max_extra} extra elements")
            return None
        return model

    # -- UCQs ----------------------------------------------------------------

    def certain_answer(self, omq: OMQ, abox: ABox, individual: str, max_extra: int | None = None) -> Verdict3:
        """Three-valued answer of ``omq`` at ``individual`` (exact whenever a route allows it)."""
        if isinstance(omq.query, IQ):
            answer = self.iq_certain_answer(omq.tbox, omq.query, abox, individual)
            if answer:
                return Verdict3.yes()
            return Verdict3.no(self.iq_countermodel(omq.tbox, omq.query, abox, individual))
        return self.ucq_certain_answer_bounded(omq, abox, individual, max_extra)

    def ucq_certain_answer_bounded(self, omq: OMQ, abox: ABox, individual: str,
                                   max_extra: int | None = None) -> Verdict3:
        max_extra = self.settings.max_extra if max_extra is None else max_extra
        key = (omq.tbox, omq.query, abox, individual, max_extra)
        if key not in self._answers:
            self._answers[key] = self._ucq_answer(omq.tbox, as_ucq(omq.query), abox, individual, max_extra)
        return self._answers[key]

    def _ucq_answer(self, tbox: TBox, query: UCQ, abox: ABox, individual: str, max_extra: int) -> Verdict3:
        if not self.consistent(abox, tbox):
            return Verdict3.yes(reason="ABox inconsistent with the TBox")
        plain = all(cq.is_plain for cq in query.disjuncts) and not abox.extended
        if not query.disjuncts:
            return Verdict3.no(self.countermodel(abox, tbox), reason="query has no disjuncts")
        if tbox.is_empty() and plain:
            return self._hom_verdict(query, abox, individual, abox_interpretation(abox))
        if tbox.functionality_only() and plain:
            quotient, mapping = functional_quotient(abox, tbox)
            interp = abox_interpretation(quotient)
            interp.individuals = dict(mapping)
            return self._hom_verdict(query, quotient, mapping[individual], interp)
        if is_x_acyclic(query):
            return self._acyclic_verdict(tbox, query, abox, individual)
        lower = build_q_acyc(query, tbox)
        if lower.disjuncts and self._acyclic_verdict(tbox, lower, abox, individual).is_yes:
            return Verdict3.yes(reason="answered by an x-acyclic contraction")
        bounds = {"max_extra": max_extra}
        try:
            model = find_countermodel(
                abox, tbox, query, individual, max_extra,
                deadline=self.deadline,
                assignment_budget=self.settings.hom_assignment_budget,
                seed=self.settings.seed,
            )
        except ResourceLimitExceeded as e:
            logger.warning(f"countermodel search stopped: {e}")
            return Verdict3.unknown(bounds, reason=str(e))
        if model is not None:
            return Verdict3.no(model, bounds)
        return Verdict3.unknown(bounds, reason="no countermodel within the bound")

    def _hom_verdict(self, query: UCQ, abox: ABox, individual: str, interp: Interpretation) -> Verdict3:
        for cq in query.disjuncts:
            if homomorphism(cq, abox, {cq.answer_var: individual}) is not None:
                return Verdict3.yes()
        return Verdict3.no(interp, reason="the ABox itself is a countermodel")

    def _acyclic_verdict(self, tbox: TBox, query: UCQ, abox: ABox, individual: str) -> Verdict3:
        from rewriter import rewrite_alci_u

        key = (tbox, query)
        if key not in self._rewritten:
            omq = OMQ(tbox, signature_of(tbox) | signature_of(query), query)
            self._rewritten[key] = rewrite_alci_u(omq).omq.query
        iq = self._rewritten[key]
        if self.iq_certain_answer(tbox, iq, abox, individual):
            return Verdict3.yes()
        model = self.iq_countermodel(tbox, iq, abox, individual)
        return Verdict3.no(model, reason="no match in a model of the x-acyclic rewriting")

    def cq_answers_empty_tbox(self, query, abox: ABox) -> set[str]:
        return cq_answers_empty_tbox(query, abox)

    # -- containment ---------------------------------------------------------

    def omq_contained_bounded(self, q1: OMQ, q2: OMQ, max_ind: int | None = None,
                              max_extra: int | None = None) -> Verdict3:
        """Q1 ⊆ Q2 over Σ-ABoxes: exact via canonical ABoxes when possible, else bounded search."""
        max_ind = self.settings.max_ind if max_ind is None else max_ind
        max_extra = self.settings.max_extra if max_extra is None else max_extra
        exact = self._canonical_containment(q1, q2, max_extra)
        if exact is not None:
            return exact
        return self._enumerated_containment(q1, q2, max_ind, max_extra)

    def _canonical_containment(self, q1: OMQ, q2: OMQ, max_extra: int) -> Verdict3 | None:
        if q1.tbox != q2.tbox or isinstance(q1.query, IQ):
            return None
        ucq = as_ucq(q1.query)
        if not all(cq.is_plain and signature_of(cq) <= q1.sigma for cq in ucq.disjuncts):
            return None
        for cq in ucq.disjuncts:
            abox = canonical_abox(cq)
            if cq.answer_var not in abox.individuals:
                return None
            if not self.consistent(abox, q1.tbox):
                continue
            verdict = self.certain_answer(q2, abox, cq.answer_var, max_extra)
            if verdict.is_unknown:
                return None
            if verdict.is_no:
                return Verdict3.no(Counterexample(abox, cq.answer_var, "canonical ABox of a disjunct"))
        return Verdict3.yes(reason="canonical ABoxes of all disjuncts")

    def _enumerated_containment(self, q1: OMQ, q2: OMQ, max_ind: int, max_extra: int) -> Verdict3:
        from harness import enumerate_aboxes

        bounds = {"max_ind": max_ind, "max_extra": max_extra}
        consistent_with = q1.tbox if q1.tbox == q2.tbox else None
        complete = True
        checked = 0
        for abox in enumerate_aboxes(
            q1.sigma, max_ind,
            consistent_with=consistent_with,
            reasoner=self,
            max_assertions=self.settings.max_assertions,
            deadline=self.deadline,
        ):
            checked += 1
            for individual in abox.individuals:
                try:
                    left = self.certain_answer(q1, abox, individual, max_extra)
                    if not left.is_yes:
                        complete = complete and not left.is_unknown
                        continue
                    right = self.certain_answer(q2, abox, individual, max_extra)
                except ResourceLimitExceeded as e:
                    logger.warning(f"containment check skipped a cell: {e}")
                    complete = False
                    continue
                if right.is_no:
                    return Verdict3.no(Counterexample(abox, individual), bounds)
                if right.is_unknown:
                    complete = False
        if self.deadline.expired():
            logger.warning(f"containment search hit the deadline after {checked} ABoxes")
            return Verdict3.unknown(bounds, reason="deadline reached")
        if not complete:
            return Verdict3.unknown(bounds, reason="some answers were not decidable within the bound")
        logger.debug(f"containment holds on {checked} ABoxes")
        return Verdict3.yes(exact=False, bounds=bounds, reason="no counterexample within the bound")


def functional_quotient(abox: ABox, tbox: TBox) -> tuple[ABox, dict]:
    """Identify individuals until every functional role has at most one successor.

    With a functionality-only TBox the result is a universal model of the ABox.
    """
    groups = UnionFind(abox.individuals)
    roles = [(r, a, b) for r, a, b in abox.role_assertions]
    changed = True
    while changed:
        changed = False
        for func in sorted(tbox.functional, key=str):
            successors: dict = {}
            for r, a, b in roles:
                if r != func.name:
                    continue
                src, dst = (groups[b], groups[a]) if func.inverted else (groups[a], groups[b])
                successors.setdefault(src, set()).add(dst)
            for targets in successors.values():
                if len(targets) > 1:
                    groups.union(*targets)
                    changed = True
    mapping = {a: min(_block(groups, a)) for a in abox.individuals}
    quotient = ABox(
        frozenset((c, mapping[a]) for c, a in abox.concept_assertions),
        frozenset((r, mapping[a], mapping[b]) for r, a, b in abox.role_assertions),
    )
    return quotient, mapping


def _block(groups: UnionFind, element) -> set:
    root = groups[element]
    return {e for e in groups.parents if groups[e] == root}


def cq_answers_empty_tbox(query, abox: ABox) -> set[str]:
    """Individuals a such that some disjunct maps into the ABox with x ↦ a."""
    found = set()
    for cq in as_ucq(query).disjuncts:
        for a in abox.individuals:
            if a not in found and homomorphism(cq, abox, {cq.answer_var: a}) is not None:
                found.add(a)
    return found


# ---------------------------------------------------------------------------
# Module-level conveniences over a default Reasoner
# ---------------------------------------------------------------------------

def consistent(abox: ABox, tbox: TBox, settings: Settings | None = None) -> bool:
    return Reasoner(settings).consistent(abox, tbox)


def iq_certain_answer(omq: OMQ, abox: ABox, individual: str, settings: Settings | None = None) -> bool:
    return Reasoner(settings).iq_certain_answer(omq.tbox, omq.query, abox, individual)


def ucq_certain_answer_bounded(omq: OMQ, abox: ABox, individual: str, max_extra: int,
                               settings: Settings | None = None) -> Verdict3:
    return Reasoner(settings).ucq_certain_answer_bounded(omq, abox, individual, max_extra)


def omq_contained_bounded(q1: OMQ, q2: OMQ, max_ind: int, max_extra: int,
                          settings: Settings | None = None) -> Verdict3:
    return Reasoner(settings).omq_contained_bounded(q1, q2, max_ind, max_extra)
