"""
Tests for the ALCI, ALCH and ALC rewritings and the Boolean-to-atomic reduction (rewriter.py).
"""
import pytest

from deps import Settings
from errors import PreconditionError
from harness import verify_rewriting
from rewriter import (
    baq_to_aq,
    rewrite_alc,
    rewrite_alc_u,
    rewrite_alch_extend_tbox,
    rewrite_alci,
    rewrite_alci_u,
    tree_concept,
    untangle,
)
from syntax import EMPTY_TBOX, IQ, OMQ, Forall, Signature, parse, parse_abox, parse_omq, render_concept, uses_inverse
from tests.conftest import load_omq


def cq(text: str):
    (only,) = parse("query", text).disjuncts
    return only


def concept_of(result) -> str:
    return render_concept(result.omq.query.concept)


# ---------------------------------------------------------------------------
# Tree concepts and untangling
# ---------------------------------------------------------------------------

def test_tree_concept_reads_inverse_edges():
    """r(y,x) seen from x is an r⁻ step."""
    c = tree_concept(cq("q(x) :- r(y,x), A(y)."), "x")
    assert render_concept(c) == "exists r-. A"


def test_tree_concept_universal_reading():
    """step=Forall reads every edge universally."""
    c = tree_concept(cq("q(x) :- r(x,y), B(y)."), "x", Forall)
    assert render_concept(c) == "forall r. B"


def test_tree_concept_rejects_loops():
    """A self-loop has no tree reading."""
    with pytest.raises(PreconditionError):
        tree_concept(cq("q(x) :- r(x,x)."), "x")


def test_untangle_cuts_self_loop():
    """r(x,x) becomes r(x,x_1) with the marker on x_1."""
    tree = untangle(cq("q(x) :- r(x,x)."), "P")
    assert str(tree) == "q(x) :- P(x_1), r(x,x_1)."


def test_untangle_keeps_tree_atoms():
    """Atoms off every cycle are left alone."""
    p = cq("q(x) :- r(x,y), s(y,z).")
    assert untangle(p, "P") == p


# ---------------------------------------------------------------------------
# ALCI
# ---------------------------------------------------------------------------

def test_alci_self_loop(self_loop):
    """r(x,x) is rewritten into P → ∃r.P."""
    result = rewrite_alci(self_loop)
    assert concept_of(result) == "(exists r. @p0 or not @p0)"
    assert result.fresh_concepts == ("@p0",)
    assert result.omq.tbox == self_loop.tbox
    assert result.omq.sigma == self_loop.sigma


def test_alci_self_loop_answers(reasoner, self_loop):
    """The rewriting answers a on r(a,a) and rejects a on r(a,b)."""
    iq = rewrite_alci(self_loop).omq.query
    assert reasoner.iq_certain_answer(EMPTY_TBOX, iq, parse_abox("r(a,a)"), "a")
    assert not reasoner.iq_certain_answer(EMPTY_TBOX, iq, parse_abox("r(a,b)"), "a")


def test_alci_shared_parent(shared_parent):
    """The cycle through x is cut at s(y,x), leaving ∃r⁻.∃s.P."""
    result = rewrite_alci(shared_parent)
    assert concept_of(result) == "(exists r-. exists s. @p0 or not @p0)"
    assert result.omq.dialect.tag == "alci"
    assert result.construction == "alci"


def test_alci_rejects_x_cycle(loop_behind_edge):
    """r(y,y) is a cycle away from x."""
    with pytest.raises(PreconditionError):
        rewrite_alci(loop_behind_edge)


def test_alci_rejects_disconnected_query():
    """A Boolean component needs the universal role."""
    omq = parse_omq("[query]\nq(x) :- A(x), r(y,z).\n")
    with pytest.raises(PreconditionError):
        rewrite_alci(omq)


def test_alci_u_adds_boolean_component():
    """The component {y, z} becomes ∃u.∃r.⊤."""
    omq = parse_omq("[query]\nq(x) :- A(x), r(y,z).\n")
    result = rewrite_alci_u(omq)
    assert "exists u. exists r. top" in concept_of(result)
    assert result.omq.dialect.tag.endswith("+u")


def test_iq_input_is_rejected():
    """An instance query is already rewritten."""
    omq = parse_omq("[query]\nq(x) := A.\n")
    with pytest.raises(PreconditionError):
        rewrite_alci(omq)


def test_rewriting_records_trees(branching):
    """One tree-shaped intermediate query per disjunct."""
    result = rewrite_alci(branching)
    assert len(result.trees) == 1
    assert result.to_dict()["construction"] == "alci"
    assert "@p0" in result.to_dict()["provenance"]


# ---------------------------------------------------------------------------
# Removing inverse roles
# ---------------------------------------------------------------------------

def test_alch_extension_moves_inverse_into_tbox(shared_parent):
    """∃r⁻.∃s.P is replaced by a fresh name defined through ∃s.P ⊑ ∀r.P_D."""
    result = rewrite_alch_extend_tbox(shared_parent)
    assert concept_of(result) == "(@pd0 or not @p0)"
    ((lhs, rhs),) = result.omq.tbox.concept_inclusions
    assert render_concept(lhs) == "exists s. @p0"
    assert render_concept(rhs) == "forall r. @pd0"
    assert result.fresh_concepts == ("@p0", "@pd0")


def test_alc_needs_x_accessibility(shared_parent):
    """y cannot be reached from x along directed edges."""
    with pytest.raises(PreconditionError):
        rewrite_alc(shared_parent)


def test_alc_branching_is_inverse_free(branching):
    """Both inverse steps move into the premise."""
    result = rewrite_alc(branching)
    concept = result.omq.query.concept
    assert not uses_inverse(concept)
    assert result.fresh_concepts == ("@p0", "@pd0", "@pd1")
    assert "exists r. @pd1" in render_concept(concept)
    assert result.omq.tbox == branching.tbox
    assert result.omq.dialect.tag == "alc"


def test_alc_u_drops_x_accessibility(shared_parent):
    """With ∀u guards the inverse step needs no anchor."""
    result = rewrite_alc_u(shared_parent)
    concept = result.omq.query.concept
    assert not uses_inverse(concept)
    assert "forall u." in render_concept(concept)
    assert result.construction == "alc+u"


# ---------------------------------------------------------------------------
# Boolean queries
# ---------------------------------------------------------------------------

def test_baq_to_aq_axioms():
    """C ⊑ M plus two propagation axioms per TBox role."""
    omq = OMQ(parse("tbox", "B sub exists s. A"), Signature(), parse("query", "q() := exists r. A."))
    result = baq_to_aq(omq)
    marker = result.fresh_concepts[0]
    assert isinstance(result.omq.query, IQ)
    assert render_concept(result.omq.query.concept) == marker
    assert len(result.omq.tbox.concept_inclusions) == 1 + 3


def test_baq_to_aq_marks_the_witness(reasoner):
    """M holds at the element satisfying the Boolean concept."""
    omq = OMQ(parse("tbox", "B sub exists s. A"), Signature(), parse("query", "q() := exists r. A."))
    out = baq_to_aq(omq).omq
    abox = parse_abox("s(a,b)\nr(b,c)\nA(c)")
    assert reasoner.iq_certain_answer(out.tbox, out.query, abox, "b")
    assert reasoner.iq_certain_answer(out.tbox, out.query, abox, "a")


def test_baq_to_aq_needs_iq(self_loop):
    """A UCQ is not a Boolean atomic query."""
    with pytest.raises(PreconditionError):
        baq_to_aq(self_loop)


# ---------------------------------------------------------------------------
# Agreement with the query on every three-individual ABox
# ---------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.parametrize(
    "document, construction, max_assertions",
    [
        ("self_loop.omq", rewrite_alci, None),
        ("shared_parent.omq", rewrite_alci, None),
        ("shared_parent.omq", rewrite_alch_extend_tbox, None),
        ("branching.omq", rewrite_alci, 4),
        ("branching.omq", rewrite_alc, 4),
    ],
)
def test_rewriting_agrees_on_three_individuals(document, construction, max_assertions):
    """No discrepancy and no unknown cell; four roles over three individuals are capped at four assertions."""
    omq = load_omq(document)
    settings = Settings(max_extra=2, max_assertions=max_assertions, jobs=2)
    report = verify_rewriting(omq, construction(omq).omq, 3, settings=settings)
    assert report.passed, report.summary()
    assert report.complete
    assert report.aboxes > 10
