"""
Tests for the rewriting of f-acyclic queries under functional roles (functional_rewriter.py).
"""
import pytest

from deps import Settings
from errors import PreconditionError
from functional_rewriter import rewrite_functional, spanning_tree
from harness import verify_rewriting
from query_structure import clusters, is_tree_shaped
from syntax import parse_abox, parse_omq, render_concept
from tests.conftest import load_omq


def test_loop_behind_functional_edge(func_s_loop):
    """func(s) pulls y into the functional closure of x."""
    result = rewrite_functional(func_s_loop)
    assert result.fresh_concepts == ("@a0", "@a1")
    assert result.construction == "functional"
    assert result.omq.tbox == func_s_loop.tbox
    assert "exists r. @a1" in render_concept(result.omq.query.concept)


def test_loop_behind_functional_edge_answers(reasoner, func_s_loop):
    """The rewriting agrees with the query on a loop and on a plain edge."""
    out = rewrite_functional(func_s_loop).omq
    loop = parse_abox("s(a,b)\nr(b,b)")
    edge = parse_abox("s(a,b)\nr(b,c)")
    assert reasoner.iq_certain_answer(out.tbox, out.query, loop, "a")
    assert not reasoner.iq_certain_answer(out.tbox, out.query, edge, "a")


def test_functional_loop_answers(reasoner, func_r_loop):
    """With func(r) a second r-successor of b is merged into the loop."""
    out = rewrite_functional(func_r_loop).omq
    assert out.tbox == func_r_loop.tbox
    assert reasoner.iq_certain_answer(out.tbox, out.query, parse_abox("s(a,b)\nr(b,b)"), "a")
    assert reasoner.iq_certain_answer(out.tbox, out.query, parse_abox("s(a,b)\nr(b,c)\nr(b,b)"), "a")
    assert not reasoner.iq_certain_answer(out.tbox, out.query, parse_abox("s(a,b)\nr(b,c)"), "a")


def test_closed_cluster_uses_colours(func_clusters_closed):
    """Two dropped atoms inside the cluster {y, z} need three colours each."""
    result = rewrite_functional(func_clusters_closed)
    marks = [n for n in result.fresh_concepts if n.startswith("@a")]
    colours = [n for n in result.fresh_concepts if n.startswith("@c")]
    assert len(marks) == 3
    assert len(colours) == 6


def test_spanning_tree_covers_every_variable(func_clusters_closed):
    """p′ is tree-shaped and keeps all variables."""
    (p,) = func_clusters_closed.query.disjuncts
    tree = spanning_tree(p, func_clusters_closed.tbox, clusters(p, func_clusters_closed.tbox))
    assert is_tree_shaped(tree)
    assert tree.variables == p.variables
    assert len(tree.role_atoms) == 2


def test_rejects_f_cycle(func_clusters):
    """s1(y,z), s2(y,z) is a cycle no functional path closes."""
    with pytest.raises(PreconditionError):
        rewrite_functional(func_clusters)


def test_rejects_iq_input():
    """Instance queries are passed through by callers, not rewritten."""
    with pytest.raises(PreconditionError):
        rewrite_functional(parse_omq("[tbox]\nfunc(r)\n[query]\nq(x) := A.\n"))


def test_disconnected_query_needs_universal_role():
    """The Boolean component r(y,z) becomes ∃u.∃r.⊤ in +u mode only."""
    omq = parse_omq("[tbox]\nfunc(s)\n[query]\nq(x) :- s(x,x1), r(y,z).\n")
    with pytest.raises(PreconditionError):
        rewrite_functional(omq)
    result = rewrite_functional(omq, universal=True)
    assert result.construction == "functional+u"
    assert "exists u. exists r. top" in render_concept(result.omq.query.concept)


def test_cyclic_boolean_component_is_rejected():
    """A Boolean component must be acyclic in +u mode."""
    omq = parse_omq("[tbox]\nfunc(s)\n[query]\nq(x) :- s(x,x1), r(y,y).\n")
    with pytest.raises(PreconditionError):
        rewrite_functional(omq, universal=True)


# ---------------------------------------------------------------------------
# Agreement with the query on functional ABoxes
# ---------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.parametrize(
    "document, max_ind, max_assertions",
    [
        ("func_s_loop.omq", 3, None),
        ("func_r_loop.omq", 3, None),
        ("func_s_loop.omq", 4, 5),
        ("func_r_loop.omq", 4, 5),
        ("func_clusters_closed.omq", 4, 4),
    ],
)
def test_functional_rewriting_agrees_on_functional_aboxes(document, max_ind, max_assertions):
    """No discrepancy on functional Σ-ABoxes; the four-individual grids are capped by assertions."""
    omq = load_omq(document)
    settings = Settings(max_extra=2, max_assertions=max_assertions, jobs=2)
    report = verify_rewriting(omq, rewrite_functional(omq).omq, max_ind, settings=settings, functional_only=True)
    assert report.passed, report.summary()
    assert report.complete
