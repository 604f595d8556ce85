"""
Tests for cycles, reachability, contractions, cores and clusters (query_structure.py).
"""
import pytest

from errors import ClusterPropertyError, PreconditionError
from harness import gen_random_cq
from query_structure import (
    build_q_acyc,
    canonical_abox,
    clusters,
    components,
    contractions,
    core,
    cq_contained,
    dreach,
    find_cycle,
    find_f_cycle,
    find_x_cycle,
    homomorphism,
    is_connected,
    is_f_acyclic,
    is_tree_shaped,
    is_x_acyclic,
    is_x_accessible,
    minimize_ucq,
    q_con,
    restrict,
    subqueries,
    ucq_equivalent,
    unreachable_variables,
)
from syntax import EMPTY_TBOX, as_ucq, make_cq, parse, render_query


def cq(text: str):
    (only,) = parse("query", text).disjuncts
    return only


# ---------------------------------------------------------------------------
# Cycles
# ---------------------------------------------------------------------------

def test_self_loop_at_x_is_x_acyclic(self_loop):
    """r(x,x) passes through x."""
    assert is_x_acyclic(self_loop.query)
    assert find_cycle(cq("q(x) :- r(x,x).")) is not None


def test_loop_away_from_x(loop_behind_edge):
    """r(y,y) is an x-cycle of length one."""
    cycle = find_x_cycle(loop_behind_edge.query)
    assert cycle is not None
    assert cycle.variables == ["y"]
    assert str(cycle) == "r(y,y)"


def test_diamond_cycle_avoids_x(diamond):
    """The diamond x1, y1, z, y2 is reported as the x-cycle."""
    cycle = find_x_cycle(diamond.query)
    assert len(cycle) == 4
    assert set(cycle.variables) == {"x1", "y1", "y2", "z"}


def test_cycle_through_x_is_allowed(branching):
    """x, y1, y2 form a cycle, but it passes through x."""
    assert is_x_acyclic(branching.query)
    assert is_connected(branching.query)


def test_parallel_atoms_form_a_cycle():
    """Two atoms on the same pair of variables count as a cycle."""
    cycle = find_cycle(cq("q(x) :- A(x), r(y,z), s(z,y)."), {"x"})
    assert len(cycle) == 2


def test_tree_shape():
    """Paths are trees; parallel atoms or loops are not."""
    assert is_tree_shaped(cq("q(x) :- r(x,y), s(y,z)."))
    assert not is_tree_shaped(cq("q(x) :- r(x,y), s(x,y)."))
    assert not is_tree_shaped(cq("q(x) :- r(x,x)."))


def test_atom_free_query_is_acyclic_and_connected():
    """q(x) :- true. behaves like ⊤(x)."""
    empty = cq("q(x) :- true.")
    assert is_x_acyclic(empty)
    assert is_connected(empty)
    assert is_x_accessible(empty)


# ---------------------------------------------------------------------------
# Connectivity and reachability
# ---------------------------------------------------------------------------

def test_components_put_x_first():
    """The component with the answer variable comes first."""
    comps = components(cq("q(x) :- A(x), r(y,z)."))
    assert comps == [{"x"}, {"y", "z"}]


def test_dreach_follows_directed_edges(shared_parent):
    """r(y,x) does not lead from x to y."""
    (p,) = shared_parent.query.disjuncts
    assert dreach(p) == {"x"}
    assert unreachable_variables(p) == ["y"]
    assert not is_x_accessible(shared_parent.query)


def test_restrict_keeps_answer_variable():
    """Dropping x is a caller error."""
    with pytest.raises(PreconditionError):
        restrict(cq("q(x) :- r(x,y)."), {"y"})


def test_q_con_drops_boolean_components():
    """Only the component of x survives."""
    assert render_query(q_con(cq("q(x) :- A(x), r(y,z)."))) == "q(x) :- A(x)."


def test_canonical_abox_uses_variables_as_individuals():
    """Variables become individuals."""
    abox = canonical_abox(cq("q(x) :- r(x,y), A(y)."))
    assert abox.individuals == ("x", "y")
    assert len(abox) == 2


# ---------------------------------------------------------------------------
# Contractions and q_acyc
# ---------------------------------------------------------------------------

def test_contractions_of_one_edge():
    """r(x,y) contracts to itself and to r(x,x)."""
    images = [render_query(c) for c in contractions(cq("q(x) :- r(x,y)."))]
    assert images == ["q(x) :- r(x,y).", "q(x) :- r(x,x)."]


def test_q_acyc_identifies_loop_into_x(loop_behind_edge):
    """Only y = x removes the loop away from x."""
    acyc = build_q_acyc(loop_behind_edge.query, EMPTY_TBOX)
    assert [render_query(p) for p in acyc.disjuncts] == ["q(x) :- r(x,x), s(x,x)."]


def test_q_acyc_outputs_are_x_acyclic(diamond):
    """Every disjunct of q_acyc is x-acyclic."""
    acyc = build_q_acyc(diamond.query, EMPTY_TBOX)
    assert acyc.disjuncts
    assert all(is_x_acyclic(p) for p in acyc.disjuncts)


def test_q_acyc_specialises_roles():
    """With s ⊑ r the atom r(x,y) may also be read as s(x,y)."""
    tbox = parse("tbox", "role s sub r")
    acyc = build_q_acyc(parse("query", "q(x) :- r(x,y)."), tbox)
    rendered = {render_query(p) for p in acyc.disjuncts}
    assert rendered == {"q(x) :- r(x,y).", "q(x) :- s(x,y).", "q(x) :- r(x,x).", "q(x) :- s(x,x)."}


def test_q_acyc_is_contained_in_query(diamond):
    """Each contraction receives a homomorphism from the query."""
    acyc = build_q_acyc(diamond.query, EMPTY_TBOX)
    assert cq_contained(acyc, diamond.query)


# ---------------------------------------------------------------------------
# Homomorphisms, cores and subqueries
# ---------------------------------------------------------------------------

def test_longer_path_is_contained_in_shorter():
    """r(x,y), r(y,z) ⊆ r(x,y) but not the other way round."""
    long, short = cq("q(x) :- r(x,y), r(y,z)."), cq("q(x) :- r(x,y).")
    assert cq_contained(long, short)
    assert not cq_contained(short, long)


def test_homomorphism_respects_fixed_answer():
    """x must go to x."""
    source = cq("q(x) :- r(x,y).")
    target = cq("q(x) :- r(y,x).")
    assert homomorphism(source, target, {"x": "x"}) is None
    assert homomorphism(source, target) is not None


def test_core_folds_redundant_branch():
    """Two identical branches collapse into one."""
    c = core(cq("q(x) :- r(x,y), r(x,z)."))
    assert len(c.atoms) == 1
    assert ucq_equivalent(c, cq("q(x) :- r(x,y)."))


def test_core_is_idempotent():
    """core(core(q)) = core(q) on seeded random queries."""
    for seed in range(25):
        p = gen_random_cq(5, 6, seed=seed)
        once = core(p)
        assert core(once) == once
        assert ucq_equivalent(once, p)


def test_minimize_ucq_drops_contained_disjuncts():
    """A(x) ∨ (A(x) ∧ r(x,y)) minimizes to A(x)."""
    q = parse("query", "q(x) :- A(x).\nq(x) :- A(x), r(x,y).")
    assert [render_query(p) for p in minimize_ucq(q).disjuncts] == ["q(x) :- A(x)."]


def test_cq_subqueries_largest_first():
    """The CQ itself comes first, the atom-free query last."""
    p = cq("q(x) :- r(x,y), A(y).")
    subs = list(subqueries(p))
    assert len(subs) == 4
    assert subs[0] == p
    assert subs[-1].atoms == frozenset()


def test_ucq_subqueries_keep_at_least_one_disjunct():
    """Every choice is a non-empty union."""
    q = parse("query", "q(x) :- A(x).\nq(x) :- B(x).")
    subs = subqueries(q)
    assert all(s.disjuncts for s in subs)
    assert len(as_ucq(subs[0]).disjuncts) == 2


def test_subqueries_of_x_acyclic_stay_x_acyclic():
    """Dropping atoms never creates a cycle."""
    for seed in range(10):
        p = gen_random_cq(4, 5, seed=seed)
        if not is_x_acyclic(p):
            continue
        assert all(is_x_acyclic(s) for s in subqueries(p))


# ---------------------------------------------------------------------------
# f-acyclicity and clusters
# ---------------------------------------------------------------------------

def test_functional_roles_remove_loop_cycles(func_s_loop, func_r_loop, loop_behind_edge):
    """The loop is harmless once s or r is functional."""
    assert is_f_acyclic(func_s_loop.query, func_s_loop.tbox)
    assert is_f_acyclic(func_r_loop.query, func_r_loop.tbox)
    assert not is_f_acyclic(loop_behind_edge.query, EMPTY_TBOX)


def test_one_way_functional_pair_is_an_f_cycle(func_clusters):
    """s1(y,z), s2(y,z) without a functional path back from z."""
    cycle = find_f_cycle(func_clusters.query, func_clusters.tbox)
    assert cycle is not None
    assert set(cycle.variables) == {"y", "z"}


def test_closing_the_path_makes_one_cluster(func_clusters_closed):
    """With s1(z,y) the variables y and z form a single cluster."""
    assert is_f_acyclic(func_clusters_closed.query, func_clusters_closed.tbox)
    (p,) = func_clusters_closed.query.disjuncts
    decomposition = clusters(p, func_clusters_closed.tbox)
    assert decomposition.fc == frozenset({"x"})
    assert decomposition.clusters == [frozenset({"y", "z"})]
    assert decomposition.joins == {}


def test_closure_covering_every_variable_leaves_no_clusters(func_s_loop):
    """With func(s) both x and y are in the closure; the empty cluster graph is fine."""
    (p,) = func_s_loop.query.disjuncts
    decomposition = clusters(p, func_s_loop.tbox)
    assert decomposition.fc == frozenset({"x", "y"})
    assert decomposition.clusters == []
    assert decomposition.degenerate == []


def test_clusters_refuse_non_f_acyclic_query(func_clusters):
    """Two atoms joining the same pair of clusters is reported."""
    (p,) = func_clusters.query.disjuncts
    with pytest.raises(ClusterPropertyError):
        clusters(p, func_clusters.tbox)


def test_make_cq_free_variables():
    """An atom-free CQ still has its answer variable."""
    assert make_cq("x", []).variables == frozenset({"x"})
