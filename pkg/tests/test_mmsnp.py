"""
Tests for MMSNP sentences: parsing, evaluation and the bounded checks (mmsnp.py).
"""
import pytest

from tests.conftest import corpus_path
from deps import Settings
from errors import BudgetExceeded, ParseError, PreconditionError
from mmsnp import (
    Fact,
    body_is_acyclic,
    build_phi_acyc,
    build_phi_colored,
    check_csp_definable,
    check_du_preservation,
    complete_instance,
    disjoint_union,
    enumerate_instances,
    evaluate,
    find_coloring,
    ground,
    parse_instance,
    parse_sentence,
    render_sentence,
)


def read(name: str) -> str:
    with open(corpus_path(name), encoding="utf-8") as f:
        return f.read()


@pytest.fixture(name="two_col")
def two_col_fixture():
    """2-colourability of E."""
    return parse_sentence(read("2col.mmsnp"))


@pytest.fixture(name="mono_triangle")
def mono_triangle_fixture():
    """No monochromatic E-triangle."""
    return parse_sentence(read("mono_triangle.mmsnp"))


def instance(name: str):
    return parse_instance(read(name))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def test_parse_sentence(two_col):
    """Declarations and two rules with false heads."""
    assert two_col.schema == (("E", 2),)
    assert two_col.so_vars == ("R",)
    assert len(two_col.rules) == 2
    assert all(rule.head == () for rule in two_col.rules)


def test_render_parse_round_trip(mono_triangle):
    """Rendering gives the DSL back."""
    assert parse_sentence(render_sentence(mono_triangle)) == mono_triangle


def test_nullary_predicates_and_disjunctive_heads():
    """N() is a nullary fact; heads may list several SO atoms."""
    phi = parse_sentence("pred E/2, N/0.\nso X, Y.\nrule N(), E(x,y) -> X(x) or Y(y).")
    assert phi.nullary == ["N"]
    (rule,) = phi.rules
    assert len(rule.head) == 2


@pytest.mark.parametrize(
    "text",
    [
        "pred E/2.\nrule F(x) -> false.",
        "pred E/2.\nrule not E(x,y) -> false.",
        "pred E/2.\nso X.\nrule E(x,y) -> E(x,y).",
        "pred E/2.\nrule E(x) -> false.",
        "pred E/2.\nso E.",
    ],
)
def test_parse_errors(text):
    """Undeclared names, negated schema atoms, schema heads, arity and name clashes."""
    with pytest.raises(ParseError):
        parse_sentence(text)


def test_instance_checked_against_schema(two_col):
    """E(a) does not fit E/2."""
    with pytest.raises(ParseError):
        parse_instance("E(a).", two_col)
    assert len(parse_instance("E(a,b).\nE(b,a).", two_col)) == 2


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def test_two_colouring(two_col):
    """An edge is 2-colourable, a triangle is not."""
    colouring = find_coloring(two_col, instance("edge.inst"))
    assert colouring is not None
    assert colouring["a"] != colouring["b"]
    assert not evaluate(two_col, instance("triangle.inst"))


def test_monochromatic_triangle(mono_triangle):
    """A triangle can be split; K6 cannot (Ramsey)."""
    assert evaluate(mono_triangle, instance("edge.inst"))
    assert evaluate(mono_triangle, instance("triangle.inst"))
    assert not evaluate(mono_triangle, instance("k6.inst"))


def test_ground_detects_empty_clause():
    """A rule with a false head and no SO body fails outright."""
    phi = parse_sentence("pred E/2.\nrule E(x,y) -> false.")
    assert ground(phi, instance("edge.inst")) is None
    assert evaluate(phi, parse_instance(""))


def test_evaluation_budget(two_col):
    """A tiny node budget stops the search."""
    with pytest.raises(BudgetExceeded):
        find_coloring(two_col, instance("triangle.inst"), budget=1)


def test_disjoint_union_renames_apart():
    """Elements get _1 and _2 suffixes; nullary facts merge."""
    union = disjoint_union(parse_instance("E(a,b).\nN()."), parse_instance("E(a,b).\nN()."))
    assert union.domain == ("a_1", "a_2", "b_1", "b_2")
    assert Fact("N") in union.facts
    assert len(union) == 3


# ---------------------------------------------------------------------------
# Derived sentences
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "body, expected",
    [
        ([Fact("E", ("x", "y"))], True),
        ([Fact("E", ("x", "y")), Fact("E", ("y", "z"))], True),
        ([Fact("E", ("x", "x"))], False),
        ([Fact("E", ("x", "y")), Fact("E", ("y", "x"))], False),
        ([], True),
    ],
)
def test_body_acyclicity(body, expected):
    """Repeated elements and parallel facts are cycles."""
    assert body_is_acyclic(body) is expected


def test_acyclic_part_of_triangle_sentence_is_empty(mono_triangle):
    """Every identification of a triangle body stays cyclic."""
    assert build_phi_acyc(mono_triangle).rules == ()


def test_acyclic_part_keeps_acyclic_rules(two_col):
    """E(x,y) bodies are already acyclic."""
    assert set(build_phi_acyc(two_col).rules) == set(two_col.rules)


def test_coloured_sentence_shape():
    """Two colour variables, propagation along every predicate and guarded copies of the rules."""
    phi = parse_sentence("pred E/2, N/0.\nso X.\nrule N(), E(x,y), X(x) -> false.")
    colored = build_phi_colored(phi, n1=["N"])
    assert colored.so_vars == ("X", "C1", "C2")
    assert len(colored.rules) == 2 + 8 + 1


def test_coloured_sentence_needs_nullary_sets(two_col):
    """E is not nullary."""
    with pytest.raises(PreconditionError):
        build_phi_colored(two_col, n1=["E"])


# ---------------------------------------------------------------------------
# Bounded checks
# ---------------------------------------------------------------------------

def test_enumerate_instances():
    """One binary predicate: ∅, E(a,a), then the eight classes over two elements."""
    assert len(list(enumerate_instances((("E", 2),), 1))) == 2
    assert len(list(enumerate_instances((("E", 2),), 2))) == 10


def test_complete_instance():
    """Three elements give six irreflexive E-facts."""
    assert len(complete_instance((("E", 2),), 3)) == 6


def test_triangle_sentence_is_not_csp(mono_triangle):
    """E(a,a) satisfies the empty acyclic part but not the sentence."""
    verdict = check_csp_definable(mono_triangle, 3, Settings())
    assert verdict.is_no
    assert verdict.certificate.to_dict()["instance"] == "E(a,a)."


def test_two_colouring_holds_within_bound(two_col):
    """No counterexample up to four elements; the verdict stays bounded."""
    verdict = check_csp_definable(two_col, 4, Settings())
    assert verdict.is_unknown
    assert verdict.reason == "holds up to bound 4"


def test_two_colouring_preserved_under_disjoint_union(two_col):
    """Unions of bipartite graphs are bipartite."""
    assert check_du_preservation(two_col, 4, Settings()).is_unknown


@pytest.mark.slow
def test_two_colouring_bound_five(two_col):
    """The larger bound reports itself."""
    verdict = check_csp_definable(two_col, 5, Settings())
    assert verdict.reason == "holds up to bound 5"
