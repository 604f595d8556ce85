"""
Constructive IQ rewritings of x-acyclic UCQs.

rewrite_alci / rewrite_alci_u untangle every disjunct into a tree by cutting
cycle atoms at the answer variable and marking the cut ends with one shared
fresh concept P. The ALCH and ALC variants then remove inverse roles, either by
extending the TBox or by moving the inverse parts into a premise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import networkx as nx

from errors import PreconditionError
from query_structure import (
    components,
    find_cycle,
    is_tree_shaped,
    restrict,
    unreachable_variables,
)
from syntax import (
    CQ,
    IQ,
    OMQ,
    TOP,
    UNIVERSAL_ROLE,
    And,
    Concept,
    ConceptAtom,
    Exists,
    Forall,
    Name,
    NameSupply,
    Not,
    Or,
    Role,
    RoleAtom,
    as_ucq,
    atom_key,
    implies,
    make_and,
    make_cq,
    make_or,
    minimal_dialect,
    render_concept,
    replace_subconcept,
    role_atom,
    signature_of,
    uses_inverse,
)

logger = logging.getLogger(__name__)


@dataclass
class RewriteResult:
    omq: OMQ
    fresh_concepts: tuple = ()
    provenance: dict = field(default_factory=dict)
    trees: tuple = ()  # tree-shaped intermediate CQ per disjunct
    construction: str = ""

    def to_dict(self) -> dict:
        from syntax import render_omq

        return {
            "construction": self.construction,
            "document": render_omq(self.omq),
            "fresh_concepts": list(self.fresh_concepts),
            "provenance": dict(sorted(self.provenance.items())),
        }


def name_supply(omq: OMQ) -> NameSupply:
    return NameSupply(omq.sigma, signature_of(omq.tbox), signature_of(omq.query))


def build_result(omq: OMQ, tbox, concept: Concept, supply: NameSupply, provenance: dict,
                 trees=(), construction: str = "") -> RewriteResult:
    var = omq.query.variable if isinstance(omq.query, IQ) else as_ucq(omq.query).answer_var
    iq = IQ(concept, var)
    out = OMQ(tbox, omq.sigma, iq, minimal_dialect(tbox, iq))
    logger.info(f"{construction} produced a rewriting with {len(supply.issued)} fresh names")
    return RewriteResult(out, tuple(supply.issued), provenance, tuple(trees), construction)


# ---------------------------------------------------------------------------
# Tree concepts
# ---------------------------------------------------------------------------

def tree_concept(cq: CQ, root: str, step: type = Exists) -> Concept:
    """ELI concept of the component of ``root`` in a tree-shaped (e)CQ, read from ``root``.

    ``step=Forall`` builds the same tree with every edge read universally.
    """
    adjacency: dict[str, list[RoleAtom]] = {}
    for atom in cq.role_atoms:
        adjacency.setdefault(atom.source, []).append(atom)
        if atom.target != atom.source:
            adjacency.setdefault(atom.target, []).append(atom)
    labels: dict[str, list[Concept]] = {}
    for atom in cq.concept_atoms:
        labels.setdefault(atom.var, []).append(atom.concept)

    def build(var: str, via: RoleAtom | None) -> Concept:
        parts = list(labels.get(var, []))
        for atom in adjacency.get(var, []):
            if atom == via:
                continue
            if atom.source == atom.target:
                raise PreconditionError("not tree-shaped: self-loop", atom_key(atom))
            child = atom.target if atom.source == var else atom.source
            role = Role(atom.role, atom.source != var)
            parts.append(step(role, build(child, atom)))
        return make_and(*parts)

    return build(root, None)


def _fresh_variable(taken: set[str], base: str) -> str:
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    name = f"{base}_{i}"
    taken.add(name)
    return name


def untangle(cq: CQ, marker: str) -> CQ:
    """Cut the cycle atoms at the answer variable until the component of x is a tree.

    Atoms incident to x are visited in descending canonical order; an atom is cut
    while it still lies on a cycle. A cut atom read as R(x,y) is replaced by
    R(x',y) and marker(x') for a fresh x'. A self-loop r(x,x) is read as r⁻(x,x).
    """
    x = cq.answer_var
    atoms = set(cq.atoms)
    taken = set(cq.variables)
    incident = sorted((a for a in cq.role_atoms if x in (a.source, a.target)), key=atom_key, reverse=True)
    for atom in incident:
        rest = [a for a in atoms if isinstance(a, RoleAtom) and a != atom]
        if atom.source != atom.target:
            graph = nx.MultiGraph()
            graph.add_nodes_from(taken)
            graph.add_edges_from((a.source, a.target) for a in rest)
            if not nx.has_path(graph, atom.source, atom.target):
                continue
        atoms.discard(atom)
        if atom.source == atom.target:
            role, other = Role(atom.role, True), x
        elif atom.source == x:
            role, other = Role(atom.role), atom.target
        else:
            role, other = Role(atom.role, True), atom.source
        cut = _fresh_variable(taken, x)
        atoms.add(role_atom(role, cut, other))
        atoms.add(ConceptAtom(Name(marker), cut))
    return make_cq(x, atoms)


def _check_acyclic(omq: OMQ, connected: bool):
    for cq in as_ucq(omq.query).disjuncts:
        cycle = find_cycle(cq, {cq.answer_var})
        if cycle is not None:
            raise PreconditionError("query is not x-acyclic", str(cycle))
        if connected:
            extra = components(cq)[1:]
            if extra:
                raise PreconditionError("query is not connected", ",".join(sorted(extra[0])))


def _disjunct_concept(cq: CQ, marker: str, universal: bool) -> tuple[Concept, CQ]:
    parts = components(cq)
    main = restrict(cq, parts[0])
    tree = untangle(main, marker)
    if not is_tree_shaped(tree):
        raise PreconditionError("untangled query is not tree-shaped", str(tree))
    concept = tree_concept(tree, cq.answer_var)
    boolean = []
    for comp in parts[1:]:
        if not universal:
            raise PreconditionError("query is not connected", ",".join(sorted(comp)))
        root = min(comp)
        sub = make_cq(root, (a for a in cq.atoms if set(a.variables) <= comp))
        boolean.append(Exists(UNIVERSAL_ROLE, tree_concept(sub, root)))
    return make_and(concept, *boolean), tree


def _alci(omq: OMQ, universal: bool, construction: str, supply: NameSupply | None = None) -> RewriteResult:
    if isinstance(omq.query, IQ):
        raise PreconditionError("query is already an instance query")
    _check_acyclic(omq, connected=not universal)
    supply = supply or name_supply(omq)
    marker = supply.next("p")
    concepts, trees = [], []
    for cq in as_ucq(omq.query).disjuncts:
        concept, tree = _disjunct_concept(cq, marker, universal)
        concepts.append(concept)
        trees.append(tree)
    body = implies(Name(marker), make_or(*concepts))
    provenance = {marker: "marks the cut ends of cycle atoms at the answer variable"}
    return build_result(omq, omq.tbox, body, supply, provenance, trees, construction)


def rewrite_alci(omq: OMQ) -> RewriteResult:
    """(ALCI, IQ) rewriting of an OMQ whose disjuncts are x-acyclic and connected."""
    return _alci(omq, universal=False, construction="alci")


def rewrite_alci_u(omq: OMQ) -> RewriteResult:
    """As rewrite_alci, with Boolean components expressed through ∃u."""
    return _alci(omq, universal=True, construction="alci+u")


def _split_guard(concept: Concept, marker: str) -> Concept:
    """The C of an ALCI rewriting (P → C), given its concept ¬P ⊔ C."""
    if isinstance(concept, Or):
        rest = [op for op in concept.operands if op != Not(Name(marker))]
        return make_or(*rest)
    return concept


# ---------------------------------------------------------------------------
# Removing inverse roles
# ---------------------------------------------------------------------------

def _innermost_inverse(concept: Concept) -> Exists | None:
    """First ∃r⁻.E (in canonical traversal order) whose filler E is inverse-free."""
    if isinstance(concept, Exists):
        inner = _innermost_inverse(concept.filler)
        if inner is not None:
            return inner
        if concept.role.inverted and not uses_inverse(concept.filler):
            return concept
        return None
    if isinstance(concept, Forall):
        return _innermost_inverse(concept.filler)
    if isinstance(concept, Not):
        return _innermost_inverse(concept.operand)
    if isinstance(concept, (And, Or)):
        for op in concept.operands:
            found = _innermost_inverse(op)
            if found is not None:
                return found
    return None


def rewrite_alch_extend_tbox(omq: OMQ) -> RewriteResult:
    """Inverse-free rewriting obtained by adding E ⊑ ∀r.P_D for every innermost ∃r⁻.E."""
    supply = name_supply(omq)
    base = _alci(omq, False, "alci", supply)
    concept = base.omq.query.concept
    provenance = dict(base.provenance)
    added = []
    while True:
        target = _innermost_inverse(concept)
        if target is None:
            break
        fresh = supply.next("pd")
        added.append((target.filler, Forall(target.role.inverse(), Name(fresh))))
        provenance[fresh] = f"replaces {render_concept(target)}"
        concept = replace_subconcept(concept, target, Name(fresh))
    tbox = omq.tbox.extend(concept_inclusions=added)
    return build_result(omq, tbox, concept, supply, provenance, base.trees, "alch-ext")


def _replace_first(concept: Concept, match: Callable[[Concept], bool], new: Concept) -> tuple[Concept, bool]:
    """Replace only the first occurrence (pre-order, operand order) satisfying ``match``."""
    if match(concept):
        return new, True
    if isinstance(concept, Exists):
        inner, done = _replace_first(concept.filler, match, new)
        return (Exists(concept.role, inner), True) if done else (concept, False)
    if isinstance(concept, Forall):
        inner, done = _replace_first(concept.filler, match, new)
        return (Forall(concept.role, inner), True) if done else (concept, False)
    if isinstance(concept, Not):
        inner, done = _replace_first(concept.operand, match, new)
        return (Not(inner), True) if done else (concept, False)
    if isinstance(concept, (And, Or)):
        ops = list(concept.operands)
        for i, op in enumerate(ops):
            inner, done = _replace_first(op, match, new)
            if done:
                ops[i] = inner
                rebuilt = make_and(*ops) if isinstance(concept, And) else make_or(*ops)
                return rebuilt, True
    return concept, False


def _find_first(concept: Concept, match: Callable[[Concept], bool]) -> Concept | None:
    if match(concept):
        return concept
    children = []
    if isinstance(concept, (Exists, Forall)):
        children = [concept.filler]
    elif isinstance(concept, Not):
        children = [concept.operand]
    elif isinstance(concept, (And, Or)):
        children = list(concept.operands)
    for child in children:
        found = _find_first(child, match)
        if found is not None:
            return found
    return None


def _alc(omq: OMQ, universal: bool, construction: str) -> RewriteResult:
    if not universal:
        for cq in as_ucq(omq.query).disjuncts:
            missing = unreachable_variables(cq)
            if missing:
                raise PreconditionError("query is not x-accessible", missing[0])
    supply = name_supply(omq)
    base = _alci(omq, universal, construction, supply)
    marker = base.fresh_concepts[0]
    provenance = dict(base.provenance)
    con = _split_guard(base.omq.query.concept, marker)
    pre_parts: list[Concept] = []
    introduced: set[str] = set()

    def is_marker_inverse(c: Concept) -> bool:
        return isinstance(c, Exists) and c.role.inverted and c.filler == Name(marker)

    while True:
        found = _find_first(con, is_marker_inverse)
        if found is None:
            break
        fresh = supply.next("pd")
        introduced.add(fresh)
        provenance[fresh] = f"replaces {render_concept(found)}"
        con, _ = _replace_first(con, lambda c: c == found, Name(fresh))
        pre_parts.append(Forall(found.role.inverse(), Name(fresh)))
    pre = make_and(*pre_parts)

    def is_inverse_step(c: Concept) -> bool:
        return isinstance(c, Exists) and c.role.inverted and not uses_inverse(c.filler)

    while True:
        found = _find_first(con, is_inverse_step)
        if found is None:
            break
        fresh = supply.next("pd")
        provenance[fresh] = f"replaces {render_concept(found)}"
        forward = Forall(found.role.inverse(), Name(fresh))
        con, _ = _replace_first(con, lambda c: c == found, Name(fresh))
        if universal:
            pre = make_and(pre, Forall(UNIVERSAL_ROLE, implies(found.filler, forward)))
            continue
        filler = found.filler
        operands = list(filler.operands) if isinstance(filler, And) else [filler]
        anchors = sorted(op.name for op in operands if isinstance(op, Name) and op.name in introduced)
        if not anchors:
            raise PreconditionError("inverse role without a reachable anchor", render_concept(found))
        anchor = anchors[0]
        rest = make_and(*(op for op in operands if op != Name(anchor)))
        replacement = forward if rest == TOP else implies(rest, forward)
        pre = replace_subconcept(pre, Name(anchor), replacement)
        introduced.discard(anchor)
        introduced.add(fresh)
    premise = make_and(pre, Name(marker))
    concept = implies(premise, con)
    return build_result(omq, omq.tbox, concept, supply, provenance, base.trees, construction)


def rewrite_alc(omq: OMQ) -> RewriteResult:
    """Inverse-free rewriting (C_pre → C_con) without touching the TBox; needs x-accessibility."""
    return _alc(omq, universal=False, construction="alc")


def rewrite_alc_u(omq: OMQ) -> RewriteResult:
    """As rewrite_alc, guarding inverse steps through ∀u so that x-accessibility is not needed."""
    return _alc(omq, universal=True, construction="alc+u")


# ---------------------------------------------------------------------------
# Boolean to atomic queries
# ---------------------------------------------------------------------------

def baq_to_aq(omq: OMQ) -> RewriteResult:
    """Replace ∃x C(x) by M(x) over T ∪ {C ⊑ M} ∪ {∃r.M ⊑ M, ∃r⁻.M ⊑ M | r in sig(T)}."""
    if not isinstance(omq.query, IQ):
        raise PreconditionError("expected a Boolean instance query")
    supply = name_supply(omq)
    marker = supply.next("m")
    m = Name(marker)
    axioms = [(omq.query.concept, m)]
    for r in sorted(signature_of(omq.tbox).roles):
        axioms.append((Exists(Role(r), m), m))
        axioms.append((Exists(Role(r, True), m), m))
    tbox = omq.tbox.extend(concept_inclusions=axioms)
    iq = IQ(m, "x")
    out = OMQ(tbox, omq.sigma, iq, minimal_dialect(tbox, iq))
    logger.info(f"baq produced {len(axioms)} axioms")
    return RewriteResult(out, (marker,), {marker: "holds wherever the Boolean query is witnessed"}, (), "baq")
