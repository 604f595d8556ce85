"""
Graph-theoretic analysis of CQs/UCQs: cycles, connectivity, reachability,
contractions, homomorphisms, cores, subqueries and the functional-path notions
(functional closure, f-acyclicity, clusters).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterator, Union

import networkx as nx

from errors import ClusterPropertyError, PreconditionError
from syntax import (
    ABox,
    CQ,
    UCQ,
    ConceptAtom,
    Name,
    Role,
    RoleAtom,
    TBox,
    as_ucq,
    atom_key,
    make_cq,
    make_ucq,
    role_atom,
    role_entails,
)
from utils import set_partitions

logger = logging.getLogger(__name__)

Query = Union[CQ, UCQ]


# ---------------------------------------------------------------------------
# Graphs and cycles
# ---------------------------------------------------------------------------

def query_graph(cq: CQ) -> nx.MultiDiGraph:
    """G_q: one node per variable, one directed edge per role atom (keyed by the atom)."""
    graph = nx.MultiDiGraph()
    graph.add_nodes_from(sorted(cq.variables))
    for atom in cq.role_atoms:
        graph.add_edge(atom.source, atom.target, key=atom, role=atom.role)
    return graph


def undirected_graph(cq: CQ) -> nx.Graph:
    """G^u_q collapsed to a simple graph (self-loops and parallel atoms dropped)."""
    graph = nx.Graph()
    graph.add_nodes_from(sorted(cq.variables))
    for atom in cq.role_atoms:
        if atom.source != atom.target and not graph.has_edge(atom.source, atom.target):
            graph.add_edge(atom.source, atom.target, atom=atom)
    return graph


def reading(atom: RoleAtom, start: str) -> Role:
    """The role of ``atom`` read from ``start`` towards its other end."""
    return Role(atom.role, atom.source != start)


@dataclass(frozen=True)
class Cycle:
    """Oriented atoms r0(x0,x1), …, r_{n-1}(x_{n-1}, x0)."""

    steps: tuple  # of (Role, from, to)

    @property
    def variables(self) -> list[str]:
        return [frm for _, frm, _ in self.steps]

    @property
    def atoms(self) -> list[RoleAtom]:
        return [role_atom(role, frm, to) for role, frm, to in self.steps]

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        return ", ".join(f"{role}({frm},{to})" for role, frm, to in self.steps)


def _cycle_from_walk(walk: list[str], chosen: dict) -> Cycle:
    steps = []
    for i, frm in enumerate(walk):
        to = walk[(i + 1) % len(walk)]
        atom = chosen[frozenset((frm, to))]
        steps.append((reading(atom, frm), frm, to))
    return Cycle(tuple(steps))


def _atoms_by_pair(atoms: list[RoleAtom]) -> dict[frozenset, list[RoleAtom]]:
    groups: dict[frozenset, list[RoleAtom]] = {}
    for atom in atoms:
        groups.setdefault(frozenset((atom.source, atom.target)), []).append(atom)
    return groups


def find_cycle(q: CQ, avoid=frozenset()) -> Cycle | None:
    """Shortest cycle none of whose variables is in ``avoid``.

    Self-loops come first, then pairs of distinct atoms on the same two
    variables, then longer cycles; ties are broken by the canonical atom order.
    """
    avoid = set(avoid)
    atoms = [a for a in q.role_atoms if a.source not in avoid and a.target not in avoid]
    for atom in atoms:
        if atom.source == atom.target:
            return Cycle(((Role(atom.role), atom.source, atom.source),))
    groups = _atoms_by_pair(atoms)
    for pair in sorted(groups, key=lambda p: sorted(p)):
        group = groups[pair]
        if len(group) >= 2:
            first, second = group[0], group[1]
            y, z = first.source, first.target
            return Cycle(((reading(first, y), y, z), (reading(second, z), z, y)))
    graph = nx.Graph()
    for atom in atoms:
        if not graph.has_edge(atom.source, atom.target):
            graph.add_edge(atom.source, atom.target, atom=atom)
    best = None
    for u, v in sorted(tuple(sorted(e)) for e in graph.edges):
        atom = graph[u][v]["atom"]
        graph.remove_edge(u, v)
        try:
            path = nx.shortest_path(graph, v, u)
        except nx.NetworkXNoPath:
            path = None
        graph.add_edge(u, v, atom=atom)
        if path is None:
            continue
        walk = [u] + path[:-1]
        if best is None or len(walk) < len(best):
            best = walk
    if best is None:
        return None
    chosen = {frozenset((u, v)): graph[u][v]["atom"] for u, v in graph.edges}
    return _cycle_from_walk(best, chosen)


def find_x_cycle(q: Query) -> Cycle | None:
    """A cycle avoiding the answer variable in some disjunct, if any."""
    for cq in as_ucq(q).disjuncts:
        cycle = find_cycle(cq, {cq.answer_var})
        if cycle is not None:
            return cycle
    return None


def is_x_acyclic(q: Query) -> bool:
    """Every cycle of every disjunct passes through the answer variable."""
    return find_x_cycle(q) is None


def is_tree_shaped(cq: CQ) -> bool:
    """G^u_q is a tree and no two atoms join the same pair of variables."""
    atoms = cq.role_atoms
    if any(a.source == a.target for a in atoms):
        return False
    if any(len(g) > 1 for g in _atoms_by_pair(atoms).values()):
        return False
    graph = undirected_graph(cq)
    return nx.is_tree(graph)


# ---------------------------------------------------------------------------
# Connectivity and reachability
# ---------------------------------------------------------------------------

def component_of(cq: CQ, var: str) -> set[str]:
    return set(nx.node_connected_component(undirected_graph(cq), var))


def components(cq: CQ) -> list[set[str]]:
    """Connected components, the one holding the answer variable first."""
    comps = [set(c) for c in nx.connected_components(undirected_graph(cq))]
    comps.sort(key=lambda c: (cq.answer_var not in c, sorted(c)))
    return comps


def is_connected(q: Query) -> bool:
    return all(nx.is_connected(undirected_graph(cq)) for cq in as_ucq(q).disjuncts)


def dreach(cq: CQ) -> set[str]:
    """Variables reachable from the answer variable in the directed graph G_q."""
    graph = query_graph(cq)
    return {cq.answer_var} | nx.descendants(graph, cq.answer_var)


def unreachable_variables(cq: CQ) -> list[str]:
    return sorted(cq.variables - dreach(cq))


def is_x_accessible(q: Query) -> bool:
    return all(not unreachable_variables(cq) for cq in as_ucq(q).disjuncts)


def restrict(cq: CQ, variables) -> CQ:
    """q|_V: the atoms all of whose variables lie in V."""
    variables = set(variables)
    if cq.answer_var not in variables:
        raise PreconditionError("restriction must keep the answer variable", cq.answer_var)
    return make_cq(cq.answer_var, (a for a in cq.atoms if set(a.variables) <= variables))


def q_con(q: Query) -> Query:
    """Restriction of each disjunct to the component of the answer variable."""
    if isinstance(q, CQ):
        return restrict(q, component_of(q, q.answer_var))
    return make_ucq((q_con(cq) for cq in q.disjuncts), q.answer_var)


def canonical_abox(cq: CQ) -> ABox:
    """Read a CQ as an (e)ABox whose individuals are its variables."""
    return ABox(
        frozenset((a.concept, a.var) for a in cq.concept_atoms),
        frozenset((a.role, a.source, a.target) for a in cq.role_atoms),
    )


# ---------------------------------------------------------------------------
# Contractions and role specialisation
# ---------------------------------------------------------------------------

def substitute(cq: CQ, mapping: dict[str, str]) -> CQ:
    def m(v):
        return mapping.get(v, v)

    atoms = []
    for atom in cq.atoms:
        if isinstance(atom, RoleAtom):
            atoms.append(RoleAtom(atom.role, m(atom.source), m(atom.target)))
        else:
            atoms.append(ConceptAtom(atom.concept, m(atom.var)))
    return make_cq(m(cq.answer_var), atoms)


def contractions(cq: CQ) -> Iterator[CQ]:
    """One CQ per set partition of the variables, finest first, deduplicated.

    The block holding the answer variable is named after it; every other block
    takes its alphabetically smallest variable.
    """
    x = cq.answer_var
    seen: set[frozenset] = set()
    for partition in set_partitions(cq.sorted_variables()):
        mapping = {}
        for block in partition:
            rep = x if x in block else min(block)
            for v in block:
                mapping[v] = rep
        image = substitute(cq, mapping)
        if image.atoms in seen:
            continue
        seen.add(image.atoms)
        yield image


def _specialisations_of_atom(atom: RoleAtom, tbox: TBox) -> list[RoleAtom]:
    names = {atom.role}
    for sub, sup in tbox.role_inclusions:
        names.update((sub.name, sup.name))
    target = Role(atom.role)
    out = {}
    for name in sorted(names):
        for role in (Role(name), Role(name, True)):
            if role_entails(tbox, role, target):
                special = role_atom(role, atom.source, atom.target)
                out[atom_key(special)] = special
    return [out[k] for k in sorted(out)]


def specialisations(cq: CQ, tbox: TBox) -> Iterator[CQ]:
    """All CQs obtained by replacing atoms r(y,z) with s(y,z) where T ⊨ s ⊑ r."""
    if not tbox.role_inclusions:
        yield cq
        return
    role_atoms = cq.role_atoms
    others = [a for a in cq.atoms if not isinstance(a, RoleAtom)]
    options = [_specialisations_of_atom(a, tbox) for a in role_atoms]
    seen: set[frozenset] = set()
    for choice in product(*options):
        variant = make_cq(cq.answer_var, others + list(choice))
        if variant.atoms not in seen:
            seen.add(variant.atoms)
            yield variant


def build_q_acyc(q: Query, tbox: TBox) -> UCQ:
    """All x-acyclic contractions (with role specialisation) of the disjuncts of q."""
    ucq = as_ucq(q)
    found = []
    for cq in ucq.disjuncts:
        for contraction in contractions(cq):
            for variant in specialisations(contraction, tbox):
                if find_cycle(variant, {variant.answer_var}) is None:
                    found.append(variant)
    result = make_ucq(found, ucq.answer_var)
    logger.debug(f"q_acyc has {len(result.disjuncts)} disjuncts")
    return result


# ---------------------------------------------------------------------------
# Homomorphisms
# ---------------------------------------------------------------------------

class _Structure:
    """Uniform view of a CQ, an ABox or an interpretation as a target structure."""

    def __init__(self, target):
        self.target = target
        self._members: dict = {}
        if isinstance(target, CQ):
            self.elements = sorted(target.variables)
            facts = [(a.concept, a.var) for a in target.concept_atoms]
            pairs = [(a.role, a.source, a.target) for a in target.role_atoms]
        elif isinstance(target, ABox):
            self.elements = list(target.individuals)
            facts = list(target.concept_assertions)
            pairs = list(target.role_assertions)
        else:
            self.elements = list(target.domain)
            facts = None
            pairs = [(r, a, b) for r, ps in target.roles.items() for a, b in ps]
        self._facts = None
        if facts is not None:
            self._facts = {}
            for concept, element in facts:
                self._facts.setdefault(concept, set()).add(element)
        self.succ: dict = {}
        self.pred: dict = {}
        self.pairs: dict = {}
        for r, a, b in pairs:
            self.pairs.setdefault(r, set()).add((a, b))
            self.succ.setdefault((r, a), set()).add(b)
            self.pred.setdefault((r, b), set()).add(a)

    def members(self, concept) -> set:
        if concept not in self._members:
            if self._facts is not None:
                self._members[concept] = self._facts.get(concept, set())
            else:
                self._members[concept] = set(self.target.extension(concept))
        return self._members[concept]


def _variable_order(cq: CQ, fixed: list[str]) -> list[str]:
    order = list(fixed)
    remaining = sorted(v for v in cq.variables if v not in fixed)
    neighbours: dict[str, set[str]] = {v: set() for v in cq.variables}
    for atom in cq.role_atoms:
        neighbours[atom.source].add(atom.target)
        neighbours[atom.target].add(atom.source)
    placed = set(order)
    while remaining:
        best = max(remaining, key=lambda v: (len(neighbours[v] & placed), -remaining.index(v)))
        remaining.remove(best)
        order.append(best)
        placed.add(best)
    return order


def homomorphisms(source: CQ, target, fix: dict | None = None) -> Iterator[dict]:
    """All homomorphisms from ``source`` into ``target`` extending ``fix``, in a fixed order."""
    structure = target if isinstance(target, _Structure) else _Structure(target)
    fix = dict(fix or {})
    elements = structure.elements
    for var, value in fix.items():
        if value not in elements:
            return
    order = _variable_order(source, sorted(fix))
    concept_atoms: dict[str, list] = {}
    for atom in source.concept_atoms:
        concept_atoms.setdefault(atom.var, []).append(atom.concept)
    role_atoms: dict[str, list[RoleAtom]] = {}
    for atom in source.role_atoms:
        role_atoms.setdefault(atom.source, []).append(atom)
        if atom.target != atom.source:
            role_atoms.setdefault(atom.target, []).append(atom)

    def candidates(var: str, assignment: dict) -> list:
        if var in fix:
            pool = [fix[var]]
        else:
            pool = None
            for atom in role_atoms.get(var, []):
                other = atom.target if atom.source == var else atom.source
                if other == var or other not in assignment:
                    continue
                if atom.source == var:
                    allowed = structure.pred.get((atom.role, assignment[other]), set())
                else:
                    allowed = structure.succ.get((atom.role, assignment[other]), set())
                pool = allowed if pool is None else pool & allowed
            pool = elements if pool is None else sorted(pool)
        good = []
        for value in pool:
            if any(value not in structure.members(c) for c in concept_atoms.get(var, [])):
                continue
            ok = True
            for atom in role_atoms.get(var, []):
                s = value if atom.source == var else assignment.get(atom.source)
                t = value if atom.target == var else assignment.get(atom.target)
                if s is None or t is None:
                    continue
                if (s, t) not in structure.pairs.get(atom.role, ()):
                    ok = False
                    break
            if ok:
                good.append(value)
        return good

    def extend(i: int, assignment: dict):
        if i == len(order):
            yield dict(assignment)
            return
        var = order[i]
        for value in candidates(var, assignment):
            assignment[var] = value
            yield from extend(i + 1, assignment)
            del assignment[var]

    yield from extend(0, {})


def homomorphism(source: CQ, target, fix: dict | None = None) -> dict | None:
    """First homomorphism extending ``fix``, or None when there is none."""
    return next(homomorphisms(source, target, fix), None)


def _answer_fix(source: CQ, target: CQ) -> dict:
    return {source.answer_var: target.answer_var}


def cq_contained(q1: Query, q2: Query) -> bool:
    """q1 ⊆ q2 under the empty TBox: each disjunct of q1 receives a hom from one of q2."""
    for p1 in as_ucq(q1).disjuncts:
        if not any(homomorphism(p2, p1, _answer_fix(p2, p1)) is not None for p2 in as_ucq(q2).disjuncts):
            return False
    return True


def ucq_equivalent(q1: Query, q2: Query) -> bool:
    return cq_contained(q1, q2) and cq_contained(q2, q1)


def core(cq: CQ) -> CQ:
    """Hom-minimal retract of ``cq`` fixing the answer variable (a subquery of ``cq``)."""
    current = cq
    x = cq.answer_var
    changed = True
    while changed:
        changed = False
        for var in sorted(current.variables - {x}):
            smaller = restrict(current, current.variables - {var})
            if homomorphism(current, smaller, {x: x}) is not None:
                current = smaller
                changed = True
                break
    return current


def minimize_ucq(q: Query) -> UCQ:
    """Cores of the disjuncts, keeping only disjuncts not contained in another one."""
    ucq = as_ucq(q)
    kept: list[CQ] = []
    for cq in (core(p) for p in ucq.disjuncts):
        if any(homomorphism(k, cq, _answer_fix(k, cq)) is not None for k in kept):
            continue
        kept = [k for k in kept if homomorphism(cq, k, _answer_fix(cq, k)) is None]
        kept.append(cq)
    return make_ucq(kept, ucq.answer_var)


def subqueries(q: Query):
    """All subqueries, largest first.

    For a CQ this is a lazy stream of atom subsets. For a UCQ it is the sorted
    list of every choice of at most one subquery per disjunct (at least one
    disjunct kept).
    """
    if isinstance(q, CQ):
        return _cq_subqueries(q)
    per_disjunct = [[None] + list(_cq_subqueries(cq)) for cq in q.disjuncts]
    choices = []
    for choice in product(*per_disjunct):
        chosen = [c for c in choice if c is not None]
        if chosen:
            choices.append(make_ucq(chosen, q.answer_var))
    choices.sort(key=lambda u: -sum(len(c.atoms) for c in u.disjuncts))
    return choices


def _cq_subqueries(cq: CQ) -> Iterator[CQ]:
    atoms = cq.sorted_atoms
    for size in range(len(atoms), -1, -1):
        for chosen in combinations(atoms, size):
            yield make_cq(cq.answer_var, chosen)


# ---------------------------------------------------------------------------
# Functional paths, f-acyclicity and clusters
# ---------------------------------------------------------------------------

def functional_step_graph(cq: CQ, tbox: TBox) -> nx.DiGraph:
    """Directed graph with an edge y→z whenever some atom is a functional step from y to z."""
    graph = nx.DiGraph()
    graph.add_nodes_from(sorted(cq.variables))
    for atom in cq.role_atoms:
        if Role(atom.role) in tbox.functional:
            graph.add_edge(atom.source, atom.target)
        if Role(atom.role, True) in tbox.functional:
            graph.add_edge(atom.target, atom.source)
    return graph


def functional_closure(cq: CQ, tbox: TBox, var: str) -> set[str]:
    """FC(var): variables reachable from ``var`` along functional paths (``var`` included)."""
    graph = functional_step_graph(cq, tbox)
    return {var} | nx.descendants(graph, var)


def _is_functional_atom(atom: RoleAtom, tbox: TBox) -> bool:
    return Role(atom.role) in tbox.functional or Role(atom.role, True) in tbox.functional


def find_f_cycle(q: Query, tbox: TBox) -> Cycle | None:
    """A cycle violating both f-acyclicity conditions, or None."""
    for cq in as_ucq(q).disjuncts:
        witness = _f_cycle(cq, tbox)
        if witness is not None:
            return witness
    return None


def is_f_acyclic(q: Query, tbox: TBox) -> bool:
    return find_f_cycle(q, tbox) is None


def _f_cycle(cq: CQ, tbox: TBox) -> Cycle | None:
    fc = functional_closure(cq, tbox, cq.answer_var)
    steps = functional_step_graph(cq, tbox)
    scc_of = {}
    for i, scc in enumerate(nx.strongly_connected_components(steps)):
        for v in scc:
            scc_of[v] = i
    groups = _atoms_by_pair(cq.role_atoms)

    def worst_atom(pair: frozenset, exclude=None) -> RoleAtom:
        group = [a for a in groups[pair] if a != exclude]
        bad = [a for a in group if not _is_functional_atom(a, tbox)]
        return (bad or group)[0]

    def allowed(vertices: list[str], atoms: list[RoleAtom]) -> bool:
        if any(v in fc for v in vertices):
            return True
        if not all(_is_functional_atom(a, tbox) for a in atoms):
            return False
        return len({scc_of[v] for v in vertices}) == 1

    for atom in cq.role_atoms:
        if atom.source == atom.target and not allowed([atom.source], [atom]):
            return Cycle(((Role(atom.role), atom.source, atom.source),))
    for pair in sorted((p for p in groups if len(p) == 2), key=lambda p: sorted(p)):
        group = groups[pair]
        if len(group) < 2:
            continue
        first = worst_atom(pair)
        second = worst_atom(pair, exclude=first)
        y, z = first.source, first.target
        if not allowed([y, z], [first, second]):
            return Cycle(((reading(first, y), y, z), (reading(second, z), z, y)))
    simple = undirected_graph(cq)
    cycles = [c for c in nx.simple_cycles(simple) if len(c) >= 3]
    cycles.sort(key=lambda c: (len(c), sorted(c)))
    for walk in cycles:
        start = walk.index(min(walk))
        walk = walk[start:] + walk[:start]
        pairs = [frozenset((walk[i], walk[(i + 1) % len(walk)])) for i in range(len(walk))]
        chosen = {p: worst_atom(p) for p in pairs}
        if not allowed(walk, list(chosen.values())):
            return _cycle_from_walk(walk, chosen)
    return None


@dataclass
class ClusterDecomposition:
    """FC/nFC split and the clusters of nFC with their cluster graph."""

    fc: frozenset
    nfc: frozenset
    clusters: list  # of frozenset, ordered by smallest variable
    cluster_of: dict = field(default_factory=dict)
    joins: dict = field(default_factory=dict)  # (i, j) with i < j -> joining RoleAtom
    degenerate: list = field(default_factory=list)

    def cluster_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(len(self.clusters)))
        graph.add_edges_from(self.joins)
        return graph


def clusters(cq: CQ, tbox: TBox) -> ClusterDecomposition:
    """Clusters of nFC(x) and the cluster graph; raises if the cluster properties fail."""
    fc = frozenset(functional_closure(cq, tbox, cq.answer_var))
    nfc = frozenset(cq.variables - fc)
    steps = functional_step_graph(cq, tbox).subgraph(nfc)
    found = sorted((frozenset(c) for c in nx.strongly_connected_components(steps)), key=lambda c: min(c))
    cluster_of = {v: i for i, c in enumerate(found) for v in c}
    joins: dict = {}
    for atom in cq.role_atoms:
        if atom.source not in nfc or atom.target not in nfc:
            continue
        i, j = cluster_of[atom.source], cluster_of[atom.target]
        if i == j:
            if not _is_functional_atom(atom, tbox):
                raise ClusterPropertyError("non-functional atom inside a cluster", str(atom_key(atom)))
            continue
        key = (min(i, j), max(i, j))
        if key in joins:
            raise ClusterPropertyError(
                "two atoms join the same pair of clusters", f"{atom_key(joins[key])}, {atom_key(atom)}"
            )
        joins[key] = atom
    decomposition = ClusterDecomposition(fc, nfc, found, cluster_of, joins)
    if found and not nx.is_forest(decomposition.cluster_graph()):
        raise ClusterPropertyError("cluster graph has a cycle")
    for c in found:
        (only,) = c if len(c) == 1 else (None,)
        loop = only is not None and any(a.source == a.target == only for a in cq.role_atoms)
        decomposition.degenerate.append(len(c) == 1 and not loop)
    return decomposition
