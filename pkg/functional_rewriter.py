"""
IQ rewriting for UCQs under TBoxes with functional roles.

Each disjunct p is split into the functional closure FC of the answer variable
and the clusters of the remaining variables. A tree-shaped p′ keeps one
functional spanning arborescence of FC and of every cluster, every atom that
joins two clusters and one FC link per group of joined clusters. Every variable
y gets a fresh marker A_y. The premise reads p′ with ∀ instead of ∃; the
conclusion reads p′ with ∃ and adds one ∃R.A_z check per dropped atom leaving or
inside FC. Dropped atoms inside a cluster are closed again through three
colour names per atom.
"""

from __future__ import annotations

import logging

import networkx as nx

from errors import PreconditionError
from query_structure import (
    ClusterDecomposition,
    clusters,
    components,
    find_cycle,
    find_f_cycle,
    is_tree_shaped,
    reading,
    restrict,
)
from rewriter import RewriteResult, build_result, name_supply, tree_concept
from syntax import (
    CQ,
    IQ,
    OMQ,
    UNIVERSAL_ROLE,
    Concept,
    ConceptAtom,
    Exists,
    Forall,
    Name,
    NameSupply,
    Role,
    RoleAtom,
    TBox,
    as_ucq,
    atom_key,
    implies,
    make_and,
    make_cq,
    make_or,
)

logger = logging.getLogger(__name__)

COLOURS = 3


def _steps(atom: RoleAtom, tbox: TBox) -> list[tuple[str, str, Role]]:
    """Functional readings of ``atom`` as (from, to, role)."""
    out = []
    if Role(atom.role) in tbox.functional:
        out.append((atom.source, atom.target, Role(atom.role)))
    if Role(atom.role, True) in tbox.functional:
        out.append((atom.target, atom.source, Role(atom.role, True)))
    return out


def _step_graph(atoms, tbox: TBox, within: frozenset) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(sorted(within))
    for atom in sorted(atoms, key=atom_key):
        if atom.source not in within or atom.target not in within:
            continue
        for frm, to, role in _steps(atom, tbox):
            if frm != to and not graph.has_edge(frm, to):
                graph.add_edge(frm, to, atom=atom, role=role)
    return graph


def _arborescence(cq: CQ, tbox: TBox, root: str, within: frozenset) -> list[RoleAtom]:
    graph = _step_graph(cq.role_atoms, tbox, within)
    return [graph[u][v]["atom"] for u, v in nx.bfs_edges(graph, root)]


def spanning_tree(cq: CQ, tbox: TBox, decomposition: ClusterDecomposition) -> CQ:
    """Tree-shaped p′ over all variables of a connected, f-acyclic ``cq``.

    FC is spanned by functional paths from the answer variable and each cluster
    by functional paths from its smallest variable; cluster joins are kept and
    every group of joined clusters hangs off FC by its first linking atom.
    """
    x = cq.answer_var
    fc = decomposition.fc
    kept = _arborescence(cq, tbox, x, fc)
    for cluster in decomposition.clusters:
        kept += _arborescence(cq, tbox, min(cluster), cluster)
    kept += [decomposition.joins[key] for key in sorted(decomposition.joins)]
    for group in sorted(nx.connected_components(decomposition.cluster_graph()), key=min):
        members = set().union(*(decomposition.clusters[i] for i in group))
        links = [
            a for a in cq.role_atoms
            if (a.source in fc) != (a.target in fc) and (a.source in members or a.target in members)
        ]
        if not links:
            raise PreconditionError("query is not connected", ",".join(sorted(members)))
        kept.append(links[0])
    tree = make_cq(x, list(kept) + list(cq.concept_atoms))
    if not is_tree_shaped(tree) or tree.variables != cq.variables:
        raise PreconditionError("no functional spanning tree", str(tree))
    return tree


def _order_cluster_atoms(dropped: list[RoleAtom], kept: list[RoleAtom], tbox: TBox,
                         cluster: frozenset) -> list[tuple[RoleAtom, Role, list[str], nx.DiGraph]]:
    """Order the dropped atoms of one cluster so each closes a functional cycle.

    Returns, per atom, its functional reading r(x1,x2), the path x2 … x1 in the
    atoms placed before it, and the graph that path lives in.
    """
    placed = list(kept)
    remaining = sorted(dropped, key=atom_key)
    ordered = []
    while remaining:
        graph = _step_graph(placed, tbox, cluster)
        chosen = None
        for atom in remaining:
            for x1, x2, role in _steps(atom, tbox):
                if x1 == x2 or nx.has_path(graph, x2, x1):
                    path = [x1] if x1 == x2 else nx.shortest_path(graph, x2, x1)
                    chosen = (atom, role, path, graph)
                    break
            if chosen is not None:
                break
        if chosen is None:
            raise PreconditionError("cluster atoms cannot be closed by functional paths", atom_key(remaining[0]))
        ordered.append(chosen)
        remaining.remove(chosen[0])
        placed.append(chosen[0])
    return ordered


def _closing_concept(role: Role, path: list[str], graph: nx.DiGraph, colour: str) -> Concept:
    """∃s_0.….∃s_{k-2}.∃r.colour along ``path`` = y_0 … y_{k-1}."""
    concept: Concept = Exists(role, Name(colour))
    for frm, to in reversed(list(zip(path, path[1:]))):
        concept = Exists(graph[frm][to]["role"], concept)
    return concept


def _functional_disjunct(cq: CQ, tbox: TBox, supply: NameSupply, provenance: dict) -> tuple[Concept, CQ]:
    decomposition = clusters(cq, tbox)
    tree = spanning_tree(cq, tbox, decomposition)
    x = cq.answer_var
    fc = decomposition.fc
    marks = {}
    for y in cq.sorted_variables():
        marks[y] = supply.next("a")
        provenance[marks[y]] = f"marks the elements reached for variable {y}"
    tree_roles = tree.role_atoms
    plain_atoms: list = list(tree_roles) + [ConceptAtom(Name(marks[y]), y) for y in marks]
    deco_atoms: list = list(tree.atoms) + [ConceptAtom(Name(marks[y]), y) for y in marks]

    in_cluster: dict[int, list[RoleAtom]] = {}
    for atom in cq.role_atoms:
        if atom in tree.atoms:
            continue
        s_fc, t_fc = atom.source in fc, atom.target in fc
        if s_fc and t_fc:
            deco_atoms.append(ConceptAtom(Exists(Role(atom.role), Name(marks[atom.target])), atom.source))
        elif s_fc or t_fc:
            loose, fixed = (atom.target, atom.source) if s_fc else (atom.source, atom.target)
            deco_atoms.append(ConceptAtom(Exists(reading(atom, loose), Name(marks[fixed])), loose))
        else:
            i = decomposition.cluster_of[atom.source]
            in_cluster.setdefault(i, []).append(atom)

    for i, cluster in enumerate(decomposition.clusters):
        if decomposition.degenerate[i] or i not in in_cluster:
            continue
        kept = [a for a in tree_roles if a.source in cluster and a.target in cluster]
        for atom, role, path, graph in _order_cluster_atoms(in_cluster[i], kept, tbox, cluster):
            colours = [supply.next("c") for _ in range(COLOURS)]
            for c in colours:
                provenance[c] = f"colour for closing {atom_key(atom)}"
            start = path[0]
            plain_atoms.append(ConceptAtom(make_or(*(Name(c) for c in colours)), start))
            checks = [implies(Name(c), _closing_concept(role, path, graph, c)) for c in colours]
            deco_atoms.append(ConceptAtom(make_and(*checks), start))

    plain = tree_concept(make_cq(x, plain_atoms), x, Forall)
    deco = tree_concept(make_cq(x, deco_atoms), x)
    return implies(plain, deco), tree


def _boolean_part(cq: CQ, comp: set[str]) -> Concept:
    root = min(comp)
    sub = make_cq(root, (a for a in cq.atoms if set(a.variables) <= comp))
    cycle = find_cycle(sub)
    if cycle is not None or not is_tree_shaped(sub):
        raise PreconditionError("Boolean component is not acyclic", str(cycle) if cycle else ",".join(sorted(comp)))
    return Exists(UNIVERSAL_ROLE, tree_concept(sub, root))


def rewrite_functional(omq: OMQ, universal: bool = False) -> RewriteResult:
    """(ALCI, IQ) rewriting of an f-acyclic UCQ; the TBox is left unchanged.

    With ``universal`` the disjuncts may be disconnected as long as the
    components without the answer variable are acyclic; they become ∃u conjuncts.
    """
    if isinstance(omq.query, IQ):
        raise PreconditionError("query is already an instance query")
    tbox = omq.tbox
    cycle = find_f_cycle(omq.query, tbox)
    if cycle is not None:
        raise PreconditionError("query is not f-acyclic", str(cycle))
    supply = name_supply(omq)
    provenance: dict = {}
    concepts, trees = [], []
    for cq in as_ucq(omq.query).disjuncts:
        parts = components(cq)
        if len(parts) > 1 and not universal:
            raise PreconditionError("query is not connected", ",".join(sorted(parts[1])))
        concept, tree = _functional_disjunct(restrict(cq, parts[0]), tbox, supply, provenance)
        boolean = [_boolean_part(cq, comp) for comp in parts[1:]]
        concepts.append(make_and(concept, *boolean))
        trees.append(tree)
    construction = "functional+u" if universal else "functional"
    return build_result(omq, tbox, make_or(*concepts), supply, provenance, trees, construction)
