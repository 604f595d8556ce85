"""
Tableau procedure for ABox consistency in ALCHIF with the universal role.

Lazy unfolding for inclusions with a concept name on the left, internalisation
for the rest, role-hierarchy aware neighbours, a global label set for ∀u,
merging for functional roles (no unique name assumption) and pairwise blocking.
Disjunctions are explored depth-first over copied states.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

from errors import ResourceLimitExceeded
from interpretation import Interpretation
from syntax import (
    ABox,
    And,
    Bottom,
    Concept,
    Exists,
    Forall,
    Name,
    Not,
    Or,
    Role,
    TBox,
    Top,
    make_or,
    nnf,
    render_concept,
    role_entails,
)

logger = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 5000


@lru_cache(maxsize=4096)
def complement(concept: Concept) -> Concept:
    return nnf(Not(concept))


def _sort_key(concept: Concept) -> str:
    return render_concept(concept)


@dataclass
class _State:
    labels: dict = field(default_factory=dict)  # node -> set of NNF concepts
    parent: dict = field(default_factory=dict)  # tree node -> parent node
    roots: set = field(default_factory=set)
    edges: set = field(default_factory=set)  # (source, role name, target)
    individuals: dict = field(default_factory=dict)  # individual -> node
    global_concepts: set = field(default_factory=set)
    next_id: int = 0

    def copy(self) -> "_State":
        return _State(
            {n: set(l) for n, l in self.labels.items()},
            dict(self.parent),
            set(self.roots),
            set(self.edges),
            dict(self.individuals),
            set(self.global_concepts),
            self.next_id,
        )


class Tableau:
    """Consistency checker for one TBox; reusable across ABoxes."""

    def __init__(self, tbox: TBox, node_budget: int = DEFAULT_NODE_BUDGET):
        self.tbox = tbox
        self.node_budget = node_budget
        self.unfold: dict[str, list[Concept]] = {}
        internal = []
        for left, right in sorted(tbox.concept_inclusions, key=lambda ci: (_sort_key(ci[0]), _sort_key(ci[1]))):
            if isinstance(left, Bottom):
                continue
            if isinstance(left, Name):
                self.unfold.setdefault(left.name, []).append(nnf(right))
            elif isinstance(left, Top):
                internal.append(nnf(right))
            else:
                internal.append(nnf(make_or(Not(left), right)))
        self.internal = frozenset(internal)
        self.functional = sorted(tbox.functional, key=str)
        self._created = 0

    # -- public ---------------------------------------------------------------

    def is_consistent(self, abox: ABox) -> bool:
        return self._complete(abox) is not None

    def model(self, abox: ABox) -> Interpretation | None:
        """A finite model read off a complete branch, or None if inconsistent or not foldable."""
        state = self._complete(abox)
        if state is None:
            return None
        interpretation = self._extract(state)
        if not interpretation.is_model(abox, self.tbox):
            logger.debug("folded tableau is not a model; no countermodel extracted")
            return None
        return interpretation

    # -- search ---------------------------------------------------------------

    def _complete(self, abox: ABox) -> _State | None:
        self._created = 0
        stack = [self._initial(abox)]
        while stack:
            state = stack.pop()
            if not self._saturate(state):
                continue
            branch = self._pick_branch(state)
            if branch is None:
                logger.debug(f"tableau complete with {len(state.labels)} nodes")
                return state
            node, options = branch
            for option in reversed(options):
                child = state.copy()
                child.labels[node].add(option)
                stack.append(child)
        return None

    def _initial(self, abox: ABox) -> _State:
        state = _State()
        for ind in abox.individuals:
            node = self._new_node(state, set(), None)
            state.roots.add(node)
            state.individuals[ind] = node
        for concept, ind in abox.concept_assertions:
            state.labels[state.individuals[ind]].add(nnf(concept))
        for r, a, b in abox.role_assertions:
            state.edges.add((state.individuals[a], r, state.individuals[b]))
        return state

    def _new_node(self, state: _State, label: set, parent) -> int:
        self._created += 1
        if self._created > self.node_budget:
            raise ResourceLimitExceeded("tableau nodes", self.node_budget)
        node = state.next_id
        state.next_id += 1
        state.labels[node] = set(label) | self.internal | state.global_concepts
        if parent is not None:
            state.parent[node] = parent
        return node

    def _saturate(self, state: _State) -> bool:
        while True:
            if not self._deterministic(state):
                return False
            if not self._generate(state):
                return True

    # -- rules ----------------------------------------------------------------

    def _neighbours(self, state: _State, node: int, role: Role) -> set[int]:
        found = set()
        for a, r, b in state.edges:
            if a == node and role_entails(self.tbox, Role(r), role):
                found.add(b)
            if b == node and role_entails(self.tbox, Role(r, True), role):
                found.add(a)
        return found

    @staticmethod
    def _clash(label: set) -> bool:
        if any(isinstance(c, Bottom) for c in label):
            return True
        return any(isinstance(c, Not) and c.operand in label for c in label)

    def _deterministic(self, state: _State) -> bool:
        changed = True
        while changed:
            changed = False
            for node in sorted(state.labels):
                if node not in state.labels:
                    continue
                label = state.labels[node]
                if self._clash(label):
                    return False
                new = set(state.global_concepts) - label
                for c in list(label):
                    if isinstance(c, And):
                        new.update(c.operands)
                    elif isinstance(c, Name):
                        new.update(self.unfold.get(c.name, ()))
                    elif isinstance(c, Forall) and c.role.universal:
                        if c.filler not in state.global_concepts:
                            state.global_concepts.add(c.filler)
                            changed = True
                    elif isinstance(c, Or):
                        if any(op in label for op in c.operands):
                            continue
                        live = [op for op in c.operands if complement(op) not in label]
                        if not live:
                            return False
                        if len(live) == 1:
                            new.add(live[0])
                new -= label
                if new:
                    label |= new
                    changed = True
                for c in [c for c in label if isinstance(c, Forall) and not c.role.universal]:
                    for other in self._neighbours(state, node, c.role):
                        if c.filler not in state.labels[other]:
                            state.labels[other].add(c.filler)
                            changed = True
            if self._merge_one(state):
                changed = True
        return not any(self._clash(label) for label in state.labels.values())

    def _merge_one(self, state: _State) -> bool:
        for role in self.functional:
            for node in sorted(state.labels):
                neighbours = sorted(self._neighbours(state, node, role))
                if len(neighbours) > 1:
                    keep, gone = self._survivor(state, neighbours[0], neighbours[1])
                    self._merge(state, gone, keep)
                    return True
        return False

    @staticmethod
    def _survivor(state: _State, a: int, b: int) -> tuple[int, int]:
        a_root, b_root = a in state.roots, b in state.roots
        if a_root != b_root:
            return (a, b) if a_root else (b, a)
        return (a, b) if a < b else (b, a)

    @staticmethod
    def _merge(state: _State, gone: int, keep: int):
        state.labels[keep] |= state.labels.pop(gone)
        state.edges = {
            (keep if s == gone else s, r, keep if t == gone else t) for s, r, t in state.edges
        }
        for child, parent in list(state.parent.items()):
            if parent == gone:
                state.parent[child] = keep
        state.parent.pop(gone, None)
        if keep in state.roots:
            state.parent.pop(keep, None)
        if gone in state.roots:
            state.roots.discard(gone)
        for ind, node in state.individuals.items():
            if node == gone:
                state.individuals[ind] = keep

    def _generate(self, state: _State) -> bool:
        for node in sorted(state.labels):
            if self._blocked(state, node):
                continue
            created = False
            exists = sorted((c for c in state.labels[node] if isinstance(c, Exists)), key=_sort_key)
            for c in exists:
                if c.role.universal:
                    if not any(c.filler in label for label in state.labels.values()):
                        root = self._new_node(state, {c.filler}, None)
                        state.roots.add(root)
                        created = True
                    continue
                if any(c.filler in state.labels[m] for m in self._neighbours(state, node, c.role)):
                    continue
                child = self._new_node(state, {c.filler}, node)
                if c.role.inverted:
                    state.edges.add((child, c.role.name, node))
                else:
                    state.edges.add((node, c.role.name, child))
                created = True
            if created:
                return True
        return False

    def _pick_branch(self, state: _State):
        for node in sorted(state.labels):
            label = state.labels[node]
            for c in sorted((c for c in label if isinstance(c, Or)), key=_sort_key):
                if any(op in label for op in c.operands):
                    continue
                live = [op for op in c.operands if complement(op) not in label]
                return node, live
        return None

    # -- blocking -------------------------------------------------------------

    def _edge_label(self, state: _State, parent: int, child: int) -> frozenset:
        out = set()
        for s, r, t in state.edges:
            if s == parent and t == child:
                out.add((r, False))
            if s == child and t == parent:
                out.add((r, True))
        return frozenset(out)

    def _ancestors(self, state: _State, node: int) -> list[int]:
        chain = []
        current = state.parent.get(node)
        while current is not None:
            chain.append(current)
            current = state.parent.get(current)
        return chain

    def _blocker(self, state: _State, node: int) -> int | None:
        """The node that directly blocks ``node`` under pairwise blocking, if any."""
        if node in state.roots or node not in state.parent:
            return None
        parent = state.parent[node]
        edge = self._edge_label(state, parent, node)
        for ancestor in self._ancestors(state, node):
            if ancestor in state.roots or ancestor not in state.parent:
                continue
            above = state.parent[ancestor]
            if above in state.roots:
                continue
            if (
                state.labels[ancestor] == state.labels[node]
                and state.labels[above] == state.labels[parent]
                and self._edge_label(state, above, ancestor) == edge
            ):
                return ancestor
        return None

    def _blocked(self, state: _State, node: int) -> bool:
        for candidate in [node] + self._ancestors(state, node):
            if self._blocker(state, candidate) is not None:
                return True
        return False

    # -- model extraction -----------------------------------------------------

    def _extract(self, state: _State) -> Interpretation:
        mapping = {}
        for node in sorted(state.labels):
            ancestors = self._ancestors(state, node)
            if any(self._blocker(state, a) is not None for a in ancestors):
                continue
            blocker = self._blocker(state, node)
            mapping[node] = node if blocker is None else blocker
        concepts: dict = {}
        for node, image in mapping.items():
            if image != node:
                continue
            for c in state.labels[node]:
                if isinstance(c, Name):
                    concepts.setdefault(c.name, set()).add(node)
        roles: dict = {}
        for s, r, t in state.edges:
            if s in mapping and t in mapping:
                roles.setdefault(r, set()).add((mapping[s], mapping[t]))
        roles = _close_roles(roles, self.tbox)
        return Interpretation(
            tuple(sorted(set(mapping.values()))),
            {k: frozenset(v) for k, v in concepts.items()},
            {k: frozenset(v) for k, v in roles.items()},
            {ind: mapping[node] for ind, node in state.individuals.items()},
        )


def _close_roles(roles: dict, tbox: TBox) -> dict:
    """Add the pairs implied by role inclusions to each role name's extension."""
    names = set(roles) | {r.name for pair in tbox.role_inclusions for r in pair}
    closed = {name: set(roles.get(name, ())) for name in names}
    for name in names:
        for other, pairs in roles.items():
            if role_entails(tbox, Role(other), Role(name)):
                closed[name] |= pairs
            if role_entails(tbox, Role(other), Role(name, True)):
                closed[name] |= {(b, a) for a, b in pairs}
    return closed
