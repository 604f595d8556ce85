"""
Finite interpretations: concept extensions, model checking and query answers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from syntax import (
    ABox,
    And,
    Bottom,
    Concept,
    Exists,
    Forall,
    IQ,
    Name,
    Not,
    Or,
    Role,
    TBox,
    Top,
    as_ucq,
)

logger = logging.getLogger(__name__)


@dataclass
class Interpretation:
    domain: tuple
    concepts: dict = field(default_factory=dict)  # name -> frozenset of elements
    roles: dict = field(default_factory=dict)  # name -> frozenset of pairs
    individuals: dict = field(default_factory=dict)  # individual -> element

    def __post_init__(self):
        self.domain = tuple(sorted(set(self.domain), key=str))
        self._cache: dict = {}

    def role_pairs(self, role: Role) -> frozenset:
        if role.universal:
            return frozenset((d, e) for d in self.domain for e in self.domain)
        pairs = self.roles.get(role.name, frozenset())
        if role.inverted:
            return frozenset((b, a) for a, b in pairs)
        return frozenset(pairs)

    def successors(self, role: Role, element) -> set:
        return {b for a, b in self.role_pairs(role) if a == element}

    def extension(self, concept: Concept) -> frozenset:
        if concept in self._cache:
            return self._cache[concept]
        domain = frozenset(self.domain)
        if isinstance(concept, Top):
            ext = domain
        elif isinstance(concept, Bottom):
            ext = frozenset()
        elif isinstance(concept, Name):
            ext = frozenset(self.concepts.get(concept.name, ())) & domain
        elif isinstance(concept, Not):
            ext = domain - self.extension(concept.operand)
        elif isinstance(concept, And):
            ext = domain
            for op in concept.operands:
                ext &= self.extension(op)
        elif isinstance(concept, Or):
            ext = frozenset()
            for op in concept.operands:
                ext |= self.extension(op)
        elif isinstance(concept, Exists):
            filler = self.extension(concept.filler)
            if concept.role.universal:
                ext = domain if filler else frozenset()
            else:
                ext = frozenset(a for a, b in self.role_pairs(concept.role) if b in filler)
        elif isinstance(concept, Forall):
            filler = self.extension(concept.filler)
            if concept.role.universal:
                ext = domain if filler == domain else frozenset()
            else:
                bad = {a for a, b in self.role_pairs(concept.role) if b not in filler}
                ext = domain - bad
        else:
            raise TypeError(f"unknown concept {concept!r}")
        self._cache[concept] = ext
        return ext

    def violations(self, abox: ABox, tbox: TBox) -> list[str]:
        """Human-readable list of every assertion or axiom the interpretation breaks."""
        found = []
        for ind in abox.individuals:
            if ind not in self.individuals:
                found.append(f"individual {ind} unmapped")
        if found:
            return found
        for concept, ind in sorted(abox.concept_assertions, key=str):
            if self.individuals[ind] not in self.extension(concept):
                found.append(f"{concept}({ind})")
        for r, a, b in sorted(abox.role_assertions):
            if (self.individuals[a], self.individuals[b]) not in self.roles.get(r, ()):
                found.append(f"{r}({a},{b})")
        for left, right in sorted(tbox.concept_inclusions, key=str):
            if not self.extension(left) <= self.extension(right):
                found.append(f"{left} sub {right}")
        for sub, sup in sorted(tbox.role_inclusions, key=str):
            if not self.role_pairs(sub) <= self.role_pairs(sup):
                found.append(f"role {sub} sub {sup}")
        for role in sorted(tbox.functional, key=str):
            targets: dict = {}
            for a, b in self.role_pairs(role):
                targets.setdefault(a, set()).add(b)
            if any(len(t) > 1 for t in targets.values()):
                found.append(f"func({role})")
        return found

    def is_model(self, abox: ABox, tbox: TBox) -> bool:
        return not self.violations(abox, tbox)

    def answers(self, query) -> frozenset:
        """Elements answering ``query`` (a CQ/UCQ by homomorphism, an IQ by extension)."""
        if isinstance(query, IQ):
            ext = self.extension(query.concept)
            if query.boolean:
                return frozenset(self.domain) if ext else frozenset()
            return ext
        from query_structure import homomorphisms

        found = set()
        for cq in as_ucq(query).disjuncts:
            for match in homomorphisms(cq, self):
                found.add(match[cq.answer_var])
        return frozenset(found)

    def satisfies_at(self, query, element) -> bool:
        if isinstance(query, IQ):
            return element in self.answers(query)
        from query_structure import homomorphism

        return any(
            homomorphism(cq, self, {cq.answer_var: element}) is not None
            for cq in as_ucq(query).disjuncts
        )

    def to_dict(self) -> dict:
        return {
            "domain": [str(d) for d in self.domain],
            "concepts": {k: sorted(str(d) for d in v) for k, v in sorted(self.concepts.items()) if v},
            "roles": {k: sorted([str(a), str(b)] for a, b in v) for k, v in sorted(self.roles.items()) if v},
            "individuals": {k: str(v) for k, v in sorted(self.individuals.items())},
        }


def abox_interpretation(abox: ABox) -> Interpretation:
    """The ABox read as an interpretation (each individual is its own element)."""
    concepts: dict = {}
    for concept, ind in abox.concept_assertions:
        if isinstance(concept, Name):
            concepts.setdefault(concept.name, set()).add(ind)
    roles: dict = {}
    for r, a, b in abox.role_assertions:
        roles.setdefault(r, set()).add((a, b))
    return Interpretation(
        abox.individuals,
        {k: frozenset(v) for k, v in concepts.items()},
        {k: frozenset(v) for k, v in roles.items()},
        {a: a for a in abox.individuals},
    )
