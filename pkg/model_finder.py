"""
Bounded finite model search with z3.

For a domain size n the finder builds one Boolean per (concept name, element)
and per (role name, element, element) and one Int per ABox individual, then
asks z3 for an interpretation satisfying the ABox, the TBox and, optionally,
the negation of a UCQ at a given individual. Sizes are tried in increasing
order, so the first model found is a smallest one.
"""

from __future__ import annotations

import logging
from itertools import product

import z3

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
    UCQ,
    signature_of,
)

logger = logging.getLogger(__name__)

DEFAULT_ASSIGNMENT_BUDGET = 200_000


class _Encoding:
    """SAT encoding of "an interpretation with ``size`` elements" for fixed vocabularies."""

    def __init__(self, size: int, individuals: list[str], roles: set[str], seed: int = 0):
        self.size = size
        self.individuals = individuals
        self.solver = z3.Solver()
        self.solver.set("random_seed", seed)
        self._concepts: dict = {}
        self._roles: dict = {}
        self._holds: dict = {}
        self.role_names = sorted(roles)
        self.ind = {a: z3.Int(f"ind_{a}") for a in individuals}
        for i, a in enumerate(individuals):
            self.solver.add(self.ind[a] >= 0, self.ind[a] < size)
            # symmetry breaking: the i-th individual uses one of the first i+1 elements
            self.solver.add(self.ind[a] <= i)

    def concept_var(self, name: str, d: int) -> z3.BoolRef:
        key = (name, d)
        if key not in self._concepts:
            self._concepts[key] = z3.Bool(f"C_{name}_{d}")
        return self._concepts[key]

    def role_var(self, name: str, d: int, e: int) -> z3.BoolRef:
        key = (name, d, e)
        if key not in self._roles:
            self._roles[key] = z3.Bool(f"R_{name}_{d}_{e}")
        return self._roles[key]

    def edge(self, role: Role, d: int, e: int) -> z3.BoolRef:
        if role.inverted:
            return self.role_var(role.name, e, d)
        return self.role_var(role.name, d, e)

    def holds(self, concept: Concept, d: int) -> z3.ExprRef:
        key = (concept, d)
        if key in self._holds:
            return self._holds[key]
        elements = range(self.size)
        if isinstance(concept, Top):
            expr = z3.BoolVal(True)
        elif isinstance(concept, Bottom):
            expr = z3.BoolVal(False)
        elif isinstance(concept, Name):
            expr = self.concept_var(concept.name, d)
        elif isinstance(concept, Not):
            expr = z3.Not(self.holds(concept.operand, d))
        elif isinstance(concept, And):
            expr = z3.And([self.holds(op, d) for op in concept.operands])
        elif isinstance(concept, Or):
            expr = z3.Or([self.holds(op, d) for op in concept.operands])
        elif isinstance(concept, Exists):
            if concept.role.universal:
                expr = z3.Or([self.holds(concept.filler, e) for e in elements])
            else:
                expr = z3.Or([z3.And(self.edge(concept.role, d, e), self.holds(concept.filler, e)) for e in elements])
        elif isinstance(concept, Forall):
            if concept.role.universal:
                expr = z3.And([self.holds(concept.filler, e) for e in elements])
            else:
                expr = z3.And(
                    [z3.Implies(self.edge(concept.role, d, e), self.holds(concept.filler, e)) for e in elements]
                )
        else:
            raise TypeError(f"unknown concept {concept!r}")
        self._holds[key] = expr
        return expr

    def at(self, individual: str, d: int) -> z3.BoolRef:
        return self.ind[individual] == d

    def add_abox(self, abox: ABox):
        elements = range(self.size)
        for concept, a in sorted(abox.concept_assertions, key=str):
            for d in elements:
                self.solver.add(z3.Implies(self.at(a, d), self.holds(concept, d)))
        for r, a, b in sorted(abox.role_assertions):
            for d, e in product(elements, elements):
                self.solver.add(z3.Implies(z3.And(self.at(a, d), self.at(b, e)), self.role_var(r, d, e)))

    def add_tbox(self, tbox: TBox):
        elements = range(self.size)
        for left, right in sorted(tbox.concept_inclusions, key=str):
            for d in elements:
                self.solver.add(z3.Implies(self.holds(left, d), self.holds(right, d)))
        for sub, sup in sorted(tbox.role_inclusions, key=str):
            for d, e in product(elements, elements):
                self.solver.add(z3.Implies(self.edge(sub, d, e), self.edge(sup, d, e)))
        for role in sorted(tbox.functional, key=str):
            for d in elements:
                for e1 in elements:
                    for e2 in range(e1 + 1, self.size):
                        self.solver.add(z3.Not(z3.And(self.edge(role, d, e1), self.edge(role, d, e2))))

    def avoid_query(self, query: UCQ, individual: str, budget: int):
        """No disjunct of ``query`` matches with its answer variable on ``individual``."""
        elements = list(range(self.size))
        spent = 0
        for cq in query.disjuncts:
            others = [v for v in cq.sorted_variables() if v != cq.answer_var]
            for d in elements:
                for values in product(elements, repeat=len(others)):
                    spent += 1
                    if spent > budget:
                        raise ResourceLimitExceeded("query assignments", budget)
                    env = dict(zip(others, values))
                    env[cq.answer_var] = d
                    atoms = []
                    for atom in cq.role_atoms:
                        atoms.append(self.role_var(atom.role, env[atom.source], env[atom.target]))
                    for atom in cq.concept_atoms:
                        atoms.append(self.holds(atom.concept, env[atom.var]))
                    self.solver.add(z3.Implies(self.at(individual, d), z3.Not(z3.And(atoms))))

    def solve(self, timeout_ms: int | None) -> Interpretation | None:
        if timeout_ms is not None:
            self.solver.set("timeout", max(1, int(timeout_ms)))
        result = self.solver.check()
        if result == z3.unknown:
            raise ResourceLimitExceeded("model search time (ms)", timeout_ms or 0)
        if result == z3.unsat:
            return None
        model = self.solver.model()
        concepts: dict = {}
        for (name, d), var in self._concepts.items():
            if z3.is_true(model.eval(var, model_completion=True)):
                concepts.setdefault(name, set()).add(d)
        roles: dict = {}
        for (name, d, e), var in self._roles.items():
            if z3.is_true(model.eval(var, model_completion=True)):
                roles.setdefault(name, set()).add((d, e))
        individuals = {a: model.eval(v, model_completion=True).as_long() for a, v in self.ind.items()}
        return Interpretation(
            tuple(range(self.size)),
            {k: frozenset(v) for k, v in concepts.items()},
            {k: frozenset(v) for k, v in roles.items()},
            individuals,
        )


def _roles_of(abox: ABox, tbox: TBox, query=None) -> set[str]:
    roles = set(signature_of(tbox).roles) | signature_of(abox).roles
    if query is not None:
        roles |= signature_of(query).roles
    return roles


def find_model(
    abox: ABox,
    tbox: TBox,
    max_extra: int,
    avoid: tuple[UCQ, str] | None = None,
    deadline=None,
    assignment_budget: int = DEFAULT_ASSIGNMENT_BUDGET,
    seed: int = 0,
) -> Interpretation | None:
    """Smallest model of ``abox`` and ``tbox`` with at most |ind| + max_extra elements.

    With ``avoid=(q, a)`` the model must also falsify q at individual a. Returns
    None when no such model exists within the bound.
    """
    individuals = list(abox.individuals)
    query = avoid[0] if avoid else None
    roles = _roles_of(abox, tbox, query)
    upper = max(1, len(individuals) + max_extra)
    for size in range(1, upper + 1):
        if deadline is not None and deadline.expired():
            raise ResourceLimitExceeded("model search deadline (s)", deadline.seconds)
        encoding = _Encoding(size, individuals, roles, seed)
        encoding.add_abox(abox)
        encoding.add_tbox(tbox)
        if avoid is not None:
            encoding.avoid_query(query, avoid[1], assignment_budget)
        timeout = deadline.remaining_ms() if deadline is not None else None
        model = encoding.solve(timeout)
        if model is not None:
            logger.debug(f"model of size {size} found")
            return model
    return None


def find_countermodel(abox, tbox, query: UCQ, individual: str, max_extra: int, **kwargs) -> Interpretation | None:
    """A model of ``abox`` and ``tbox`` in which ``individual`` is not an answer to ``query``."""
    return find_model(abox, tbox, max_extra, avoid=(query, individual), **kwargs)
