"""
Abstract syntax, parsing and printing for concepts, TBoxes, ABoxes, (U)CQs,
IQs and OMQs.

Every object is an immutable (frozen) dataclass. Constructors normalise:
role atoms are stored with a plain role name, conjunctions/disjunctions are
flattened, deduplicated and sorted by rendered text, and the universal role
is never inverted.
"""

from __future__ import annotations

import re
import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import count
from typing import Iterable, Union

import networkx as nx
from lark import Lark, Transformer, UnexpectedInput, v_args

from errors import DialectViolation, ParseError, ReservedNameError

logger = logging.getLogger(__name__)

RESERVED_PREFIX = "@"
UNIVERSAL = "u"


# ---------------------------------------------------------------------------
# Roles
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Role:
    name: str
    inverted: bool = False

    def __post_init__(self):
        if self.name == UNIVERSAL and self.inverted:
            object.__setattr__(self, "inverted", False)

    @property
    def universal(self) -> bool:
        return self.name == UNIVERSAL

    def inverse(self) -> "Role":
        return Role(self.name, not self.inverted)

    def __str__(self) -> str:
        return f"{self.name}-" if self.inverted else self.name


UNIVERSAL_ROLE = Role(UNIVERSAL)


# ---------------------------------------------------------------------------
# Concepts
# ---------------------------------------------------------------------------

class Concept:
    """Base class of the concept AST."""

    def __str__(self) -> str:
        return render_concept(self)


@dataclass(frozen=True)
class Top(Concept):
    pass


@dataclass(frozen=True)
class Bottom(Concept):
    pass


@dataclass(frozen=True)
class Name(Concept):
    name: str


@dataclass(frozen=True)
class Not(Concept):
    operand: Concept


@dataclass(frozen=True)
class And(Concept):
    operands: tuple


@dataclass(frozen=True)
class Or(Concept):
    operands: tuple


@dataclass(frozen=True)
class Exists(Concept):
    role: Role
    filler: Concept


@dataclass(frozen=True)
class Forall(Concept):
    role: Role
    filler: Concept


TOP = Top()
BOTTOM = Bottom()

# the str() of a concept is used as sort key everywhere, so cache it
_render_cache: dict = {}


def _flatten(kind, concepts: Iterable[Concept]) -> list[Concept]:
    flat: list[Concept] = []
    for c in concepts:
        if isinstance(c, kind):
            flat.extend(c.operands)
        else:
            flat.append(c)
    return flat


def make_and(*concepts: Concept) -> Concept:
    """n-ary conjunction with ⊤-absorption, ⊥-dominance, dedup and canonical order."""
    ops = [c for c in _flatten(And, concepts) if not isinstance(c, Top)]
    if any(isinstance(c, Bottom) for c in ops):
        return BOTTOM
    unique = {render_concept(c): c for c in ops}
    if not unique:
        return TOP
    if len(unique) == 1:
        return next(iter(unique.values()))
    return And(tuple(unique[k] for k in sorted(unique)))


def make_or(*concepts: Concept) -> Concept:
    """n-ary disjunction with ⊥-absorption, ⊤-dominance, dedup and canonical order."""
    ops = [c for c in _flatten(Or, concepts) if not isinstance(c, Bottom)]
    if any(isinstance(c, Top) for c in ops):
        return TOP
    unique = {render_concept(c): c for c in ops}
    if not unique:
        return BOTTOM
    if len(unique) == 1:
        return next(iter(unique.values()))
    return Or(tuple(unique[k] for k in sorted(unique)))


def implies(premise: Concept, conclusion: Concept) -> Concept:
    """C → D, which is sugar for ¬C ⊔ D."""
    return make_or(Not(premise), conclusion)


def nnf(concept: Concept) -> Concept:
    """Negation normal form: negation only in front of concept names."""
    if isinstance(concept, (Top, Bottom, Name)):
        return concept
    if isinstance(concept, And):
        return make_and(*(nnf(c) for c in concept.operands))
    if isinstance(concept, Or):
        return make_or(*(nnf(c) for c in concept.operands))
    if isinstance(concept, Exists):
        return Exists(concept.role, nnf(concept.filler))
    if isinstance(concept, Forall):
        return Forall(concept.role, nnf(concept.filler))
    inner = concept.operand
    if isinstance(inner, Top):
        return BOTTOM
    if isinstance(inner, Bottom):
        return TOP
    if isinstance(inner, Name):
        return concept
    if isinstance(inner, Not):
        return nnf(inner.operand)
    if isinstance(inner, And):
        return make_or(*(nnf(Not(c)) for c in inner.operands))
    if isinstance(inner, Or):
        return make_and(*(nnf(Not(c)) for c in inner.operands))
    if isinstance(inner, Exists):
        return Forall(inner.role, nnf(Not(inner.filler)))
    return Exists(inner.role, nnf(Not(inner.filler)))


def subconcepts(concept: Concept) -> set[Concept]:
    """All subconcepts, the concept itself included."""
    found = {concept}
    if isinstance(concept, Not):
        found |= subconcepts(concept.operand)
    elif isinstance(concept, (And, Or)):
        for c in concept.operands:
            found |= subconcepts(c)
    elif isinstance(concept, (Exists, Forall)):
        found |= subconcepts(concept.filler)
    return found


def concept_size(concept: Concept) -> int:
    """Number of constructor nodes."""
    if isinstance(concept, Not):
        return 1 + concept_size(concept.operand)
    if isinstance(concept, (And, Or)):
        return 1 + sum(concept_size(c) for c in concept.operands)
    if isinstance(concept, (Exists, Forall)):
        return 1 + concept_size(concept.filler)
    return 1


def replace_subconcept(concept: Concept, old: Concept, new: Concept) -> Concept:
    """Replace every occurrence of ``old`` inside ``concept`` by ``new``."""
    if concept == old:
        return new
    if isinstance(concept, Not):
        return Not(replace_subconcept(concept.operand, old, new))
    if isinstance(concept, And):
        return make_and(*(replace_subconcept(c, old, new) for c in concept.operands))
    if isinstance(concept, Or):
        return make_or(*(replace_subconcept(c, old, new) for c in concept.operands))
    if isinstance(concept, Exists):
        return Exists(concept.role, replace_subconcept(concept.filler, old, new))
    if isinstance(concept, Forall):
        return Forall(concept.role, replace_subconcept(concept.filler, old, new))
    return concept


def uses_inverse(concept: Concept) -> bool:
    return any(
        isinstance(c, (Exists, Forall)) and c.role.inverted for c in subconcepts(concept)
    )


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConceptAtom:
    concept: Concept
    var: str

    @property
    def variables(self) -> tuple[str, ...]:
        return (self.var,)


@dataclass(frozen=True)
class RoleAtom:
    role: str
    source: str
    target: str

    @property
    def variables(self) -> tuple[str, ...]:
        return (self.source, self.target)


Atom = Union[ConceptAtom, RoleAtom]


def role_atom(role: Role, source: str, target: str) -> RoleAtom:
    """Atom R(source, target) stored with a plain role name (r⁻(y,x) becomes r(x,y))."""
    if role.universal:
        raise ParseError("the universal role cannot occur in query atoms")
    if role.inverted:
        return RoleAtom(role.name, target, source)
    return RoleAtom(role.name, source, target)


def atom_key(atom: Atom) -> str:
    return render_atom(atom)


@dataclass(frozen=True)
class CQ:
    answer_var: str
    atoms: frozenset

    @property
    def variables(self) -> frozenset[str]:
        found = {self.answer_var}
        for atom in self.atoms:
            found.update(atom.variables)
        return frozenset(found)

    @property
    def role_atoms(self) -> list[RoleAtom]:
        return sorted((a for a in self.atoms if isinstance(a, RoleAtom)), key=atom_key)

    @property
    def concept_atoms(self) -> list[ConceptAtom]:
        return sorted((a for a in self.atoms if isinstance(a, ConceptAtom)), key=atom_key)

    @property
    def sorted_atoms(self) -> list[Atom]:
        return sorted(self.atoms, key=atom_key)

    @property
    def is_plain(self) -> bool:
        """True unless some concept atom is compound (an eCQ)."""
        return all(isinstance(a.concept, Name) for a in self.concept_atoms)

    def sorted_variables(self) -> list[str]:
        """Answer variable first, then the others alphabetically."""
        rest = sorted(v for v in self.variables if v != self.answer_var)
        return [self.answer_var] + rest

    def __str__(self) -> str:
        return render_cq(self)


def make_cq(answer_var: str, atoms: Iterable[Atom]) -> CQ:
    return CQ(answer_var, frozenset(atoms))


@dataclass(frozen=True)
class UCQ:
    answer_var: str
    disjuncts: tuple

    def __str__(self) -> str:
        return render_ucq(self)


def make_ucq(disjuncts: Iterable[CQ], answer_var: str | None = None) -> UCQ:
    """Deduplicate disjuncts (by atom set) and sort them canonically."""
    items = list(disjuncts)
    if answer_var is None:
        if not items:
            raise ValueError("answer variable needed for an empty UCQ")
        answer_var = items[0].answer_var
    unique = {}
    for cq in items:
        if cq.answer_var != answer_var:
            raise ValueError(f"disjunct {cq} does not use answer variable {answer_var}")
        unique.setdefault(render_cq(cq), cq)
    return UCQ(answer_var, tuple(unique[k] for k in sorted(unique)))


def as_ucq(query: Union[CQ, UCQ]) -> UCQ:
    if isinstance(query, UCQ):
        return query
    return UCQ(query.answer_var, (query,))


@dataclass(frozen=True)
class IQ:
    """Instance query C(x); ``variable`` None means the Boolean query ∃x C(x)."""

    concept: Concept
    variable: str | None = "x"

    @property
    def boolean(self) -> bool:
        return self.variable is None

    def __str__(self) -> str:
        return render_iq(self)


# ---------------------------------------------------------------------------
# TBox, ABox, signatures, dialects, OMQs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TBox:
    concept_inclusions: frozenset = frozenset()
    role_inclusions: frozenset = frozenset()
    functional: frozenset = frozenset()

    def is_empty(self) -> bool:
        return not (self.concept_inclusions or self.role_inclusions or self.functional)

    def functionality_only(self) -> bool:
        return not self.concept_inclusions and not self.role_inclusions

    def is_functional(self, role: Role) -> bool:
        return role in self.functional

    def extend(self, concept_inclusions=(), role_inclusions=(), functional=()) -> "TBox":
        return TBox(
            self.concept_inclusions | frozenset(concept_inclusions),
            self.role_inclusions | frozenset(role_inclusions),
            self.functional | frozenset(functional),
        )

    def __str__(self) -> str:
        return render_tbox(self)


EMPTY_TBOX = TBox()


@dataclass(frozen=True)
class ABox:
    concept_assertions: frozenset = frozenset()
    role_assertions: frozenset = frozenset()

    @property
    def individuals(self) -> tuple[str, ...]:
        found = {a for _, a in self.concept_assertions}
        for _, a, b in self.role_assertions:
            found.update((a, b))
        return tuple(sorted(found))

    @property
    def extended(self) -> bool:
        """True for an eABox (some assertion uses a compound concept)."""
        return any(not isinstance(c, Name) for c, _ in self.concept_assertions)

    def add(self, concept_assertions=(), role_assertions=()) -> "ABox":
        return ABox(
            self.concept_assertions | frozenset(concept_assertions),
            self.role_assertions | frozenset(role_assertions),
        )

    def __len__(self) -> int:
        return len(self.concept_assertions) + len(self.role_assertions)

    def __str__(self) -> str:
        return render_abox(self)


@dataclass(frozen=True)
class Signature:
    concepts: frozenset = frozenset()
    roles: frozenset = frozenset()

    def __or__(self, other: "Signature") -> "Signature":
        return Signature(self.concepts | other.concepts, self.roles | other.roles)

    def __le__(self, other: "Signature") -> bool:
        return self.concepts <= other.concepts and self.roles <= other.roles

    @property
    def names(self) -> frozenset[str]:
        return self.concepts | self.roles

    def is_empty(self) -> bool:
        return not self.concepts and not self.roles

    def __str__(self) -> str:
        return render_signature(self)


_DIALECT_RE = re.compile(r"^alc(h?)(i?)(f?)(\+u)?$")


@dataclass(frozen=True)
class Dialect:
    inverse: bool = False
    hierarchy: bool = False
    functional: bool = False
    universal: bool = False

    @classmethod
    def parse(cls, tag: str) -> "Dialect":
        match = _DIALECT_RE.match(tag.strip().lower())
        if not match:
            raise ParseError(f"unknown dialect '{tag}'")
        h, i, f, u = match.groups()
        return cls(inverse=bool(i), hierarchy=bool(h), functional=bool(f), universal=bool(u))

    @property
    def tag(self) -> str:
        return (
            "alc"
            + ("h" if self.hierarchy else "")
            + ("i" if self.inverse else "")
            + ("f" if self.functional else "")
            + ("+u" if self.universal else "")
        )

    def __str__(self) -> str:
        return self.tag


FULL_DIALECT = Dialect(True, True, True, True)


@dataclass(frozen=True)
class OMQ:
    tbox: TBox
    sigma: Signature
    query: Union[UCQ, IQ]
    dialect: Dialect = FULL_DIALECT

    def with_query(self, query) -> "OMQ":
        return OMQ(self.tbox, self.sigma, query, self.dialect)

    def __str__(self) -> str:
        return render_omq(self)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def render_concept(concept: Concept) -> str:
    cached = _render_cache.get(concept)
    if cached is not None:
        return cached
    if isinstance(concept, Top):
        text = "top"
    elif isinstance(concept, Bottom):
        text = "bot"
    elif isinstance(concept, Name):
        text = concept.name
    elif isinstance(concept, Not):
        text = f"not {render_concept(concept.operand)}"
    elif isinstance(concept, And):
        text = "(" + " and ".join(sorted(render_concept(c) for c in concept.operands)) + ")"
    elif isinstance(concept, Or):
        text = "(" + " or ".join(sorted(render_concept(c) for c in concept.operands)) + ")"
    elif isinstance(concept, Exists):
        text = f"exists {concept.role}. {render_concept(concept.filler)}"
    elif isinstance(concept, Forall):
        text = f"forall {concept.role}. {render_concept(concept.filler)}"
    else:
        raise TypeError(f"not a concept: {concept!r}")
    if len(_render_cache) > 200_000:
        _render_cache.clear()
    _render_cache[concept] = text
    return text


def render_atom(atom: Atom) -> str:
    if isinstance(atom, RoleAtom):
        return f"{atom.role}({atom.source},{atom.target})"
    if isinstance(atom.concept, Name):
        return f"{atom.concept.name}({atom.var})"
    return f"[{render_concept(atom.concept)}]({atom.var})"


def render_cq(cq: CQ, head: str = "q") -> str:
    if not cq.atoms:
        return f"{head}({cq.answer_var}) :- true."
    body = ", ".join(render_atom(a) for a in cq.sorted_atoms)
    return f"{head}({cq.answer_var}) :- {body}."


def render_ucq(ucq: UCQ) -> str:
    if not ucq.disjuncts:
        return f"# empty union over answer variable {ucq.answer_var}"
    return "\n".join(render_cq(cq) for cq in ucq.disjuncts)


def render_iq(iq: IQ) -> str:
    var = iq.variable or ""
    return f"q({var}) := {render_concept(iq.concept)}."


def render_tbox(tbox: TBox) -> str:
    lines = sorted(f"{render_concept(c)} sub {render_concept(d)}" for c, d in tbox.concept_inclusions)
    lines += sorted(f"role {s} sub {r}" for s, r in tbox.role_inclusions)
    lines += sorted(f"func({r})" for r in tbox.functional)
    return "\n".join(lines)


def render_abox(abox: ABox) -> str:
    lines = [render_atom(ConceptAtom(c, a)) for c, a in abox.concept_assertions]
    lines += [f"{r}({a},{b})" for r, a, b in abox.role_assertions]
    return "\n".join(sorted(lines))


def render_signature(sigma: Signature) -> str:
    items = [f"{c}/1" for c in sigma.concepts] + [f"{r}/2" for r in sigma.roles]
    return ", ".join(sorted(items))


def render_omq(omq: OMQ) -> str:
    parts = [f"[dialect] {omq.dialect.tag}", f"[sigma] {render_signature(omq.sigma)}".rstrip()]
    parts.append("[tbox]")
    tbox_text = render_tbox(omq.tbox)
    if tbox_text:
        parts.append(tbox_text)
    parts.append("[query]")
    parts.append(render_query(omq.query))
    return "\n".join(parts) + "\n"


def render_query(query) -> str:
    if isinstance(query, IQ):
        return render_iq(query)
    if isinstance(query, CQ):
        return render_cq(query)
    return render_ucq(query)


def render(obj) -> str:
    """Deterministic canonical text for any syntax object."""
    if isinstance(obj, Concept):
        return render_concept(obj)
    if isinstance(obj, Role):
        return str(obj)
    if isinstance(obj, (ConceptAtom, RoleAtom)):
        return render_atom(obj)
    if isinstance(obj, (CQ, UCQ, IQ)):
        return render_query(obj)
    if isinstance(obj, TBox):
        return render_tbox(obj)
    if isinstance(obj, ABox):
        return render_abox(obj)
    if isinstance(obj, Signature):
        return render_signature(obj)
    if isinstance(obj, Dialect):
        return obj.tag
    if isinstance(obj, OMQ):
        return render_omq(obj)
    if hasattr(obj, "render"):
        return obj.render()
    raise TypeError(f"cannot render {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Signatures and dialect validation
# ---------------------------------------------------------------------------

def _concept_signature(concept: Concept) -> Signature:
    concepts, roles = set(), set()
    for c in subconcepts(concept):
        if isinstance(c, Name):
            concepts.add(c.name)
        elif isinstance(c, (Exists, Forall)) and not c.role.universal:
            roles.add(c.role.name)
    return Signature(frozenset(concepts), frozenset(roles))


def signature_of(obj) -> Signature:
    """Concept and role names occurring in ``obj`` (role names without inversion marks)."""
    sig = Signature()
    if isinstance(obj, Concept):
        return _concept_signature(obj)
    if isinstance(obj, Role):
        return Signature(roles=frozenset() if obj.universal else frozenset({obj.name}))
    if isinstance(obj, ConceptAtom):
        return _concept_signature(obj.concept)
    if isinstance(obj, RoleAtom):
        return Signature(roles=frozenset({obj.role}))
    if isinstance(obj, CQ):
        for atom in obj.atoms:
            sig = sig | signature_of(atom)
        return sig
    if isinstance(obj, UCQ):
        for cq in obj.disjuncts:
            sig = sig | signature_of(cq)
        return sig
    if isinstance(obj, IQ):
        return _concept_signature(obj.concept)
    if isinstance(obj, TBox):
        for c, d in obj.concept_inclusions:
            sig = sig | _concept_signature(c) | _concept_signature(d)
        for s, r in obj.role_inclusions:
            sig = sig | signature_of(s) | signature_of(r)
        for r in obj.functional:
            sig = sig | signature_of(r)
        return sig
    if isinstance(obj, ABox):
        for c, _ in obj.concept_assertions:
            sig = sig | _concept_signature(c)
        return sig | Signature(roles=frozenset(r for r, _, _ in obj.role_assertions))
    if isinstance(obj, OMQ):
        return signature_of(obj.tbox) | signature_of(obj.query)
    if isinstance(obj, Signature):
        return obj
    raise TypeError(f"no signature for {type(obj).__name__}")


_VIOLATION_ORDER = ("inverse role", "universal role", "role inclusion", "functionality")


def _constructs(obj) -> set[str]:
    found: set[str] = set()
    concepts: list[Concept] = []
    if isinstance(obj, Concept):
        concepts = [obj]
    elif isinstance(obj, IQ):
        concepts = [obj.concept]
    elif isinstance(obj, ConceptAtom):
        concepts = [obj.concept]
    elif isinstance(obj, CQ):
        concepts = [a.concept for a in obj.concept_atoms]
    elif isinstance(obj, UCQ):
        concepts = [a.concept for cq in obj.disjuncts for a in cq.concept_atoms]
    elif isinstance(obj, ABox):
        concepts = [c for c, _ in obj.concept_assertions]
    elif isinstance(obj, TBox):
        concepts = [c for pair in obj.concept_inclusions for c in pair]
        if obj.role_inclusions:
            found.add("role inclusion")
        if obj.functional:
            found.add("functionality")
        roles = [r for pair in obj.role_inclusions for r in pair] + list(obj.functional)
        if any(r.inverted for r in roles):
            found.add("inverse role")
    elif isinstance(obj, OMQ):
        return _constructs(obj.tbox) | _constructs(obj.query)
    for concept in concepts:
        for c in subconcepts(concept):
            if isinstance(c, (Exists, Forall)):
                if c.role.universal:
                    found.add("universal role")
                elif c.role.inverted:
                    found.add("inverse role")
    return found


def validate_dialect(obj, dialect: Dialect) -> list[str]:
    """Every construct ``obj`` uses that ``dialect`` forbids; empty list means ok."""
    allowed = {
        "inverse role": dialect.inverse,
        "universal role": dialect.universal,
        "role inclusion": dialect.hierarchy,
        "functionality": dialect.functional,
    }
    used = _constructs(obj)
    return [v for v in _VIOLATION_ORDER if v in used and not allowed[v]]


def minimal_dialect(*objects) -> Dialect:
    used: set[str] = set()
    for obj in objects:
        used |= _constructs(obj)
    return Dialect(
        inverse="inverse role" in used,
        hierarchy="role inclusion" in used,
        functional="functionality" in used,
        universal="universal role" in used,
    )


# ---------------------------------------------------------------------------
# Role hierarchy
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _role_closure(role_inclusions: frozenset) -> dict:
    graph = nx.DiGraph()
    for sub, sup in role_inclusions:
        graph.add_edge(sub, sup)
        graph.add_edge(sub.inverse(), sup.inverse())
    return {node: nx.descendants(graph, node) for node in graph.nodes}


def role_entails(tbox: TBox, sub: Role, sup: Role) -> bool:
    """T ⊨ sub ⊑ sup under the reflexive-transitive closure with inverse lifting."""
    if sub == sup:
        return True
    return sup in _role_closure(tbox.role_inclusions).get(sub, ())


def sub_roles(tbox: TBox, sup: Role, candidates: Iterable[Role]) -> list[Role]:
    return sorted(r for r in candidates if role_entails(tbox, r, sup))


# ---------------------------------------------------------------------------
# Fresh names
# ---------------------------------------------------------------------------

def fresh_names(signatures: Iterable[Signature], n: int, tag: str) -> list[str]:
    """``n`` names "@tag0", "@tag1", … avoiding every name in ``signatures``."""
    taken: set[str] = set()
    for sig in signatures:
        taken |= sig.names
    names: list[str] = []
    for i in count():
        if len(names) == n:
            break
        candidate = f"{RESERVED_PREFIX}{tag}{i}"
        if candidate not in taken:
            names.append(candidate)
    return names


class NameSupply:
    """Per-construction counter handing out fresh names, one sequence per tag."""

    def __init__(self, *signatures: Signature):
        self._taken: set[str] = set()
        for sig in signatures:
            self._taken |= sig.names
        self._counters: dict[str, int] = {}
        self.issued: list[str] = []

    def next(self, tag: str) -> str:
        i = self._counters.get(tag, 0)
        while f"{RESERVED_PREFIX}{tag}{i}" in self._taken:
            i += 1
        self._counters[tag] = i + 1
        name = f"{RESERVED_PREFIX}{tag}{i}"
        self._taken.add(name)
        self.issued.append(name)
        return name


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

GRAMMAR = r"""
    concept_text: concept

    ?concept: "top"                            -> top
            | "bot"                            -> bot
            | NAME                             -> name
            | "not" concept                    -> negation
            | "exists" role "." concept        -> exists
            | "forall" role "." concept        -> forall
            | "(" concept ("and" concept)+ ")" -> conj
            | "(" concept ("or" concept)+ ")"  -> disj
            | "(" concept "->" concept ")"     -> implication
            | "(" concept ")"

    role: NAME                                 -> plain_role
        | NAME INV                             -> inverse_role

    tbox_line: "func" "(" role ")"             -> functionality
             | "role" role "sub" role          -> role_inclusion
             | NAME INV "sub" role             -> inverse_role_inclusion
             | concept "sub" NAME INV          -> role_inclusion_to_inverse
             | concept "sub" concept           -> concept_inclusion

    abox_line: NAME "(" NAME ")"               -> name_assertion
             | NAME "(" NAME "," NAME ")"      -> role_assertion
             | "[" concept "]" "(" NAME ")"    -> compound_assertion

    query_line: NAME "(" [NAME] ")" ":-" body "."     -> cq_line
              | NAME "(" [NAME] ")" ":=" concept "."  -> iq_line

    body: "true"                               -> empty_body
        | atom ("," atom)* [","]               -> atoms

    atom: NAME "(" NAME ")"                    -> concept_atom
        | NAME "(" NAME "," NAME ")"           -> plain_role_atom
        | NAME INV "(" NAME "," NAME ")"       -> inverse_role_atom
        | "[" concept "]" "(" NAME ")"         -> compound_atom

    sigma_line: "full"                         -> sigma_full
              | sigma_item ("," sigma_item)*   -> sigma_items

    sigma_item: NAME ["/" ARITY]

    ARITY: "1" | "2"
    INV: "-"
    NAME: /@?[a-zA-Z][a-zA-Z0-9_]*/

    %import common.WS_INLINE
    %ignore WS_INLINE
"""

_STARTS = ["concept_text", "tbox_line", "abox_line", "query_line", "sigma_line"]


@v_args(inline=True)
class SyntaxTreeTransformer(Transformer):
    """Turns parse trees into syntax objects (tbox lines become tagged tuples)."""

    def concept_text(self, c):
        return c

    def top(self):
        return TOP

    def bot(self):
        return BOTTOM

    def name(self, token):
        return Name(str(token))

    def negation(self, c):
        return Not(c)

    def exists(self, role, c):
        return Exists(role, c)

    def forall(self, role, c):
        return Forall(role, c)

    def conj(self, *cs):
        return make_and(*cs)

    def disj(self, *cs):
        return make_or(*cs)

    def implication(self, c, d):
        return implies(c, d)

    def plain_role(self, token):
        return Role(str(token))

    def inverse_role(self, token, _inv):
        return Role(str(token), True)

    # tbox lines
    def functionality(self, role):
        return ("func", role)

    def role_inclusion(self, sub, sup):
        return ("role", sub, sup)

    def inverse_role_inclusion(self, token, _inv, sup):
        return ("role", Role(str(token), True), sup)

    def role_inclusion_to_inverse(self, sub, token, _inv):
        if not isinstance(sub, Name):
            raise ParseError("left side of a role inclusion must be a role")
        return ("role", Role(sub.name), Role(str(token), True))

    def concept_inclusion(self, c, d):
        if isinstance(c, Name) and isinstance(d, Name):
            return ("ambiguous", c.name, d.name)
        return ("concept", c, d)

    # abox lines
    def name_assertion(self, concept, individual):
        return ("concept", Name(str(concept)), str(individual))

    def role_assertion(self, role, a, b):
        return ("role", str(role), str(a), str(b))

    def compound_assertion(self, concept, individual):
        return ("concept", concept, str(individual))

    # query lines
    def cq_line(self, head, var, body):
        return ("cq", str(head), str(var) if var is not None else None, body)

    def iq_line(self, head, var, concept):
        return ("iq", str(head), str(var) if var is not None else None, concept)

    def empty_body(self):
        return []

    def atoms(self, *items):
        return [a for a in items if a is not None]

    def concept_atom(self, concept, var):
        return ConceptAtom(Name(str(concept)), str(var))

    def plain_role_atom(self, role, a, b):
        return role_atom(Role(str(role)), str(a), str(b))

    def inverse_role_atom(self, role, _inv, a, b):
        return role_atom(Role(str(role), True), str(a), str(b))

    def compound_atom(self, concept, var):
        return ConceptAtom(concept, str(var))

    # sigma
    def sigma_full(self):
        return "full"

    def sigma_items(self, *items):
        return list(items)

    def sigma_item(self, token, arity):
        return (str(token), int(arity) if arity is not None else None)


_parser = Lark(GRAMMAR, start=_STARTS, parser="lalr", maybe_placeholders=True)
_transformer = SyntaxTreeTransformer()
_RESERVED_RE = re.compile(r"@[a-zA-Z]")


def _parse_line(text: str, start: str, line_no: int = 1, allow_reserved: bool = False):
    if not allow_reserved:
        match = _RESERVED_RE.search(text)
        if match:
            name = re.match(r"@[a-zA-Z0-9_]*", text[match.start():]).group(0)
            raise ReservedNameError(name, line_no, match.start() + 1)
    try:
        tree = _parser.parse(text, start=start)
        return _transformer.transform(tree)
    except UnexpectedInput as exc:
        raise ParseError(f"unexpected input in '{text.strip()}'", line_no, exc.column) from None
    except Exception as exc:  # transformer callbacks wrap our own errors
        inner = getattr(exc, "orig_exc", None)
        if isinstance(inner, ParseError):
            raise ParseError(str(inner).split(" (line")[0], line_no, 1) from None
        raise


def content_lines(text: str) -> list[tuple[int, str]]:
    lines = []
    for i, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            lines.append((i, stripped))
    return lines


def _check_universal(role: Role, line_no: int, where: str):
    if role.universal:
        raise ParseError(f"the universal role cannot occur in {where}", line_no, 1)


def _resolve_bare_inclusion(left: str, right: str, roles: set[str], concepts: set[str], line_no: int) -> tuple:
    """``left sub right`` between two bare names: a role inclusion or a concept inclusion.

    Names used elsewhere decide; otherwise lowercase names are roles and
    capitalised or generated names are concepts.
    """
    if left in roles or right in roles:
        return ("role", Role(left), Role(right))
    if left in concepts or right in concepts:
        return ("concept", Name(left), Name(right))
    lowercase = (left[:1].islower(), right[:1].islower())
    if all(lowercase):
        return ("role", Role(left), Role(right))
    if not any(lowercase):
        return ("concept", Name(left), Name(right))
    raise ParseError(
        f"'{left} sub {right}' mixes a role-like and a concept-like name; write 'role {left} sub {right}' "
        f"for a role inclusion",
        line_no, 1,
    )


def _build_tbox(items: list[tuple[int, tuple]], known_roles: set[str], known_concepts: set[str] | None = None) -> TBox:
    known_concepts = set(known_concepts or ())
    for _, item in items:
        if item[0] == "concept":
            used = signature_of(item[1]) | signature_of(item[2])
            known_roles |= used.roles
            known_concepts |= used.concepts
        elif item[0] in ("role",):
            known_roles |= {item[1].name, item[2].name}
        elif item[0] == "func":
            known_roles.add(item[1].name)
    cis, ris, funcs = set(), set(), set()
    for line_no, item in items:
        kind = item[0]
        if kind == "ambiguous":
            item = _resolve_bare_inclusion(item[1], item[2], known_roles, known_concepts, line_no)
            kind = item[0]
        if kind == "concept":
            cis.add((item[1], item[2]))
        elif kind == "role":
            _check_universal(item[1], line_no, "role inclusions")
            _check_universal(item[2], line_no, "role inclusions")
            ris.add((item[1], item[2]))
        else:
            _check_universal(item[1], line_no, "functionality assertions")
            funcs.add(item[1])
    return TBox(frozenset(cis), frozenset(ris), frozenset(funcs))


def _build_abox(items: list[tuple[int, tuple]]) -> ABox:
    concepts, roles = set(), set()
    for line_no, item in items:
        if item[0] == "concept":
            concepts.add((item[1], item[2]))
        else:
            if item[1] == UNIVERSAL:
                raise ParseError("the universal role cannot occur in ABoxes", line_no, 1)
            roles.add((item[1], item[2], item[3]))
    return ABox(frozenset(concepts), frozenset(roles))


def _build_query(items: list[tuple[int, tuple]]):
    if not items:
        raise ParseError("query section is empty")
    iqs = [(n, it) for n, it in items if it[0] == "iq"]
    if iqs:
        if len(items) > 1:
            raise ParseError("an instance query must be the only query line", iqs[0][0], 1)
        _, (_, _, var, concept) = iqs[0]
        return IQ(concept, var)
    answer_var = items[0][1][2]
    disjuncts = []
    for line_no, (_, _, var, body) in items:
        if var is None or var != answer_var:
            raise ParseError("all disjuncts must share one answer variable", line_no, 1)
        disjuncts.append(make_cq(var, body))
    return make_ucq(disjuncts)


def _roles_used(query, abox: ABox | None = None) -> set[str]:
    roles = set(signature_of(query).roles) if query is not None else set()
    if abox is not None:
        roles |= signature_of(abox).roles
    return roles


def _concepts_used(query, abox: ABox | None = None) -> set[str]:
    concepts = set(signature_of(query).concepts) if query is not None else set()
    if abox is not None:
        concepts |= signature_of(abox).concepts
    return concepts


def _build_sigma(entry, tbox: TBox, query, line_no: int) -> Signature:
    full = signature_of(tbox) | signature_of(query)
    if entry == "full":
        return full
    concepts, roles = set(), set()
    for name, arity in entry:
        if arity == 2 or (arity is None and name in full.roles):
            roles.add(name)
        else:
            concepts.add(name)
    sigma = Signature(frozenset(concepts), frozenset(roles))
    if not sigma <= full:
        logger.warning(f"sigma names {sorted(sigma.names - full.names)} occur in neither TBox nor query (line {line_no})")
    return sigma


SECTIONS = ("tbox", "abox", "sigma", "query", "dialect")
_SECTION_RE = re.compile(r"^\[(\w+)\]\s*(.*)$")


def _split_sections(text: str) -> dict[str, list[tuple[int, str]]]:
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    for line_no, line in content_lines(text):
        match = _SECTION_RE.match(line)
        if match and match.group(1) in SECTIONS:
            current = match.group(1)
            sections.setdefault(current, [])
            if match.group(2):
                sections[current].append((line_no, match.group(2)))
            continue
        if current is None:
            raise ParseError("content before the first section header", line_no, 1)
        sections[current].append((line_no, line))
    return sections


def parse_document(text: str, allow_reserved: bool = False) -> dict:
    """Parse a sectioned document into a dict with keys of the sections present."""
    sections = _split_sections(text)
    out: dict = {}
    query = None
    if "query" in sections:
        items = [(n, _parse_line(l, "query_line", n, allow_reserved)) for n, l in sections["query"]]
        query = _build_query(items)
        out["query"] = query
    abox = None
    if "abox" in sections:
        items = [(n, _parse_line(l, "abox_line", n, allow_reserved)) for n, l in sections["abox"]]
        abox = _build_abox(items)
        out["abox"] = abox
    tbox_items = [(n, _parse_line(l, "tbox_line", n, allow_reserved)) for n, l in sections.get("tbox", [])]
    tbox = _build_tbox(tbox_items, _roles_used(query, abox), _concepts_used(query, abox))
    out["tbox"] = tbox
    if "sigma" in sections:
        lines = sections["sigma"]
        if not lines:
            out["sigma"] = Signature()
        else:
            line_no = lines[0][0]
            joined = ", ".join(l for _, l in lines)
            entry = _parse_line(joined, "sigma_line", line_no, allow_reserved)
            out["sigma"] = _build_sigma(entry, tbox, query, line_no)
    if "dialect" in sections and sections["dialect"]:
        line_no, tag = sections["dialect"][0]
        try:
            out["dialect"] = Dialect.parse(tag)
        except ParseError:
            raise ParseError(f"unknown dialect '{tag}'", line_no, 1) from None
    return out


def parse(kind: str, text: str, allow_reserved: bool = False):
    """Parse ``text`` as ``kind`` in {concept, role, tbox, abox, query, omq, mmsnp, instance}."""
    if kind == "concept":
        return _parse_line(text.strip(), "concept_text", 1, allow_reserved)
    if kind == "role":
        concept = _parse_line(f"exists {text.strip()}. top", "concept_text", 1, allow_reserved)
        return concept.role
    if kind == "tbox":
        items = [(n, _parse_line(l, "tbox_line", n, allow_reserved)) for n, l in content_lines(text)
                 if l != "[tbox]"]
        return _build_tbox(items, set())
    if kind == "abox":
        items = [(n, _parse_line(l, "abox_line", n, allow_reserved)) for n, l in content_lines(text)
                 if l != "[abox]"]
        return _build_abox(items)
    if kind == "query":
        items = [(n, _parse_line(l, "query_line", n, allow_reserved)) for n, l in content_lines(text)
                 if l != "[query]"]
        return _build_query(items)
    if kind == "omq":
        return parse_omq(text, allow_reserved)
    if kind in ("mmsnp", "instance"):
        import mmsnp
        return mmsnp.parse_sentence(text) if kind == "mmsnp" else mmsnp.parse_instance(text)
    raise ValueError(f"unknown kind '{kind}'")


def parse_omq(text: str, allow_reserved: bool = False) -> OMQ:
    doc = parse_document(text, allow_reserved)
    if "query" not in doc:
        raise ParseError("an OMQ document needs a [query] section")
    tbox, query = doc["tbox"], doc["query"]
    sigma = doc.get("sigma", signature_of(tbox) | signature_of(query))
    declared = doc.get("dialect")
    omq = OMQ(tbox, sigma, query, declared or minimal_dialect(tbox, query))
    if declared is not None:
        violations = validate_dialect(omq, declared)
        if violations:
            raise DialectViolation(declared.tag, violations)
    return omq


def parse_abox(text: str, allow_reserved: bool = False) -> ABox:
    """ABox from a bare fact list or from the [abox] section of a document."""
    if "[abox]" in text:
        return parse_document(text, allow_reserved).get("abox", ABox())
    return parse("abox", text, allow_reserved)
