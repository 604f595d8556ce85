"""
MMSNP sentences over relational instances.

A sentence ∃X1…∃Xn ∀x̄ ⋀ (body → head) is kept as its schema, its monadic
second-order variables and its rules. Evaluation grounds every rule on the
instance and searches for a colouring (a set of SO variables per element)
that satisfies all ground clauses.

DSL, one statement per line:

    pred E/2, N/0.
    so X.
    rule E(x,y), X(x), X(y) -> false.
    rule E(x,y), not X(x), not X(y) -> false.
    rule true -> X(x) or Y(x).

Instances are fact lists: "E(a,b)." and "N()." for nullary predicates.
"""

from __future__ import annotations

import logging
import random
import string
from dataclasses import dataclass, field
from itertools import chain, combinations, combinations_with_replacement, permutations, product
from typing import Iterator

import networkx as nx
from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput

from deps import Settings
from errors import BudgetExceeded, ParseError, PreconditionError
from reasoner import Verdict3
from syntax import content_lines
from utils import set_partitions

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Syntax objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Fact:
    """Schema atom; arguments are variables in rules and constants in instances."""

    predicate: str
    args: tuple = ()

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"


@dataclass(frozen=True, order=True)
class SOAtom:
    var: str
    arg: str
    positive: bool = True

    def __str__(self) -> str:
        text = f"{self.var}({self.arg})"
        return text if self.positive else f"not {text}"


@dataclass(frozen=True)
class Rule:
    body: tuple = ()  # Facts
    so_body: tuple = ()  # SOAtoms, possibly negative
    head: tuple = ()  # positive SOAtoms; empty means false

    @property
    def variables(self) -> list[str]:
        found = {v for f in self.body for v in f.args}
        found |= {a.arg for a in chain(self.so_body, self.head)}
        return sorted(found)

    @property
    def trivial(self) -> bool:
        """Body contradicts itself or the head repeats a body atom."""
        positive = {(a.var, a.arg) for a in self.so_body if a.positive}
        negative = {(a.var, a.arg) for a in self.so_body if not a.positive}
        return bool(positive & negative) or any((a.var, a.arg) in positive for a in self.head)

    def rename(self, mapping: dict) -> "Rule":
        def m(v):
            return mapping.get(v, v)

        return make_rule(
            (Fact(f.predicate, tuple(m(v) for v in f.args)) for f in self.body),
            (SOAtom(a.var, m(a.arg), a.positive) for a in self.so_body),
            (SOAtom(a.var, m(a.arg)) for a in self.head),
        )

    def __str__(self) -> str:
        return render_rule(self)


def make_rule(body=(), so_body=(), head=()) -> Rule:
    return Rule(tuple(sorted(set(body))), tuple(sorted(set(so_body))), tuple(sorted(set(head))))


@dataclass(frozen=True)
class MmsnpSentence:
    schema: tuple = ()  # (name, arity) pairs, sorted
    so_vars: tuple = ()
    rules: tuple = ()

    def arity(self, predicate: str) -> int:
        return dict(self.schema)[predicate]

    @property
    def nullary(self) -> list[str]:
        return [name for name, arity in self.schema if arity == 0]

    def __str__(self) -> str:
        return render_sentence(self)


def make_sentence(schema, so_vars, rules) -> MmsnpSentence:
    unique = {render_rule(r): r for r in rules}
    return MmsnpSentence(
        tuple(sorted(dict(schema).items())),
        tuple(so_vars),
        tuple(unique[k] for k in sorted(unique)),
    )


@dataclass(frozen=True)
class Instance:
    facts: frozenset = frozenset()

    @property
    def domain(self) -> tuple[str, ...]:
        return tuple(sorted({c for f in self.facts for c in f.args}))

    def index(self) -> dict[str, list[Fact]]:
        out: dict[str, list[Fact]] = {}
        for f in sorted(self.facts):
            out.setdefault(f.predicate, []).append(f)
        return out

    def __len__(self) -> int:
        return len(self.facts)

    def __str__(self) -> str:
        return render_instance(self)


@dataclass(frozen=True)
class InstanceCertificate:
    instance: Instance
    note: str = ""

    def to_dict(self) -> dict:
        return {"instance": render_instance(self.instance), "domain_size": len(self.instance.domain),
                "note": self.note}


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def render_rule(rule: Rule) -> str:
    body = [str(f) for f in rule.body] + [str(a) for a in rule.so_body]
    head = " or ".join(str(a) for a in rule.head) or "false"
    return f"rule {', '.join(body) or 'true'} -> {head}."


def render_sentence(phi: MmsnpSentence) -> str:
    lines = []
    if phi.schema:
        lines.append("pred " + ", ".join(f"{n}/{a}" for n, a in phi.schema) + ".")
    if phi.so_vars:
        lines.append("so " + ", ".join(phi.so_vars) + ".")
    lines += [render_rule(r) for r in phi.rules]
    return "\n".join(lines)


def render_instance(instance: Instance) -> str:
    return "\n".join(f"{f}." for f in sorted(instance.facts))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

GRAMMAR = r"""
    statement: "pred" pred_decl ("," pred_decl)* "."     -> preds
             | "so" NAME ("," NAME)* "."                 -> so_decl
             | "rule" body "->" head "."                 -> rule

    fact_line: NAME "(" [args] ")" "."

    pred_decl: NAME "/" INT

    body: "true"                                         -> true_body
        | literal ("," literal)*                         -> literals

    literal: NAME "(" [args] ")"                         -> positive
           | "not" NAME "(" NAME ")"                     -> negative

    head: "false"                                        -> false_head
        | NAME "(" NAME ")" ("or" NAME "(" NAME ")")*    -> head_atoms

    args: NAME ("," NAME)*

    NAME: /[a-zA-Z_][a-zA-Z0-9_]*/

    %import common.INT
    %import common.WS_INLINE
    %ignore WS_INLINE
"""


@v_args(inline=True)
class MmsnpTransformer(Transformer):
    def preds(self, *decls):
        return ("pred", list(decls))

    def pred_decl(self, name, arity):
        return (str(name), int(arity))

    def so_decl(self, *names):
        return ("so", [str(n) for n in names])

    def rule(self, body, head):
        return ("rule", body, head)

    def fact_line(self, name, args):
        return Fact(str(name), tuple(args or ()))

    def true_body(self):
        return []

    def literals(self, *items):
        return list(items)

    def positive(self, name, args):
        return (True, str(name), tuple(args or ()))

    def negative(self, name, arg):
        return (False, str(name), (str(arg),))

    def false_head(self):
        return []

    def head_atoms(self, *tokens):
        names = [str(t) for t in tokens]
        return [SOAtom(names[i], names[i + 1]) for i in range(0, len(names), 2)]

    def args(self, *names):
        return tuple(str(n) for n in names)


_parser = Lark(GRAMMAR, start=["statement", "fact_line"], parser="lalr", maybe_placeholders=True)
_transformer = MmsnpTransformer()


def _parse_line(text: str, start: str, line_no: int):
    try:
        return _transformer.transform(_parser.parse(text, start=start))
    except UnexpectedInput as exc:
        raise ParseError(f"unexpected input in '{text}'", line_no, exc.column) from None


def parse_sentence(text: str) -> MmsnpSentence:
    """Parse the sentence DSL; declarations may appear anywhere in the text."""
    statements = [(n, _parse_line(line, "statement", n)) for n, line in content_lines(text)]
    schema: dict[str, int] = {}
    so_vars: list[str] = []
    for line_no, (kind, *rest) in statements:
        if kind == "pred":
            for name, arity in rest[0]:
                if name in schema and schema[name] != arity:
                    raise ParseError(f"predicate {name} declared with two arities", line_no, 1)
                schema[name] = arity
        elif kind == "so":
            so_vars += [v for v in rest[0] if v not in so_vars]
    clash = set(schema) & set(so_vars)
    if clash:
        raise ParseError(f"{sorted(clash)[0]} is both a predicate and an SO variable")
    rules = []
    for line_no, (kind, *rest) in statements:
        if kind != "rule":
            continue
        literals, head = rest
        body, so_body = [], []
        for positive, name, args in literals:
            if name in so_vars:
                if len(args) != 1:
                    raise ParseError(f"SO variable {name} is monadic", line_no, 1)
                so_body.append(SOAtom(name, args[0], positive))
            elif name in schema:
                if not positive:
                    raise ParseError(f"schema atom {name} cannot be negated", line_no, 1)
                if len(args) != schema[name]:
                    raise ParseError(f"{name} has arity {schema[name]}", line_no, 1)
                body.append(Fact(name, args))
            else:
                raise ParseError(f"undeclared predicate {name}", line_no, 1)
        for atom in head:
            if atom.var not in so_vars:
                raise ParseError(f"rule heads may only use SO variables, not {atom.var}", line_no, 1)
        rules.append(make_rule(body, so_body, head))
    return make_sentence(schema, so_vars, rules)


def parse_instance(text: str, phi: MmsnpSentence | None = None) -> Instance:
    """Fact list; checked against the schema of ``phi`` when given."""
    facts = set()
    for line_no, line in content_lines(text):
        fact = _parse_line(line, "fact_line", line_no)
        if phi is not None:
            arities = dict(phi.schema)
            if arities.get(fact.predicate) != len(fact.args):
                raise ParseError(f"{fact} does not fit the schema", line_no, 1)
        facts.add(fact)
    return Instance(frozenset(facts))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _matches(rule: Rule, instance: Instance) -> Iterator[dict]:
    """Assignments of the rule variables under which every schema atom of the body holds."""
    index = instance.index()
    atoms = sorted(rule.body, key=lambda f: (len(index.get(f.predicate, ())), f))
    free = [v for v in rule.variables if not any(v in f.args for f in rule.body)]
    domain = instance.domain

    def extend(i: int, assignment: dict):
        if i == len(atoms):
            for values in product(domain, repeat=len(free)):
                yield {**assignment, **dict(zip(free, values))}
            return
        atom = atoms[i]
        for fact in index.get(atom.predicate, ()):
            new = dict(assignment)
            if all(new.setdefault(v, c) == c for v, c in zip(atom.args, fact.args)):
                yield from extend(i + 1, new)

    yield from extend(0, {})


def ground(phi: MmsnpSentence, instance: Instance) -> list[frozenset] | None:
    """Ground clauses over literals (element, SO variable, value); None if one is empty."""
    clauses = set()
    for rule in phi.rules:
        for h in _matches(rule, instance):
            clause = {(h[a.arg], a.var, not a.positive) for a in rule.so_body}
            clause |= {(h[a.arg], a.var, True) for a in rule.head}
            if any((e, x, not value) in clause for e, x, value in clause):
                continue
            if not clause:
                return None
            clauses.add(frozenset(clause))
    return sorted(clauses, key=sorted)


def find_coloring(phi: MmsnpSentence, instance: Instance, budget: int | None = None) -> dict | None:
    """SO assignment (element → set of SO variables) witnessing I ⊨ φ, or None.

    Elements are coloured in order and a clause is checked as soon as all of
    its elements are coloured.
    """
    budget = Settings().mmsnp_eval_budget if budget is None else budget
    clauses = ground(phi, instance)
    if clauses is None:
        return None
    domain = instance.domain
    position = {e: i for i, e in enumerate(domain)}
    due: list[list[frozenset]] = [[] for _ in domain]
    for clause in clauses:
        due[max(position[e] for e, _, _ in clause)].append(clause)
    choices = [frozenset(c) for k in range(len(phi.so_vars) + 1) for c in combinations(phi.so_vars, k)]
    colouring: dict = {}
    nodes = 0

    def satisfied(clause) -> bool:
        return any((x in colouring[e]) == value for e, x, value in clause)

    def extend(i: int) -> bool:
        nonlocal nodes
        if i == len(domain):
            return True
        for choice in choices:
            nodes += 1
            if nodes > budget:
                raise BudgetExceeded("MMSNP evaluation", budget)
            colouring[domain[i]] = choice
            if all(satisfied(c) for c in due[i]) and extend(i + 1):
                return True
        del colouring[domain[i]]
        return False

    if not extend(0):
        return None
    return {e: sorted(colouring[e]) for e in domain}


def evaluate(phi: MmsnpSentence, instance: Instance, budget: int | None = None) -> bool:
    """I ⊨ φ."""
    return find_coloring(phi, instance, budget) is not None


def disjoint_union(first: Instance, second: Instance) -> Instance:
    """Union with the elements of each side renamed apart; nullary facts are shared."""
    facts = {Fact(f.predicate, tuple(f"{c}_1" for c in f.args)) for f in first.facts}
    facts |= {Fact(f.predicate, tuple(f"{c}_2" for c in f.args)) for f in second.facts}
    return Instance(frozenset(facts))


# ---------------------------------------------------------------------------
# Derived sentences
# ---------------------------------------------------------------------------

def body_is_acyclic(body) -> bool:
    """Berge acyclicity: the fact/element incidence multigraph is a forest.

    A constant repeated inside one tuple gives a double edge, so it counts as
    a self-loop; two facts over the same pair of elements form a cycle.
    """
    graph = nx.MultiGraph()
    for i, fact in enumerate(body):
        graph.add_node(("fact", i))
        for arg in fact.args:
            graph.add_edge(("fact", i), ("elem", arg))
    if graph.number_of_nodes() == 0:
        return True
    return nx.is_forest(graph)


def build_phi_acyc(phi: MmsnpSentence) -> MmsnpSentence:
    """Rules obtainable from rules of φ by identifying variables whose bodies are acyclic."""
    rules = []
    for rule in phi.rules:
        for partition in set_partitions(rule.variables):
            mapping = {v: min(block) for block in partition for v in block}
            image = rule.rename(mapping)
            if not image.trivial and body_is_acyclic(image.body):
                rules.append(image)
    logger.debug(f"acyclic part keeps {len(set(rules))} rules")
    return make_sentence(phi.schema, phi.so_vars, rules)


def _fresh_so(phi: MmsnpSentence, base: str) -> str:
    taken = set(phi.so_vars) | {name for name, _ in phi.schema}
    name = base
    while name in taken:
        name += "_"
    return name


def build_phi_colored(phi: MmsnpSentence, n1=(), n2=()) -> MmsnpSentence:
    """φ_{N1,N2}: models are 2-coloured unions of components, each colour class a model of φ.

    Colour i only guards the rules of φ whose bodies use no nullary predicate
    outside N_i.
    """
    nullary = set(phi.nullary)
    n1, n2 = set(n1), set(n2)
    if not (n1 <= nullary and n2 <= nullary):
        raise PreconditionError("N1 and N2 must be sets of nullary predicates", ",".join(sorted((n1 | n2) - nullary)))
    c1 = _fresh_so(phi, "C1")
    c2 = _fresh_so(phi, "C2")
    rules = [
        Rule((), (), (SOAtom(c1, "x"), SOAtom(c2, "x"))),
        Rule((), (SOAtom(c1, "x"), SOAtom(c2, "x")), ()),
    ]
    for name, arity in phi.schema:
        ys = tuple(f"y{k}" for k in range(1, arity + 1))
        for colour in (c1, c2):
            for j, k in product(range(arity), repeat=2):
                rules.append(Rule((Fact(name, ys),), (SOAtom(colour, ys[j]),), (SOAtom(colour, ys[k]),)))
    for colour, allowed in ((c1, n1), (c2, n2)):
        for rule in phi.rules:
            if {f.predicate for f in rule.body} & (nullary - allowed):
                continue
            guard = [SOAtom(colour, v) for v in rule.variables]
            rules.append(make_rule(rule.body, list(rule.so_body) + guard, rule.head))
    return MmsnpSentence(phi.schema, phi.so_vars + (c1, c2), tuple(rules))


# ---------------------------------------------------------------------------
# Bounded checks
# ---------------------------------------------------------------------------

def _element_names(n: int) -> list[str]:
    return list(string.ascii_lowercase[:n]) if n <= 26 else [f"e{i}" for i in range(n)]


def _fact_pool(schema, elements: list[str]) -> list[Fact]:
    pool = []
    for name, arity in schema:
        for args in product(elements, repeat=arity):
            pool.append(Fact(name, args))
    return pool


def instance_key(instance: Instance) -> tuple:
    """Isomorphism-invariant key by brute force over relabellings (small domains only)."""
    domain = instance.domain
    best = None
    for perm in permutations(range(len(domain))):
        rename = dict(zip(domain, perm))
        code = tuple(sorted((f.predicate, tuple(rename[c] for c in f.args)) for f in instance.facts))
        if best is None or code < best:
            best = code
    return (len(domain), best)


def enumerate_instances(schema, max_dom: int, max_facts: int | None = None) -> Iterator[Instance]:
    """All instances with at most ``max_dom`` elements, up to isomorphism, smallest first."""
    seen = set()
    nullary = [Fact(name) for name, arity in schema if arity == 0]
    for n in range(0, max_dom + 1):
        elements = _element_names(n)
        pool = _fact_pool(schema, elements) if n else nullary
        upper = len(pool) if max_facts is None else min(len(pool), max_facts)
        for size in range(0, upper + 1):
            for chosen in combinations(pool, size):
                instance = Instance(frozenset(chosen))
                if len(instance.domain) != n:
                    continue
                key = instance_key(instance)
                if key in seen:
                    continue
                seen.add(key)
                yield instance


def complete_instance(schema, n: int) -> Instance:
    """Every fact whose arguments are pairwise distinct, plus every nullary fact."""
    elements = _element_names(n)
    facts = [f for f in _fact_pool(schema, elements) if len(set(f.args)) == len(f.args)]
    return Instance(frozenset(facts))


def random_instance(schema, n: int, rng: random.Random) -> Instance:
    density = rng.choice((0.2, 0.4, 0.6, 0.8))
    pool = _fact_pool(schema, _element_names(n))
    return Instance(frozenset(f for f in pool if rng.random() < density))


@dataclass
class CandidatePool:
    """Test instances for bounded checks: exhaustive small ones, complete ones, then random samples."""

    schema: tuple
    max_dom: int
    exhaustive_dom: int = 3
    max_facts: int | None = None
    samples: int = 100
    seed: int = 0
    _cache: list = field(default_factory=list)

    def instances(self) -> list[Instance]:
        if self._cache:
            return self._cache
        found: dict = {}
        bound = min(self.exhaustive_dom, self.max_dom)
        for instance in enumerate_instances(self.schema, bound, self.max_facts):
            found.setdefault(instance_key(instance), instance)
        for n in range(1, self.max_dom + 1):
            instance = complete_instance(self.schema, n)
            found.setdefault(instance_key(instance) if n <= 6 else (n, "complete"), instance)
        rng = random.Random(self.seed)
        for i in range(self.samples):
            instance = random_instance(self.schema, rng.randint(1, self.max_dom), rng)
            found.setdefault((len(instance.domain), "random", i), instance)
        self._cache = sorted(found.values(), key=lambda inst: (len(inst.domain), len(inst), render_instance(inst)))
        return self._cache


def _pool(phi: MmsnpSentence, max_dom: int, settings: Settings) -> CandidatePool:
    return CandidatePool(phi.schema, max_dom, max_facts=settings.max_assertions, seed=settings.seed)


def check_du_preservation(phi: MmsnpSentence, max_dom: int, settings: Settings | None = None) -> Verdict3:
    """Bounded search for I ⊨ φ_{N1,N2} with I ⊭ φ; No carries that instance.

    Disjoint unions of small models of φ are added to the candidates so the
    search also covers the direct definition.
    """
    settings = settings or Settings()
    budget = settings.mmsnp_eval_budget
    bounds = {"max_dom": max_dom}
    pool = _pool(phi, max_dom, settings).instances()
    holds = {}

    def models(instance: Instance) -> bool:
        key = render_instance(instance)
        if key not in holds:
            holds[key] = evaluate(phi, instance, budget)
        return holds[key]

    small = [i for i in pool if len(i.domain) <= max(1, max_dom // 2) and models(i)]
    unions = []
    for first, second in combinations_with_replacement(small, 2):
        if len(first.domain) + len(second.domain) > max_dom:
            continue
        union = disjoint_union(first, second)
        if not models(union):
            logger.info(f"disjoint union of two models fails the sentence ({len(union.domain)} elements)")
            return Verdict3.no(InstanceCertificate(union, "disjoint union of two models"), bounds)
        unions.append(union)

    nullary = phi.nullary
    subsets = [set(c) for k in range(len(nullary) + 1) for c in combinations(nullary, k)]
    for n1, n2 in product(subsets, repeat=2):
        colored = build_phi_colored(phi, n1, n2)
        for instance in chain(pool, unions):
            if models(instance):
                continue
            if evaluate(colored, instance, budget):
                note = f"model of the coloured sentence for N1={sorted(n1)}, N2={sorted(n2)}"
                return Verdict3.no(InstanceCertificate(instance, note), bounds)
    return Verdict3.unknown(bounds, reason=f"holds up to bound {max_dom}")


def check_csp_definable(phi: MmsnpSentence, max_dom: int, settings: Settings | None = None) -> Verdict3:
    """Bounded test of CSP definability: φ ≡ φ_acyc and preservation under disjoint union.

    φ ⊆ φ_acyc always holds, so only models of φ_acyc that fail φ are searched.
    """
    settings = settings or Settings()
    bounds = {"max_dom": max_dom}
    acyclic = build_phi_acyc(phi)
    for instance in _pool(phi, max_dom, settings).instances():
        if evaluate(acyclic, instance, settings.mmsnp_eval_budget) and not evaluate(
            phi, instance, settings.mmsnp_eval_budget
        ):
            logger.info(f"sentence differs from its acyclic part on {len(instance.domain)} elements")
            return Verdict3.no(InstanceCertificate(instance, "model of the acyclic part but not of the sentence"),
                               bounds)
    preserved = check_du_preservation(phi, max_dom, settings)
    if preserved.is_no:
        return preserved
    return Verdict3.unknown(bounds, reason=f"holds up to bound {max_dom}")
