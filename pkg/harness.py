"""
Test-input generation and end-to-end verification of rewritings.

enumerate_aboxes streams every Σ-ABox up to a number of individuals, one per
isomorphism class; verify_rewriting compares an OMQ with a candidate IQ
rewriting on all of them.
"""

from __future__ import annotations

import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Iterator

import networkx as nx

from deps import Deadline, Settings
from errors import ResourceLimitExceeded
from reasoner import Reasoner, Verdict3
from syntax import (
    ABox,
    CQ,
    IQ,
    OMQ,
    ConceptAtom,
    Exists,
    Forall,
    Name,
    Not,
    Role,
    RoleAtom,
    Signature,
    TBox,
    make_and,
    make_cq,
    make_or,
    render_abox,
    render_concept,
)
from utils import chunked

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Canonical forms
# ---------------------------------------------------------------------------

def _colour_refinement(abox: ABox) -> dict[str, int]:
    """Stable colouring of the individuals; isomorphic ABoxes get the same colour classes."""
    inds = abox.individuals
    start = {}
    for a in inds:
        labels = sorted(render_concept(c) for c, b in abox.concept_assertions if b == a)
        loops = sorted(r for r, s, t in abox.role_assertions if s == t == a)
        start[a] = (tuple(labels), tuple(loops))
    ranks = {sig: i for i, sig in enumerate(sorted(set(start.values())))}
    colour = {a: ranks[start[a]] for a in inds}
    while True:
        signature = {}
        for a in inds:
            out = sorted((r, colour[t]) for r, s, t in abox.role_assertions if s == a and t != a)
            into = sorted((r, colour[s]) for r, s, t in abox.role_assertions if t == a and s != a)
            signature[a] = (colour[a], tuple(out), tuple(into))
        ranks = {sig: i for i, sig in enumerate(sorted(set(signature.values())))}
        refined = {a: ranks[signature[a]] for a in inds}
        if len(set(refined.values())) == len(set(colour.values())):
            return refined
        colour = refined


def canonical_form(abox: ABox) -> tuple:
    """Isomorphism-invariant key: the smallest encoding over colour-respecting relabellings."""
    colour = _colour_refinement(abox)
    classes: dict[int, list[str]] = {}
    for a in abox.individuals:
        classes.setdefault(colour[a], []).append(a)
    ordered = [classes[c] for c in sorted(classes)]
    concepts = [(render_concept(c), a) for c, a in abox.concept_assertions]
    best = None
    for choice in product(*(permutations(group) for group in ordered)):
        position = {a: i for i, a in enumerate(a for group in choice for a in group)}
        code = (
            tuple(sorted((c, position[a]) for c, a in concepts)),
            tuple(sorted((r, position[a], position[b]) for r, a, b in abox.role_assertions)),
        )
        if best is None or code < best:
            best = code
    return (len(abox.individuals), best)


# ---------------------------------------------------------------------------
# ABox enumeration
# ---------------------------------------------------------------------------

def individual_names(n: int) -> list[str]:
    if n <= 26:
        return [chr(ord("a") + i) for i in range(n)]
    return [f"a{i}" for i in range(n)]


def _functional_directions(sigma: Signature, functional: frozenset) -> dict[str, tuple[bool, bool]]:
    """Σ roles with a functional direction, mapped to (r functional, r⁻ functional)."""
    directions = {}
    for r in sorted(sigma.roles):
        forward, backward = Role(r) in functional, Role(r, True) in functional
        if forward or backward:
            directions[r] = (forward, backward)
    return directions


def _role_choices(role: str, forward: bool, backward: bool, names: list[str], budget: int):
    """Every functional set of ``role`` atoms over ``names`` with at most ``budget`` atoms.

    Each individual gets one successor or none (one predecessor when only the
    inverse is functional); with both directions functional the choice is injective.
    """
    for m in range(min(budget, len(names)) + 1):
        for sources in combinations(names, m):
            for targets in product(names, repeat=m):
                if forward and backward and len(set(targets)) < m:
                    continue
                if forward:
                    yield tuple((role, a, b) for a, b in zip(sources, targets))
                else:
                    yield tuple((role, b, a) for a, b in zip(sources, targets))


def _functional_parts(directions: list, names: list[str], budget: int):
    if not directions:
        yield ()
        return
    (role, (forward, backward)), rest = directions[0], directions[1:]
    for part in _role_choices(role, forward, backward, names, budget):
        for tail in _functional_parts(rest, names, budget - len(part)):
            yield part + tail


def enumerate_aboxes(
    sigma: Signature,
    max_ind: int,
    consistent_with: TBox | None = None,
    reasoner: Reasoner | None = None,
    max_assertions: int | None = None,
    deadline: Deadline | None = None,
    functional_only: bool = False,
) -> Iterator[ABox]:
    """Every Σ-ABox with at most ``max_ind`` individuals, up to isomorphism.

    ABoxes come in order of individuals. With ``functional_only`` every
    functional role of ``consistent_with`` (every role of Σ when no TBox is
    given) has at most one successor per individual; those atoms are chosen
    per individual instead of being filtered out of all subsets.
    """
    if consistent_with is not None and reasoner is None:
        reasoner = Reasoner()
    if not functional_only:
        directions = {}
    elif consistent_with is not None:
        directions = _functional_directions(sigma, consistent_with.functional)
    else:
        directions = {r: (True, False) for r in sorted(sigma.roles)}
    seen: set = set()
    emitted = 0
    if consistent_with is None or reasoner.consistent(ABox(), consistent_with):
        emitted += 1
        yield ABox()
    for n in range(1, max_ind + 1):
        names = individual_names(n)
        pool = [("c", Name(c), a) for c in sorted(sigma.concepts) for a in names]
        pool += [
            ("r", r, a, b) for r in sorted(sigma.roles) if r not in directions for a in names for b in names
        ]
        cap = len(pool) + len(directions) * n if max_assertions is None else max_assertions
        lower = (n + 1) // 2
        for part in _functional_parts(list(directions.items()), names, cap):
            roles = frozenset(part)
            upper = min(len(pool), cap - len(part))
            for size in range(max(0, lower - len(part)), upper + 1):
                for chosen in combinations(pool, size):
                    if deadline is not None and deadline.expired():
                        logger.warning(f"ABox enumeration stopped at the deadline after {emitted} ABoxes")
                        return
                    abox = ABox(
                        frozenset((item[1], item[2]) for item in chosen if item[0] == "c"),
                        roles | frozenset((item[1], item[2], item[3]) for item in chosen if item[0] == "r"),
                    )
                    if len(abox.individuals) != n:
                        continue
                    key = canonical_form(abox)
                    if key in seen:
                        continue
                    seen.add(key)
                    if consistent_with is not None and not reasoner.consistent(abox, consistent_with):
                        continue
                    emitted += 1
                    yield abox
    logger.debug(f"enumerated {emitted} ABoxes over {sigma} with up to {max_ind} individuals")


# ---------------------------------------------------------------------------
# Verification of rewritings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Discrepancy:
    abox: ABox
    individual: str
    original: bool
    rewritten: bool

    @property
    def answered_by(self) -> str:
        return "original" if self.original else "rewriting"

    def to_dict(self) -> dict:
        return {
            "abox": render_abox(self.abox),
            "individual": self.individual,
            "original": self.original,
            "rewritten": self.rewritten,
            "answered_by": self.answered_by,
        }


@dataclass
class VerificationReport:
    checked: int = 0
    aboxes: int = 0
    discrepancies: list = field(default_factory=list)
    unknown: list = field(default_factory=list)  # (abox, individual, reason)
    bounds: dict = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.discrepancies

    @property
    def complete(self) -> bool:
        return not self.unknown

    def merge(self, other: "VerificationReport"):
        self.checked += other.checked
        self.aboxes += other.aboxes
        self.discrepancies.extend(other.discrepancies)
        self.unknown.extend(other.unknown)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checked": self.checked,
            "aboxes": self.aboxes,
            "discrepancies": [d.to_dict() for d in self.discrepancies],
            "unknown": [
                {"abox": render_abox(a), "individual": i, "reason": r} for a, i, r in self.unknown
            ],
            "bounds": dict(self.bounds),
        }

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        lines = [
            f"{status}: {self.checked} cells over {self.aboxes} ABoxes in {self.elapsed:.2f}s",
            f"  discrepancies: {len(self.discrepancies)}   unknown cells: {len(self.unknown)}",
        ]
        for d in self.discrepancies[:10]:
            facts = render_abox(d.abox).replace("\n", ", ") or "(empty)"
            lines.append(f"  {d.individual}: original={d.original} rewriting={d.rewritten}  [{facts}]")
        return "\n".join(lines)


def _check_aboxes(original: OMQ, rewritten: OMQ, aboxes: list[ABox], max_extra: int,
                  settings: Settings) -> VerificationReport:
    reasoner = Reasoner(settings, Deadline.never())
    report = VerificationReport(aboxes=len(aboxes))
    for abox in aboxes:
        for individual in abox.individuals:
            report.checked += 1
            try:
                left: Verdict3 = reasoner.certain_answer(original, abox, individual, max_extra)
                right = reasoner.iq_certain_answer(rewritten.tbox, rewritten.query, abox, individual)
            except ResourceLimitExceeded as e:
                report.unknown.append((abox, individual, str(e)))
                continue
            if left.is_unknown:
                report.unknown.append((abox, individual, left.reason))
                continue
            if left.is_yes != right:
                report.discrepancies.append(Discrepancy(abox, individual, left.is_yes, right))
    return report


def _check_chunk(args) -> VerificationReport:
    return _check_aboxes(*args)


def verify_rewriting(
    original: OMQ,
    rewritten: OMQ,
    max_ind: int,
    max_extra: int | None = None,
    settings: Settings | None = None,
    functional_only: bool = False,
    jobs: int | None = None,
) -> VerificationReport:
    """Compare the answers of ``original`` and of the IQ OMQ ``rewritten`` on Σ-ABoxes.

    Only ABoxes consistent with the original TBox are used. Cells where the
    original OMQ's answer is undecided within the bound are reported, never
    counted as pass or fail.
    """
    if not isinstance(rewritten.query, IQ):
        raise ValueError("the rewritten OMQ must have an instance query")
    settings = settings or Settings()
    max_extra = settings.max_extra if max_extra is None else max_extra
    jobs = settings.jobs if jobs is None else jobs
    start = time.perf_counter()
    reasoner = Reasoner(settings)
    stream = enumerate_aboxes(
        original.sigma, max_ind,
        consistent_with=original.tbox,
        reasoner=reasoner,
        max_assertions=settings.max_assertions,
        deadline=reasoner.deadline,
        functional_only=functional_only,
    )
    report = VerificationReport(bounds={"max_ind": max_ind, "max_extra": max_extra})
    if jobs <= 1:
        report.merge(_check_aboxes(original, rewritten, list(stream), max_extra, settings))
    else:
        tasks = [(original, rewritten, chunk, max_extra, settings) for chunk in chunked(stream, 64)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(_check_chunk, tasks):
                report.merge(part)
    report.elapsed = time.perf_counter() - start
    if report.discrepancies:
        logger.warning(f"verification found {len(report.discrepancies)} discrepancies")
    else:
        logger.info(f"verification passed on {report.aboxes} ABoxes ({len(report.unknown)} unknown cells)")
    return report


def answers(omq: OMQ, abox: ABox, reasoner: Reasoner | None = None,
            max_extra: int | None = None) -> dict[str, Verdict3]:
    """Answer of ``omq`` at every individual of ``abox``."""
    reasoner = reasoner or Reasoner()
    return {a: reasoner.certain_answer(omq, abox, a, max_extra) for a in abox.individuals}


# ---------------------------------------------------------------------------
# Query and TBox generators
# ---------------------------------------------------------------------------

def gen_random_cq(variables: int, atoms: int, concept_ratio: float = 0.3, seed: int = 0,
                  concepts=("A", "B"), roles=("r", "s")) -> CQ:
    """A CQ with answer variable x over at most ``variables`` variables, reproducible from ``seed``."""
    rng = random.Random(seed)
    names = ["x"] + [f"y{i}" for i in range(1, variables)]
    body = set()
    for _ in range(atoms):
        if rng.random() < concept_ratio:
            body.add(ConceptAtom(Name(rng.choice(concepts)), rng.choice(names)))
        else:
            body.add(RoleAtom(rng.choice(roles), rng.choice(names), rng.choice(names)))
    return make_cq("x", body)


def gen_3col_query(graph: nx.Graph, anchor=None, role: str = "r") -> CQ:
    """CQ(x) built from a graph by the 3-colourability construction.

    The graph folds onto the x, x1, x2 triangle exactly when it is
    3-colourable. The triangle itself keeps the two-atom cycle x1, x2, so
    callers take expected verdicts from brute_force_empty_tbox. Every edge of the graph becomes two opposite atoms, the anchor vertex is
    joined to x both ways and x, x1, x2 form a complete directed triangle.
    """
    nodes = sorted(graph.nodes, key=str)
    if not nodes:
        raise ValueError("graph has no vertices")
    anchor = nodes[0] if anchor is None else anchor

    def var(v) -> str:
        return f"v_{v}"

    body = set()
    for u, v in graph.edges:
        body.add(RoleAtom(role, var(u), var(v)))
        body.add(RoleAtom(role, var(v), var(u)))
    body.add(RoleAtom(role, "x", var(anchor)))
    body.add(RoleAtom(role, var(anchor), "x"))
    clique = ["x", "x1", "x2"]
    for i, j in product(clique, clique):
        if i != j:
            body.add(RoleAtom(role, i, j))
    return make_cq("x", body)


def gen_random_tbox(seed: int, axioms: int = 3, concepts=("A", "B"), roles=("r", "s"),
                    functional: bool = True) -> TBox:
    """Small random ALCF TBox for cross-checking the reasoners."""
    rng = random.Random(seed)

    def concept(depth: int):
        choice = rng.randrange(6 if depth > 0 else 2)
        if choice == 0:
            return Name(rng.choice(concepts))
        if choice == 1:
            return Not(Name(rng.choice(concepts)))
        if choice == 2:
            return make_and(concept(depth - 1), concept(depth - 1))
        if choice == 3:
            return make_or(concept(depth - 1), concept(depth - 1))
        if choice == 4:
            return Exists(Role(rng.choice(roles)), concept(depth - 1))
        return Forall(Role(rng.choice(roles)), concept(depth - 1))

    inclusions, funcs = set(), set()
    for _ in range(axioms):
        if functional and rng.random() < 0.25:
            funcs.add(Role(rng.choice(roles)))
        else:
            inclusions.add((concept(1), concept(1)))
    return TBox(frozenset(inclusions), frozenset(), frozenset(funcs))
