"""
Shared fixtures for iqrewrite tests.

Parsed example OMQs come from the documents in corpus/, so the CLI tests and
the library tests look at the same inputs.
"""

import os
import sys
import pytest

# Ensure the repository root is on the path so imports resolve
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from deps import Settings
from reasoner import Reasoner
from syntax import parse_omq

CORPUS = os.path.join(os.path.dirname(__file__), "..", "corpus")


def corpus_path(name: str) -> str:
    return os.path.join(CORPUS, name)


def load_omq(name: str):
    with open(corpus_path(name), encoding="utf-8") as f:
        return parse_omq(f.read())


# ---------------------------------------------------------------------------
# Settings and reasoner
# ---------------------------------------------------------------------------

@pytest.fixture(name="settings")
def settings_fixture():
    """Small bounds that keep the default run fast."""
    return Settings(max_ind=2, max_extra=2, equivalence_bound=2)


@pytest.fixture(name="reasoner")
def reasoner_fixture(settings):
    """A fresh reasoner (empty caches) per test."""
    return Reasoner(settings)


# ---------------------------------------------------------------------------
# Example OMQs
# ---------------------------------------------------------------------------

@pytest.fixture(name="self_loop")
def self_loop_fixture():
    """q(x) :- r(x,x) over the empty TBox."""
    return load_omq("self_loop.omq")


@pytest.fixture(name="loop_behind_edge")
def loop_behind_edge_fixture():
    """q(x) :- s(x,y), r(y,y) over the empty TBox."""
    return load_omq("loop_behind_edge.omq")


@pytest.fixture(name="shared_parent")
def shared_parent_fixture():
    """q(x) :- r(y,x), s(y,x) with Σ = {r, s}."""
    return load_omq("shared_parent.omq")


@pytest.fixture(name="branching")
def branching_fixture():
    """x-acyclic connected query with an inverse step to y2."""
    return load_omq("branching.omq")


@pytest.fixture(name="diamond")
def diamond_fixture():
    """Diamond-shaped query with A(x) over the empty TBox."""
    return load_omq("diamond.omq")


@pytest.fixture(name="diamond_tbox")
def diamond_tbox_fixture():
    """Diamond query with A(x) under A ⊑ ∃r.∃r.(B1 ⊓ B2 ⊓ ∃r.⊤)."""
    return load_omq("diamond_tbox.omq")


@pytest.fixture(name="diamond_sigma_a")
def diamond_sigma_a_fixture():
    """Diamond query without A(x), Σ = {A}."""
    return load_omq("diamond_sigma_a.omq")


@pytest.fixture(name="diamond_full")
def diamond_full_fixture():
    """Diamond query without A(x), full signature."""
    return load_omq("diamond_full.omq")


@pytest.fixture(name="func_s_loop")
def func_s_loop_fixture():
    """q(x) :- s(x,y), r(y,y) with func(s)."""
    return load_omq("func_s_loop.omq")


@pytest.fixture(name="func_r_loop")
def func_r_loop_fixture():
    """q(x) :- s(x,y), r(y,y) with func(r)."""
    return load_omq("func_r_loop.omq")


@pytest.fixture(name="func_clusters")
def func_clusters_fixture():
    """r(x,y), s1(y,z), s2(y,z) with func(s1), func(s2): not f-acyclic."""
    return load_omq("func_clusters.omq")


@pytest.fixture(name="func_clusters_closed")
def func_clusters_closed_fixture():
    """func_clusters plus s1(z,y): f-acyclic."""
    return load_omq("func_clusters_closed.omq")
