import itertools
import random
from collections import Counter

import networkx as nx
import pytest

from conftest import graph
from sparse01.canon import (brute_canonical_form, canonical_form, canonical_labeling, enumerate_structures,
                            from_form)
from sparse01.errors import InvalidArgument
from sparse01.structures import GRAPH, RelStructure, Vocabulary


def _random_structure(vocab, n, p, rng):
    tuples = {}
    for r in vocab:
        it = itertools.combinations(range(n), r.arity) if r.symmetric else itertools.permutations(range(n), r.arity)
        tuples[r.name] = [t for t in it if rng.random() < p]
    return RelStructure(vocab, n, tuples)


def test_graph_counts_match_the_atlas():
    atlas = Counter(G.number_of_nodes() for G in nx.graph_atlas_g())
    levels = enumerate_structures(GRAPH, 6)
    for n in range(7):
        assert len(levels[n]) == atlas[n]


def test_directed_and_coloured_counts():
    # unlabelled digraphs without loops on 0..3 vertices: 1, 1, 3, 16
    levels = enumerate_structures(Vocabulary.of("R/2"), 3)
    assert [len(levels[n]) for n in range(4)] == [1, 1, 3, 16]
    # graphs with one colour: 2-vertex cases are 0/1 edges times colourings up to swap
    levels = enumerate_structures(Vocabulary.of("E/2s", "P/1"), 2)
    assert len(levels[2]) == 6


@pytest.mark.parametrize("vocab", [GRAPH, Vocabulary.of("R/2"), Vocabulary.of("E/2s", "P/1"),
                                   Vocabulary.of("T/3")])
def test_forms_separate_exactly_the_isomorphism_classes(vocab):
    rng = random.Random(7)
    for _ in range(60):
        n = rng.randint(1, 6)
        S = _random_structure(vocab, n, 0.4, rng)
        perm = list(range(n))
        rng.shuffle(perm)
        T = S.relabel(perm)
        assert canonical_form(S) == canonical_form(T)
        assert brute_canonical_form(S) == brute_canonical_form(T)
        U = _random_structure(vocab, n, 0.4, rng)
        same = canonical_form(S) == canonical_form(U)
        assert same == (brute_canonical_form(S) == brute_canonical_form(U))


def test_forms_agree_with_networkx_isomorphism():
    rng = random.Random(1)
    for _ in range(80):
        n = rng.randint(2, 7)
        G1 = nx.gnp_random_graph(n, 0.5, seed=rng.randrange(10**6))
        G2 = nx.gnp_random_graph(n, 0.5, seed=rng.randrange(10**6))
        S1, S2 = graph(n, G1.edges()), graph(n, G2.edges())
        assert (canonical_form(S1) == canonical_form(S2)) == nx.is_isomorphic(G1, G2)


def test_fixed_points_respect_order():
    path = graph(3, [(0, 1), (1, 2)])
    assert canonical_form(path, [0, 2]) == canonical_form(path, [2, 0])
    assert canonical_form(path, [0, 1]) != canonical_form(path, [1, 0])
    with pytest.raises(InvalidArgument):
        canonical_form(path, [1, 1])


def test_labeling_realizes_the_form():
    rng = random.Random(3)
    for _ in range(30):
        S = _random_structure(GRAPH, rng.randint(1, 7), 0.5, rng)
        form, labels = canonical_labeling(S)
        assert from_form(GRAPH, form) == S.relabel(labels)
