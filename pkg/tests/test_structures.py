import itertools

import networkx as nx
import pytest
from networkx.algorithms import isomorphism

from conftest import complete, cycle, embed_at, graph
from sparse01.errors import InvalidArgument
from sparse01.structures import (Embedding, RelStructure, SubPair, Vocabulary, disjoint_family, extensions,
                                 induced, is_embedding, is_free_amalgam, nu)


def test_induced_examples():
    K3 = complete(3)
    assert induced(K3, {0, 1}) == graph(2, [(0, 1)])
    assert induced(K3, range(3)) == K3
    assert induced(cycle(4), {0, 2}) == graph(2, [])
    with pytest.raises(InvalidArgument):
        induced(K3, {5})


def test_induced_idempotent():
    C = cycle(6)
    once = induced(C, {0, 1, 2, 4})
    assert induced(once, range(once.n)) == once


def test_structure_rejects_bad_tuples():
    with pytest.raises(InvalidArgument):
        graph(2, [(0, 0)])
    with pytest.raises(InvalidArgument):
        graph(2, [(0, 2)])
    with pytest.raises(InvalidArgument):
        Vocabulary.of("E/2", "E/3")
    with pytest.raises(InvalidArgument):
        Vocabulary.of("P/1s")


def test_symmetric_tuples_are_normalized():
    assert graph(2, [(1, 0)]) == graph(2, [(0, 1)])
    V = Vocabulary.of("R/2")
    assert RelStructure(V, 2, {"R": [(1, 0)]}) != RelStructure(V, 2, {"R": [(0, 1)]})


def test_pendant_in_triangle():
    K3 = complete(3)
    pend = SubPair(graph(2, [(0, 1)]), {0})
    f = embed_at(pend, K3, [1])
    exts = extensions(f, pend)
    assert [g.map for g in exts] == [(1, 0), (1, 2)]
    assert nu(f, pend) == 2
    assert all(g.map[0] == 1 and is_embedding(g.source, K3, g.map) for g in exts)


def test_identity_pair_has_one_extension():
    K3 = complete(3)
    same = SubPair(graph(2, [(0, 1)]), {0, 1})
    f = embed_at(same, K3, [0, 2])
    assert [g.map for g in extensions(f, same)] == [(0, 2)]


def _brute_nu(pair, f):
    B, M = pair.big, f.target
    small = sorted(pair.small)
    count = 0
    for img in itertools.permutations(range(M.n), B.n):
        if all(img[x] == f.map[i] for i, x in enumerate(small)) and is_embedding(B, M, img):
            count += 1
    return count


def test_triangle_over_edge_in_k4_matches_brute_force():
    K4 = complete(4)
    tri = SubPair(complete(3), {0, 1})
    f = embed_at(tri, K4, [0, 1])
    assert nu(f, tri) == 2 == _brute_nu(tri, f)


def test_nu_against_networkx_subgraph_matcher():
    G = nx.gnp_random_graph(9, 0.45, seed=3)
    M = graph(9, G.edges())
    pattern = SubPair(graph(3, [(0, 1), (1, 2)]), {0})
    P = nx.Graph([(0, 1), (1, 2)])
    matcher = isomorphism.GraphMatcher(G, P)
    induced_maps = list(matcher.subgraph_isomorphisms_iter())
    for v in range(9):
        expected = sum(1 for m in induced_maps if {p: g for g, p in m.items()}[0] == v)
        assert nu(embed_at(pattern, M, [v]), pattern) == expected


def test_nu_invariant_under_relabeling():
    G = nx.gnp_random_graph(8, 0.5, seed=11)
    M = graph(8, G.edges())
    perm = [3, 7, 0, 5, 1, 6, 2, 4]
    M2 = M.relabel(perm)
    pair = SubPair(complete(3), {0, 1})
    for a, b in G.edges():
        f = embed_at(pair, M, [a, b])
        f2 = embed_at(pair, M2, [perm[a], perm[b]])
        assert nu(f, pair) == nu(f2, pair)


def test_extension_requires_embedding():
    K3 = complete(3)
    pair = SubPair(graph(2, []), {0, 1})
    with pytest.raises(InvalidArgument):
        Embedding.make(pair.small_structure, K3, [0, 1])


def test_disjoint_family_examples():
    star = graph(6, [(0, i) for i in range(1, 6)])
    pend = SubPair(graph(2, [(0, 1)]), {0})
    f = embed_at(pend, star, [0])
    fam = disjoint_family(f, pend, 5)
    assert fam is not None and len(fam) == 5
    assert disjoint_family(f, pend, 6) is None
    assert disjoint_family(f, pend, 0) == []
    with pytest.raises(InvalidArgument):
        disjoint_family(f, pend, -1)
    K4 = complete(4)
    tri = SubPair(complete(3), {0, 1})
    fam = disjoint_family(embed_at(tri, K4, [0, 1]), tri, 2)
    assert fam is not None
    assert len({g.map[2] for g in fam}) == 2


def test_free_amalgam_examples():
    two = graph(4, [(0, 1), (2, 3)])
    assert is_free_amalgam(two, {0, 1}, {2, 3}, set())
    edge = graph(2, [(0, 1)])
    assert not is_free_amalgam(edge, {0}, {1}, set())
    path = graph(3, [(0, 1), (1, 2)])
    assert is_free_amalgam(path, {0, 1}, {1, 2}, {1})
    assert not is_free_amalgam(path, {0, 1}, {0, 2}, {1})  # A ∩ C differs from B


def test_free_amalgam_symmetric():
    G = nx.gnp_random_graph(7, 0.4, seed=5)
    M = graph(7, G.edges())
    for A in itertools.combinations(range(7), 3):
        for C in itertools.combinations(range(7), 3):
            B = set(A) & set(C)
            assert is_free_amalgam(M, A, C, B) == is_free_amalgam(M, C, A, B)
