import numpy as np
import pytest

from sparse01 import _kernels_py, kernels
from sparse01.fast import GraphView, compile_pattern, count_extensions, list_extensions, sample_embeddings
from sparse01.structures import Embedding, RelStructure, SubPair, Vocabulary, extensions, is_embedding, nu

VOCAB = Vocabulary.of("E/2s", "D/2", "P/1")

PATTERNS = [
    (RelStructure.graph(2, [(0, 1)], VOCAB), [0]),
    (RelStructure.graph(3, [(0, 2), (1, 2)], VOCAB), [0, 1]),
    (RelStructure.graph(3, [(0, 1), (1, 2), (0, 2)], VOCAB), [0]),
    (RelStructure.graph(4, [(0, 1), (1, 2), (2, 3)], VOCAB), [0]),
    (RelStructure(VOCAB, 3, {"E": [(0, 1)], "D": [(1, 2)], "P": [(2,)]}), [0]),
    (RelStructure(VOCAB, 3, {"D": [(0, 1), (2, 1)]}), [0, 2]),
    (RelStructure(VOCAB, 2, {"P": [(1,)]}), [0]),
]


def random_host(n, seed, p=0.15):
    rng = np.random.default_rng(seed)
    E = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    D = [(i, j) for i in range(n) for j in range(n) if i != j and rng.random() < p / 2]
    Pc = [(i,) for i in range(n) if rng.random() < 0.4]
    return RelStructure(VOCAB, n, {"E": E, "D": D, "P": Pc})


def backends():
    out = [_kernels_py]
    if kernels.BACKEND == "cython":
        out.append(kernels._impl)
    return out


def test_compiled_backend_present():
    # the editable install builds the extension; the fallback is exercised below either way
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("seed", range(4))
def test_counts_match_generic_search(seed):
    M = random_host(12, seed)
    host = GraphView.from_structure(M)
    for B, fixed in PATTERNS:
        pat = compile_pattern(B, fixed, host)
        pair = SubPair(B, fixed)
        starts = [s for s in np.ndindex(*(M.n,) * len(fixed)) if len(set(s)) == len(s)]
        starts = [s for s in starts if is_embedding(pair.small_structure, M, s)][:60]
        if not starts:
            continue
        expected = []
        for s in starts:
            f = Embedding.make(pair.small_structure, M, list(s))
            expected.append(nu(f, pair))
        for impl in backends():
            got = impl.count_batch(host.indptr, host.indices, host.pairmask, host.vmask, pat.pat_pair, pat.pat_v,
                                   pat.order, pat.anchor, np.asarray(starts, dtype=np.int32), 0)
            assert got.tolist() == expected


@pytest.mark.parametrize("seed", range(3))
def test_listings_agree_across_backends(seed):
    M = random_host(14, 100 + seed, p=0.25)
    host = GraphView.from_structure(M)
    for B, fixed in PATTERNS:
        pat = compile_pattern(B, fixed, host)
        for x in range(M.n):
            if len(fixed) != 1:
                break
            start = np.array([x], dtype=np.int32)
            rows = [impl.list_extensions(host.indptr, host.indices, host.pairmask, host.vmask, pat.pat_pair,
                                         pat.pat_v, pat.order, pat.anchor, start, 0) for impl in backends()]
            for r in rows[1:]:
                assert np.array_equal(r, rows[0])
            if not is_embedding(SubPair(B, fixed).small_structure, M, (x,)):
                continue
            f = Embedding.make(SubPair(B, fixed).small_structure, M, [x])
            want = sorted(tuple(g.map) for g in extensions(f, SubPair(B, fixed)))
            assert sorted(map(tuple, rows[0].tolist())) == want


def test_limit_caps_counts():
    M = random_host(20, 7, p=0.5)
    host = GraphView.from_structure(M)
    B, fixed = PATTERNS[0]
    pat = compile_pattern(B, fixed, host)
    full = count_extensions(host, pat, [[x] for x in range(M.n)])
    capped = count_extensions(host, pat, [[x] for x in range(M.n)], limit=2)
    assert np.array_equal(capped, np.minimum(full, 2))
    assert len(list_extensions(host, pat, [0], limit=1)) == min(1, full[0])


def test_sample_embeddings_are_embeddings():
    M = random_host(30, 5, p=0.2)
    host = GraphView.from_structure(M)
    rng = np.random.default_rng(0)
    for A in (RelStructure.graph(1, (), VOCAB), RelStructure.graph(2, [(0, 1)], VOCAB),
              RelStructure(VOCAB, 2, {"P": [(0,)]})):
        rows = sample_embeddings(host, A, 25, rng)
        assert len({tuple(r) for r in rows.tolist()}) == len(rows)
        for r in rows.tolist():
            assert is_embedding(A, M, tuple(r))
