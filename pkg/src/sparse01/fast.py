"""Array views of large hosts and compiled patterns for the counting kernels.

Only unary and binary relations are supported here; the generic search in
:mod:`sparse01.structures` covers everything else. Unary relation ``i`` is bit
``i`` of a per-vertex byte, binary relation ``j`` is bit ``j`` of an ``n x n``
byte matrix (entry ``[x, y]`` for the tuple ``(x, y)``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import InvalidArgument
from .structures import RelStructure, SubPair, Vocabulary, _search_order


def supports(vocab: Vocabulary) -> bool:
    un = [r for r in vocab if r.arity == 1]
    bi = [r for r in vocab if r.arity == 2]
    return len(un) + len(bi) == len(vocab) and len(un) <= 8 and len(bi) <= 8


def _bits(vocab: Vocabulary):
    ubit, bbit = {}, {}
    for r in vocab:
        if r.arity == 1:
            ubit[r.name] = len(ubit)
        elif r.arity == 2:
            bbit[r.name] = len(bbit)
    return ubit, bbit


class GraphView:
    """CSR Gaifman adjacency plus relation bitmaps of a host structure."""

    def __init__(self, vocab: Vocabulary, n: int, arrays: Mapping[str, np.ndarray]):
        if not supports(vocab):
            raise InvalidArgument("fast path needs at most 8 unary and 8 binary relations")
        self.vocab = vocab
        self.n = int(n)
        self.ubit, self.bbit = _bits(vocab)
        self.vmask = np.zeros(self.n, dtype=np.uint8)
        self.pairmask = np.zeros((self.n, self.n), dtype=np.uint8)
        us, vs = [], []
        for r in vocab:
            a = np.asarray(arrays.get(r.name, np.zeros((0, r.arity), dtype=np.int64)), dtype=np.int64)
            a = a.reshape(-1, r.arity)
            if r.arity == 1:
                self.vmask[a[:, 0]] |= np.uint8(1 << self.ubit[r.name])
                continue
            bit = np.uint8(1 << self.bbit[r.name])
            self.pairmask[a[:, 0], a[:, 1]] |= bit
            if r.symmetric:
                self.pairmask[a[:, 1], a[:, 0]] |= bit
            us.append(a[:, 0])
            vs.append(a[:, 1])
        if us:
            u = np.concatenate(us + vs)
            v = np.concatenate(vs + us)
            key = np.unique(u * self.n + v)
            u, v = key // self.n, key % self.n
        else:
            u = v = np.zeros(0, dtype=np.int64)
        self.indices = v.astype(np.int32)
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(u, minlength=self.n), out=self.indptr[1:])

    @classmethod
    def from_structure(cls, S: RelStructure) -> "GraphView":
        arrays = {r.name: np.array(sorted(S.tuples(r.name)), dtype=np.int64).reshape(-1, r.arity) for r in S.vocab}
        return cls(S.vocab, S.n, arrays)

    def degree(self, x: int) -> int:
        return int(self.indptr[x + 1] - self.indptr[x])

    def neighbors(self, x: int) -> np.ndarray:
        return self.indices[self.indptr[x]:self.indptr[x + 1]]

    def is_embedding(self, pattern: "Pattern", rows: np.ndarray) -> np.ndarray:
        """Which rows (images of all pattern vertices) are induced embeddings."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        ok = np.ones(rows.shape[0], dtype=bool)
        k = pattern.k
        for i in range(k):
            ok &= self.vmask[rows[:, i]] == pattern.pat_v[i]
            for j in range(k):
                if i == j:
                    continue
                ok &= rows[:, i] != rows[:, j]
                ok &= self.pairmask[rows[:, i], rows[:, j]] == pattern.pat_pair[i, j]
        return ok


@dataclass
class Pattern:
    """A pattern structure with its fixed part and search plan."""

    k: int
    n_fixed: int
    fixed: tuple
    pat_pair: np.ndarray
    pat_v: np.ndarray
    order: np.ndarray
    anchor: np.ndarray


def compile_pattern(B: RelStructure, fixed: Sequence[int], host: GraphView) -> Pattern:
    """Search plan for extending images of ``fixed`` (in that order) to embeddings of ``B``."""
    if B.vocab.names != host.vocab.names:
        raise InvalidArgument("pattern and host vocabularies differ")
    fixed = tuple(fixed)
    k = B.n
    pat_v = np.zeros(k, dtype=np.uint8)
    pat_pair = np.zeros((max(k, 1), max(k, 1)), dtype=np.uint8)
    for r in B.vocab:
        for t in B.tuples(r.name):
            if r.arity == 1:
                pat_v[t[0]] |= np.uint8(1 << host.ubit[r.name])
            else:
                bit = np.uint8(1 << host.bbit[r.name])
                pat_pair[t[0], t[1]] |= bit
                if r.symmetric:
                    pat_pair[t[1], t[0]] |= bit
    order = list(fixed) + _search_order(B, fixed)
    pos = {x: i for i, x in enumerate(order)}
    nb = B.neighbors()
    anchor = []
    for i, x in enumerate(order):
        earlier = [z for z in nb[x] if pos[z] < i]
        anchor.append(min(earlier, key=lambda z: pos[z]) if earlier and i >= len(fixed) else -1)
    return Pattern(k, len(fixed), fixed, pat_pair[:k, :k].copy(), pat_v,
                   np.asarray(order, dtype=np.int32), np.asarray(anchor, dtype=np.int32))


def count_extensions(host: GraphView, pat: Pattern, starts, limit: int = 0) -> np.ndarray:
    """Number of extensions of each row of ``starts`` (images of ``pat.fixed``)."""
    starts = np.ascontiguousarray(np.asarray(starts, dtype=np.int32).reshape(-1, pat.n_fixed))
    return kernels.count_batch(host.indptr, host.indices, host.pairmask, host.vmask, pat.pat_pair,
                               pat.pat_v, pat.order, pat.anchor, starts, int(limit))


def list_extensions(host: GraphView, pat: Pattern, start, limit: int = 0) -> np.ndarray:
    """Rows of images (indexed by pattern element) of every extension of ``start``."""
    start = np.ascontiguousarray(np.asarray(start, dtype=np.int32).reshape(pat.n_fixed))
    return kernels.list_extensions(host.indptr, host.indices, host.pairmask, host.vmask, pat.pat_pair,
                                   pat.pat_v, pat.order, pat.anchor, start, int(limit))


def pair_pattern(pair: SubPair, host: GraphView) -> Pattern:
    return compile_pattern(pair.big, sorted(pair.small), host)


def sample_embeddings(host: GraphView, A: RelStructure, cap: int, rng: np.random.Generator,
                      max_attempts: int = 200_000) -> np.ndarray:
    """Up to ``cap`` distinct embeddings of ``A``, uniform without replacement.

    Connected patterns with at least two elements are enumerated in full and
    subsampled; otherwise random injective tuples are drawn and filtered.
    """
    k = A.n
    if k == 0:
        return np.zeros((1, 0), dtype=np.int32)
    pat = compile_pattern(A, (), host)
    nb = A.neighbors()
    connected = k >= 2 and all(nb[x] for x in range(k)) and _connected(nb, k)
    if connected:
        rows = list_extensions(host, pat, np.zeros(0, dtype=np.int32))
        if len(rows) > cap:
            pick = np.sort(rng.choice(len(rows), size=cap, replace=False))
            rows = rows[pick]
        return rows.astype(np.int32)
    if k > host.n:
        return np.zeros((0, k), dtype=np.int32)
    found = {}
    attempts = 0
    batch = max(64, 4 * cap)
    while len(found) < cap and attempts < max_attempts:
        cand = rng.integers(0, host.n, size=(batch, k))
        attempts += batch
        ok = host.is_embedding(pat, cand)
        for row in cand[ok]:
            t = tuple(int(v) for v in row)
            if t not in found:
                found[t] = None
                if len(found) >= cap:
                    break
    rows = np.array(list(found), dtype=np.int32).reshape(-1, k)
    return rows


def _connected(nb, k) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        x = stack.pop()
        for y in nb[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == k
