"""Finite relational structures, embeddings and extension enumeration.

Elements are dense integer ids ``0..n-1``. Structures never change after
construction; derived indexes (incidence lists, Gaifman neighbours) are
built lazily and cached.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import InvalidArgument

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Relation:
    name: str
    arity: int
    symmetric: bool = False

    def __str__(self):
        return f"{self.name}/{self.arity}" + ("s" if self.symmetric else "")

    @classmethod
    def parse(cls, text):
        """Parse ``NAME/ARITY`` with an optional ``s`` suffix for symmetric."""
        name, sep, rest = text.partition("/")
        if not sep or not name:
            raise InvalidArgument(f"bad relation spec {text!r}")
        symmetric = rest.endswith("s")
        digits = rest[:-1] if symmetric else rest
        if not digits.isdigit():
            raise InvalidArgument(f"bad arity in {text!r}")
        return cls(name, int(digits), symmetric)

    def normalize(self, tup):
        return tuple(sorted(tup)) if self.symmetric else tuple(tup)


@dataclass(frozen=True)
class Vocabulary:
    """Finite list of relation symbols. Order matters for encodings."""

    relations: tuple[Relation, ...]

    def __post_init__(self):
        names = [r.name for r in self.relations]
        if len(set(names)) != len(names):
            raise InvalidArgument(f"duplicate relation names in {names}")
        for r in self.relations:
            if r.arity < 1:
                raise InvalidArgument(f"relation {r.name} has arity {r.arity}")
            if r.symmetric and r.arity < 2:
                raise InvalidArgument(f"unary relation {r.name} cannot be symmetric")

    @classmethod
    def of(cls, *specs):
        rels = []
        for s in specs:
            rels.append(s if isinstance(s, Relation) else Relation.parse(s))
        return cls(tuple(rels))

    @property
    def names(self):
        return tuple(r.name for r in self.relations)

    def __iter__(self):
        return iter(self.relations)

    def __len__(self):
        return len(self.relations)

    def __contains__(self, name):
        return any(r.name == name for r in self.relations)

    def __getitem__(self, name) -> Relation:
        for r in self.relations:
            if r.name == name:
                return r
        raise KeyError(name)

    def union(self, other: "Vocabulary") -> "Vocabulary":
        extra = [r for r in other.relations if r.name not in self]
        for r in other.relations:
            if r.name in self and self[r.name] != r:
                raise InvalidArgument(f"conflicting declarations of {r.name}")
        return Vocabulary(self.relations + tuple(extra))

    def restrict(self, names: Iterable[str]) -> "Vocabulary":
        keep = set(names)
        return Vocabulary(tuple(r for r in self.relations if r.name in keep))

    def __str__(self):
        return " ".join(str(r) for r in self.relations)


GRAPH = Vocabulary.of("E/2s")


class RelStructure:
    """A finite structure over an irreflexive vocabulary."""

    __slots__ = ("vocab", "n", "_tuples", "_hash", "_incidence", "_nbrs")

    def __init__(self, vocab: Vocabulary, n: int, tuples: Mapping[str, Iterable] | None = None,
                 check: bool = True):
        if n < 0:
            raise InvalidArgument("negative universe size")
        self.vocab = vocab
        self.n = int(n)
        tuples = tuples or {}
        if check:
            unknown = set(tuples) - set(vocab.names)
            if unknown:
                raise InvalidArgument(f"relations not in vocabulary: {sorted(unknown)}")
        store = {}
        for rel in vocab.relations:
            raw = tuples.get(rel.name, ())
            if check:
                out = set()
                for t in raw:
                    t = tuple(int(x) for x in t)
                    if len(t) != rel.arity:
                        raise InvalidArgument(f"{rel.name} tuple {t} has wrong length")
                    if len(set(t)) != len(t):
                        raise InvalidArgument(f"{rel.name} tuple {t} repeats an element")
                    for x in t:
                        if not 0 <= x < self.n:
                            raise InvalidArgument(f"{rel.name} tuple {t} leaves the universe")
                    out.add(rel.normalize(t))
                store[rel.name] = frozenset(out)
            else:
                store[rel.name] = raw if isinstance(raw, frozenset) else frozenset(raw)
        self._tuples = store
        self._hash = None
        self._incidence = None
        self._nbrs = None

    # construction helpers
    @classmethod
    def graph(cls, n, edges=(), vocab=GRAPH):
        return cls(vocab, n, {vocab.relations[0].name: edges})

    def with_relations(self, vocab: Vocabulary, extra: Mapping[str, Iterable]) -> "RelStructure":
        """Same universe and tuples, over a larger vocabulary with extra relations."""
        merged = {name: self._tuples[name] for name in self.vocab.names}
        for name, tups in extra.items():
            merged[name] = tups
        return RelStructure(vocab, self.n, merged)

    def reduct(self, vocab: Vocabulary) -> "RelStructure":
        return RelStructure(vocab, self.n, {r.name: self._tuples[r.name] for r in vocab}, check=False)

    def relabel(self, perm: Sequence[int]) -> "RelStructure":
        """Image of the structure under the bijection ``x -> perm[x]``."""
        out = {}
        for rel in self.vocab:
            out[rel.name] = frozenset(rel.normalize(tuple(perm[x] for x in t))
                                      for t in self._tuples[rel.name])
        return RelStructure(self.vocab, self.n, out, check=False)

    # access
    @property
    def universe(self):
        return range(self.n)

    def tuples(self, name) -> frozenset:
        return self._tuples[name]

    def has(self, name, tup) -> bool:
        rel = self.vocab[name]
        return rel.normalize(tup) in self._tuples[name]

    def all_tuples(self) -> Iterator[tuple[str, tuple]]:
        for rel in self.vocab:
            for t in self._tuples[rel.name]:
                yield rel.name, t

    def tuple_count(self, name=None) -> int:
        if name is not None:
            return len(self._tuples[name])
        return sum(len(v) for v in self._tuples.values())

    def incidence(self) -> list[list[tuple[str, tuple]]]:
        """Per element, the tuples containing it."""
        if self._incidence is None:
            inc = [[] for _ in range(self.n)]
            for name, t in self.all_tuples():
                for x in set(t):
                    inc[x].append((name, t))
            self._incidence = inc
        return self._incidence

    def neighbors(self) -> list[frozenset]:
        """Gaifman graph adjacency."""
        if self._nbrs is None:
            nb = [set() for _ in range(self.n)]
            for _, t in self.all_tuples():
                for x in t:
                    nb[x].update(t)
            for x in range(self.n):
                nb[x].discard(x)
            self._nbrs = [frozenset(s) for s in nb]
        return self._nbrs

    def tuples_within(self, X) -> Iterator[tuple[str, tuple]]:
        """Tuples whose range lies inside ``X``."""
        X = X if isinstance(X, (set, frozenset)) else set(X)
        if self.n <= 64 or len(X) * 8 > self.n:
            for name, t in self.all_tuples():
                if all(x in X for x in t):
                    yield name, t
            return
        inc = self.incidence()
        for x in X:
            for name, t in inc[x]:
                # report each tuple once, from its least element
                if min(t) == x and all(y in X for y in t):
                    yield name, t

    def _key(self):
        return (self.vocab, self.n, tuple(self._tuples[r.name] for r in self.vocab))

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, RelStructure):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self):
        parts = []
        for rel in self.vocab:
            ts = sorted(self._tuples[rel.name])
            if ts:
                shown = ts if len(ts) <= 6 else ts[:6] + ["..."]
                parts.append(f"{rel.name}={shown}")
        return f"RelStructure(n={self.n}, {', '.join(parts) or 'no tuples'})"


def induced(S: RelStructure, X: Iterable[int]) -> RelStructure:
    """Restriction of ``S`` to ``X``, relabelled by the sorted order of ``X``."""
    xs = sorted(set(X))
    for x in xs:
        if not 0 <= x < S.n:
            raise InvalidArgument(f"element {x} outside universe of size {S.n}")
    pos = {x: i for i, x in enumerate(xs)}
    out = {r.name: set() for r in S.vocab}
    for name, t in S.tuples_within(pos.keys()):
        out[name].add(tuple(pos[x] for x in t))
    return RelStructure(S.vocab, len(xs), out)


def is_embedding(source: RelStructure, target: RelStructure, mapping: Sequence[int]) -> bool:
    if source.vocab != target.vocab and not set(source.vocab.names) <= set(target.vocab.names):
        return False
    if len(mapping) != source.n or len(set(mapping)) != len(mapping):
        return False
    if any(not 0 <= y < target.n for y in mapping):
        return False
    for name, t in source.all_tuples():
        if not target.has(name, tuple(mapping[x] for x in t)):
            return False
    # no extra tuples among the image
    img = set(mapping)
    count = {}
    for name, _ in target.tuples_within(img):
        count[name] = count.get(name, 0) + 1
    return all(count.get(r.name, 0) == source.tuple_count(r.name) for r in source.vocab)


@dataclass(frozen=True)
class Embedding:
    """Injective map ``source -> target`` preserving and reflecting every relation."""

    source: RelStructure
    target: RelStructure
    map: tuple[int, ...]

    @classmethod
    def make(cls, source, target, mapping):
        mapping = tuple(int(y) for y in mapping)
        if not is_embedding(source, target, mapping):
            raise InvalidArgument(f"map {mapping} is not an embedding")
        return cls(source, target, mapping)

    @property
    def range(self) -> frozenset:
        return frozenset(self.map)

    def __call__(self, x):
        return self.map[x]


@dataclass(frozen=True)
class SubPair:
    """A substructure ``A`` presented inside ``B`` as a subset of B's universe."""

    big: RelStructure
    small: frozenset

    def __init__(self, big, small):
        small = frozenset(int(x) for x in small)
        if any(not 0 <= x < big.n for x in small):
            raise InvalidArgument(f"{sorted(small)} is not inside a universe of size {big.n}")
        object.__setattr__(self, "big", big)
        object.__setattr__(self, "small", small)

    @property
    def small_structure(self) -> RelStructure:
        return induced(self.big, self.small)

    @property
    def new_elements(self) -> list[int]:
        return [x for x in range(self.big.n) if x not in self.small]


# ---------------------------------------------------------------- extensions

def _search_order(B: RelStructure, fixed: Iterable[int]) -> list[int]:
    """Order the free elements of B so each is adjacent to an earlier one when possible."""
    placed = set(fixed)
    rest = [x for x in range(B.n) if x not in placed]
    nb = B.neighbors()
    order = []
    while rest:
        # most links into the placed set first, ties by id
        best = max(rest, key=lambda x: (len(nb[x] & placed), -x))
        order.append(best)
        placed.add(best)
        rest.remove(best)
    return order


def _extend(B: RelStructure, M: RelStructure, start: dict[int, int]) -> Iterator[dict[int, int]]:
    """All injective extensions of ``start`` to embeddings of B into M."""
    order = _search_order(B, start)
    nbB = B.neighbors()
    nbM = M.neighbors()
    incM = M.incidence()
    # per step: B-tuples that become fully assigned when that element is placed
    assigned = set(start)
    checks = []
    anchors = []
    for x in order:
        assigned.add(x)
        checks.append([(name, t) for name, t in B.all_tuples() if x in t and all(y in assigned for y in t)])
        earlier = [z for z in nbB[x] if z in assigned and z != x]
        anchors.append(min(earlier) if earlier else None)
    counts_b = {}
    for name, t in B.all_tuples():
        counts_b[name] = counts_b.get(name, 0) + 1
    g = dict(start)
    inv = {y: x for x, y in g.items()}

    def consistent(x, y):
        for name, t in checks[depth_of[x]]:
            if not M.has(name, tuple(g[z] if z != x else y for z in t)):
                return False
        # reflect: every M-tuple through y inside the image must come from B
        for name, t in incM[y]:
            pre = []
            for z in t:
                if z == y:
                    pre.append(x)
                elif z in inv:
                    pre.append(inv[z])
                else:
                    break
            else:
                if not B.has(name, tuple(pre)):
                    return False
        return True

    depth_of = {x: i for i, x in enumerate(order)}

    def rec(i):
        if i == len(order):
            yield dict(g)
            return
        x = order[i]
        a = anchors[i]
        cands = nbM[g[a]] if a is not None else range(M.n)
        for y in sorted(cands) if a is not None else cands:
            if y in inv:
                continue
            if not consistent(x, y):
                continue
            g[x] = y
            inv[y] = x
            yield from rec(i + 1)
            del g[x]
            del inv[y]

    yield from rec(0)


def _start_from(f: Embedding, pair: SubPair) -> dict[int, int]:
    A = pair.small_structure
    if f.source != A:
        raise InvalidArgument("embedding source differs from the small side of the pair")
    if not is_embedding(f.source, f.target, f.map):
        raise InvalidArgument(f"map {f.map} is not an embedding")
    if pair.big.vocab != f.target.vocab:
        raise InvalidArgument("vocabulary mismatch between pair and target")
    return {x: f.map[i] for i, x in enumerate(sorted(pair.small))}


def extensions(f: Embedding, pair: SubPair) -> list[Embedding]:
    """All embeddings of ``pair.big`` into ``f.target`` restricting to ``f``; lexicographic order."""
    start = _start_from(f, pair)
    B, M = pair.big, f.target
    maps = sorted(tuple(g[x] for x in range(B.n)) for g in _extend(B, M, start))
    return [Embedding(B, M, m) for m in maps]


def nu(f: Embedding, pair: SubPair) -> int:
    start = _start_from(f, pair)
    return sum(1 for _ in _extend(pair.big, f.target, start))


def disjoint_family(f: Embedding, pair: SubPair, m: int) -> list[Embedding] | None:
    """``m`` extensions of ``f`` pairwise meeting only inside ``Rang(f)``, or None."""
    if m < 0:
        raise InvalidArgument("m must be non-negative")
    if m == 0:
        _start_from(f, pair)
        return []
    exts = extensions(f, pair)
    base = f.range
    news = [frozenset(g.map) - base for g in exts]
    chosen: list[int] = []

    def rec(start, used):
        if len(chosen) == m:
            return True
        for i in range(start, len(exts)):
            if len(exts) - i < m - len(chosen):
                return False
            if news[i] & used:
                continue
            chosen.append(i)
            if rec(i + 1, used | news[i]):
                return True
            chosen.pop()
        return False

    if rec(0, frozenset()):
        return [exts[i] for i in chosen]
    return None


# ------------------------------------------------------------- amalgamation

def free_amalgam_violation(M: RelStructure, A, C, B) -> str | None:
    """Why ``A`` and ``C`` fail to be freely amalgamated over ``B`` in ``M``; None if they are."""
    A, C, B = frozenset(A), frozenset(C), frozenset(B)
    for X, label in ((A, "A"), (C, "C"), (B, "B")):
        if any(not 0 <= x < M.n for x in X):
            return f"{label} leaves the universe"
    if not B <= A or not B <= C:
        return "B is not contained in both A and C"
    if A & C != B:
        return "A and C meet outside B"
    union = A | C
    a_only, c_only = A - B, C - B
    for name, t in M.tuples_within(union):
        s = set(t)
        if s & a_only and s & c_only:
            return f"tuple {name}{t} crosses"
    return None


def is_free_amalgam(M: RelStructure, A, C, B) -> bool:
    why = free_amalgam_violation(M, A, C, B)
    if why is not None:
        log.debug("not a free amalgam: %s", why)
    return why is None

