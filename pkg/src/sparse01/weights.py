"""Extension weights for a base context: classification, decomposition and closures.

For ``A ⊆ B`` the weight is ``|B∖A| - Σ_R α_R · (R-tuples of B not inside A)``.
An extension is algebraic when every proper top piece has negative weight and
strong when every nonempty bottom piece has positive weight.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DegenerateContextError, InternalConsistencyError, InvalidArgument
from .structures import RelStructure, SubPair, Vocabulary, induced

log = logging.getLogger(__name__)

EQUAL = "equal"
ALGEBRAIC = "algebraic_i"
STRONG = "strong_s"
PRIMITIVE = "primitive_pr"
MIXED = "mixed"

TOL = 1e-9


class BaseContext:
    """Vocabulary with a density exponent and coefficient per relation."""

    def __init__(self, vocab: Vocabulary, alpha: Mapping[str, float], coeff: Mapping[str, float] | None = None,
                 eps_cap: float = 0.5):
        coeff = dict(coeff or {})
        self.vocab = vocab
        self.alpha = {}
        self.coeff = {}
        for rel in vocab:
            if rel.name not in alpha:
                raise InvalidArgument(f"no exponent for relation {rel.name}")
            a = float(alpha[rel.name])
            c = float(coeff.get(rel.name, 1.0))
            if not 0.0 < a < 1.0:
                raise InvalidArgument(f"exponent for {rel.name} must lie in (0,1), got {a}")
            if not 0.0 < c <= 1.0:
                raise InvalidArgument(f"coefficient for {rel.name} must lie in (0,1], got {c}")
            self.alpha[rel.name] = a
            self.coeff[rel.name] = c
        extra = set(alpha) - set(vocab.names)
        if extra:
            raise InvalidArgument(f"exponents given for unknown relations {sorted(extra)}")
        if not 0.0 < eps_cap < 1.0:
            raise InvalidArgument("eps_cap must lie in (0,1)")
        self.eps_cap = float(eps_cap)

    @classmethod
    def graph(cls, alpha, coeff=1.0, eps_cap=0.5):
        from .structures import GRAPH

        return cls(GRAPH, {"E": alpha}, {"E": coeff}, eps_cap)

    def __eq__(self, other):
        return (isinstance(other, BaseContext) and self.vocab == other.vocab and self.alpha == other.alpha
                and self.coeff == other.coeff and self.eps_cap == other.eps_cap)

    def __repr__(self):
        return f"BaseContext(alpha={self.alpha}, coeff={self.coeff})"


# ------------------------------------------------------------ subset calculus

def _popcount(x: int) -> int:
    return bin(x).count("1")


def _submasks(mask: int):
    s = mask
    while True:
        yield s
        if s == 0:
            return
        s = (s - 1) & mask


class SubsetCalculus:
    """Weights of all subsets of a small structure, indexed by bitmask.

    ``phi[X] = |X| - Σ α_R · (R-tuples inside X)``, so ``w(X,Y) = phi[Y] - phi[X]``
    for ``X ⊆ Y``.
    """

    MAX_ELEMENTS = 20

    def __init__(self, S: RelStructure, ctx: BaseContext, extra: Sequence[tuple[int, float]] = ()):
        if S.n > self.MAX_ELEMENTS:
            raise InvalidArgument(f"subset calculus limited to {self.MAX_ELEMENTS} elements")
        self.S = S
        self.ctx = ctx
        self.n = S.n
        self.full = (1 << S.n) - 1
        weights = []
        for name, t in S.all_tuples():
            m = 0
            for x in t:
                m |= 1 << x
            weights.append((m, -ctx.alpha[name]))
        weights.extend(extra)
        self.tuple_masks = weights
        self._phi = {}
        self._strong = {}
        self._alg = {}

    def phi(self, X: int) -> float:
        v = self._phi.get(X)
        if v is None:
            v = float(_popcount(X))
            for m, a in self.tuple_masks:
                if m & X == m:
                    v += a
            self._phi[X] = v
        return v

    def w(self, X: int, Y: int) -> float:
        return self.phi(Y) - self.phi(X)

    def _check(self, X, Y, v):
        if abs(v) <= TOL:
            raise DegenerateContextError(self.members(X), self.members(Y), v)

    def members(self, X: int) -> list[int]:
        return [i for i in range(self.n) if X >> i & 1]

    def mask(self, xs: Iterable[int]) -> int:
        m = 0
        for x in xs:
            m |= 1 << x
        return m

    def is_algebraic(self, X: int, Y: int) -> bool:
        """``w(C,Y) < 0`` for every ``X ⊆ C ⊊ Y``; False when ``X == Y``."""
        key = (X, Y)
        r = self._alg.get(key)
        if r is not None:
            return r
        if X == Y:
            r = False
        else:
            r = True
            py = self.phi(Y)
            for s in _submasks(Y & ~X):
                C = X | s
                if C == Y:
                    continue
                v = py - self.phi(C)
                self._check(C, Y, v)
                if v > 0:
                    r = False
        self._alg[key] = r
        return r

    def is_strong(self, X: int, Y: int) -> bool:
        """``w(X,C) > 0`` for every ``X ⊊ C ⊆ Y``; False when ``X == Y``."""
        key = (X, Y)
        r = self._strong.get(key)
        if r is not None:
            return r
        if X == Y:
            r = False
        else:
            r = True
            px = self.phi(X)
            for s in _submasks(Y & ~X):
                if s == 0:
                    continue
                v = self.phi(X | s) - px
                self._check(X, X | s, v)
                if v < 0:
                    r = False
        self._strong[key] = r
        return r

    def is_primitive(self, X: int, Y: int) -> bool:
        if not self.is_strong(X, Y):
            return False
        for s in _submasks(Y & ~X):
            C = X | s
            if C == X or C == Y:
                continue
            if self.is_strong(X, C) and self.is_strong(C, Y):
                return False
        return True

    def classify(self, X: int, Y: int) -> str:
        if X & ~Y:
            raise InvalidArgument("small side is not contained in big side")
        if X == Y:
            return EQUAL
        alg = self.is_algebraic(X, Y)
        strong = self.is_strong(X, Y)
        if alg:
            return ALGEBRAIC
        if strong:
            return PRIMITIVE if self.is_primitive(X, Y) else STRONG
        return MIXED

    def decompose(self, X: int, Y: int) -> list[int]:
        if X == Y:
            return [X]
        if not self.is_strong(X, Y):
            raise InvalidArgument("decomposition needs a strong pair")
        chain = [X]
        cur = X
        while cur != Y:
            cands = []
            for s in _submasks(Y & ~cur):
                C = cur | s
                if C == cur:
                    continue
                if self.is_strong(cur, C) and (C == Y or self.is_strong(C, Y)):
                    cands.append(C)
            minimal = [C for C in cands if not any(D != C and D & C == D for D in cands)]
            nxt = min(minimal, key=lambda C: self.members(C))
            chain.append(nxt)
            cur = nxt
        return chain

    def decomposition_sums(self, X: int, Y: int) -> tuple[float, float, int]:
        """(min, max, count) of step-weight sums over every primitive chain from X to Y."""
        memo = {}

        def rec(cur):
            if cur == Y:
                return (0.0, 0.0, 1)
            r = memo.get(cur)
            if r is not None:
                return r
            lo, hi, cnt = math.inf, -math.inf, 0
            for s in _submasks(Y & ~cur):
                C = cur | s
                if C == cur or not self.is_primitive(cur, C):
                    continue
                a, b, c = rec(C)
                if c == 0:
                    continue
                step = self.w(cur, C)
                lo, hi, cnt = min(lo, step + a), max(hi, step + b), cnt + c
            memo[cur] = (lo, hi, cnt)
            return memo[cur]

        return rec(X)


# ------------------------------------------------------------ pair-level API

def weight(pair: SubPair, ctx: BaseContext) -> float:
    B, A = pair.big, pair.small
    w = float(B.n - len(A))
    for name, t in B.all_tuples():
        if not all(x in A for x in t):
            w -= ctx.alpha[name]
    return w


def calculus(pair_or_struct, ctx: BaseContext) -> SubsetCalculus:
    S = pair_or_struct.big if isinstance(pair_or_struct, SubPair) else pair_or_struct
    return SubsetCalculus(S, ctx)


def classify(pair: SubPair, ctx: BaseContext) -> str:
    calc = SubsetCalculus(pair.big, ctx)
    return calc.classify(calc.mask(pair.small), calc.full)


def decompose(pair: SubPair, ctx: BaseContext) -> list[frozenset]:
    calc = SubsetCalculus(pair.big, ctx)
    chain = calc.decompose(calc.mask(pair.small), calc.full)
    return [frozenset(calc.members(c)) for c in chain]


def alpha_strong(pair: SubPair, ctx: BaseContext) -> float:
    calc = SubsetCalculus(pair.big, ctx)
    X, Y = calc.mask(pair.small), calc.full
    if X == Y:
        return 0.0
    chain = calc.decompose(X, Y)
    total = sum(calc.w(a, b) for a, b in zip(chain, chain[1:]))
    direct = weight(pair, ctx)
    if abs(total - direct) > TOL:
        raise InternalConsistencyError(f"step weights sum to {total}, direct weight is {direct}")
    return total


@dataclass
class WeightedPair:
    pair: SubPair
    weight: float
    kind: str
    decomposition: list[frozenset] | None = None


def weighted_pair(pair: SubPair, ctx: BaseContext) -> WeightedPair:
    kind = classify(pair, ctx)
    dec = decompose(pair, ctx) if kind in (STRONG, PRIMITIVE, EQUAL) else None
    return WeightedPair(pair, weight(pair, ctx), kind, dec)


# ------------------------------------------------------------------ closures

@dataclass
class ClosureResult:
    base: frozenset
    k: int
    result: frozenset
    certificate: list[frozenset] = field(default_factory=list)


def _max_incidence(rel, b: int) -> int:
    """Most tuples of ``rel`` through one element inside a set of size ``b``."""
    if rel.arity > b:
        return 0
    if rel.symmetric:
        return math.comb(b - 1, rel.arity - 1)
    return math.perm(b, rel.arity) - math.perm(b - 1, rel.arity)


def _max_tuples(rel, b: int) -> int:
    if rel.arity > b:
        return 0
    return math.comb(b, rel.arity) if rel.symmetric else math.perm(b, rel.arity)


def algebraic_possible(ctx: BaseContext, k: int) -> bool:
    """Whether any algebraic pair with top of size at most ``k`` can exist."""
    return any(sum(ctx.alpha[r.name] * _max_incidence(r, b) for r in ctx.vocab) > 1.0
               for b in range(2, k + 1))


def algebraic_over_empty_possible(ctx: BaseContext, k: int) -> bool:
    return any(sum(ctx.alpha[r.name] * _max_tuples(r, b) for r in ctx.vocab) > b
               for b in range(1, k + 1))


SMALL_CLOSURE = 14


def _min_links(ctx: BaseContext, k: int) -> int:
    """Fewest Gaifman neighbours inside ``B`` an element of an algebraic ``B`` can have."""
    for d in range(1, k):
        if sum(ctx.alpha[r.name] * _max_incidence(r, d + 1) for r in ctx.vocab) > 1.0 - TOL:
            return d
    return k


def _closure_small(A: frozenset, M: RelStructure, k: int, ctx: BaseContext, within=None):
    calc = SubsetCalculus(M, ctx)
    universe = sorted(within) if within is not None else list(range(M.n))
    Amask = calc.mask(A)
    cert = []
    result = set(A)
    for size in range(1, k + 1):
        for B in itertools.combinations(universe, size):
            Bm = calc.mask(B)
            X = Bm & Amask
            if X == Bm:
                continue
            if calc.is_algebraic(X, Bm):
                cert.append(frozenset(B))
                result.update(B)
    return result, cert


def _closure_large(A: frozenset, M: RelStructure, k: int, ctx: BaseContext, within=None):
    nb = M.neighbors()
    allowed = (lambda y: True) if within is None else (lambda y, W=frozenset(within): y in W)
    result = set(A)
    cert = []
    tested = set()
    need = _min_links(ctx, k)

    def test(B):
        B = frozenset(B)
        if B in tested:
            return
        tested.add(B)
        new = B - A
        # every new element needs enough tuples inside B to make its removal negative
        if any(len(nb[x] & B) < need for x in new):
            return
        # the whole step must have negative weight
        inc = M.incidence()
        crossing = {(name, t) for x in new for name, t in inc[x] if all(y in B for y in t)}
        if len(new) - sum(ctx.alpha[name] for name, _ in crossing) > TOL:
            return
        sub = sorted(B)
        S = induced(M, sub)
        calc = SubsetCalculus(S, ctx)
        pos = {x: i for i, x in enumerate(sub)}
        X = calc.mask(pos[x] for x in B & A)
        Y = calc.full
        if X != Y and calc.is_algebraic(X, Y):
            cert.append(B)
            result.update(B)

    # sets D outside A, connected to A through D
    frontier = [frozenset([y]) for y in sorted({y for a in A for y in nb[a]} - A) if allowed(y)]
    seen = set(frontier)
    level = frontier
    for size in range(1, k):
        for D in level:
            touch = sorted({a for d in D for a in nb[d] if a in A})
            room = k - len(D)
            if len(touch) <= room:
                test(D | frozenset(touch))
            else:
                for sub in itertools.combinations(touch, room):
                    test(D | frozenset(sub))
        if size == k - 1:
            break
        nxt = []
        for D in level:
            grow = set()
            for d in D:
                grow.update(nb[d])
            for a in A:
                grow.update(nb[a])
            for y in sorted(grow - D - A):
                if not allowed(y):
                    continue
                E = D | {y}
                if E not in seen:
                    seen.add(E)
                    nxt.append(E)
        level = nxt
    if algebraic_over_empty_possible(ctx, k):
        log.warning("context admits algebraic sets over the empty set; scanning all connected sets")
        verts = [v for v in range(M.n) if allowed(v) and v not in A]
        seen2 = set()
        level = [frozenset([v]) for v in verts]
        for size in range(1, k + 1):
            for D in level:
                test(D)
            if size == k:
                break
            nxt = []
            for D in level:
                for d in D:
                    for y in nb[d]:
                        if y in D or y in A or not allowed(y):
                            continue
                        E = D | {y}
                        if E not in seen2:
                            seen2.add(E)
                            nxt.append(E)
            level = nxt
    return result, cert


def closure(A: Iterable[int], M: RelStructure, k: int, ctx: BaseContext, within: Iterable[int] | None = None) -> ClosureResult:
    """Union of all ``B`` with ``|B| <= k`` that are algebraic over ``B ∩ A``.

    ``within`` restricts the search to the substructure on that element set.
    """
    A = frozenset(A)
    if k < 1:
        raise InvalidArgument("k must be at least 1")
    if any(not 0 <= x < M.n for x in A):
        raise InvalidArgument("A leaves the universe")
    if within is not None:
        within = frozenset(within)
        if not A <= within:
            raise InvalidArgument("A must lie inside the restricting set")
    if not algebraic_possible(ctx, k):
        return ClosureResult(A, k, A, [])
    if M.n <= SMALL_CLOSURE:
        res, cert = _closure_small(A, M, k, ctx, within)
    else:
        res, cert = _closure_large(A, M, k, ctx, within)
    cert.sort(key=sorted)
    return ClosureResult(A, k, frozenset(res), cert)


def closure_iter(A: Iterable[int], M: RelStructure, k: int, m, ctx: BaseContext) -> frozenset:
    """``m``-fold iterate of the closure; ``m=None`` or ``math.inf`` runs to the fixpoint."""
    cur = frozenset(A)
    steps = 0
    while m is None or steps < m:
        nxt = closure(cur, M, k, ctx).result
        steps += 1
        if nxt == cur:
            break
        cur = nxt
    return cur


@dataclass
class ClosureBound:
    value: int | None
    overflow: bool = False
    detail: dict = field(default_factory=dict)


def _petal_bound(calc: SubsetCalculus, X: int, Y: int) -> int:
    """Most extension ranges of the algebraic type (X, Y) a sparse host can carry.

    ``p`` pairwise disjoint copies over a common kernel would form a configuration
    of negative total weight, which the sampling law almost surely excludes; the
    sunflower lemma then caps the number of distinct ranges.
    """
    s = _popcount(Y & ~X)
    base = calc.phi(X)
    need = 1
    by_size = {}
    for sm in _submasks(Y & ~X):
        K = X | sm
        if K == Y:
            continue
        y = _popcount(sm)
        d = -(calc.phi(Y) - calc.phi(K))
        by_size[y] = min(by_size.get(y, math.inf), d)
    for y, d in by_size.items():
        need = max(need, math.floor((max(base, 0.0) + y) / d + 1e-12) + 1)
    return math.factorial(s) * (need - 1) ** s


def closure_bound(k: int, ell: int, ctx: BaseContext, search_cap: int = 10**6) -> ClosureBound:
    """Upper bound on ``|cl^k(A, M)|`` for ``|A| <= ell`` on almost every sampled ``M``."""
    from .canon import canonical_form, enumerate_structures

    if k < 1 or ell < 0:
        raise InvalidArgument("need k >= 1 and ell >= 0")
    if not algebraic_possible(ctx, k) and not algebraic_over_empty_possible(ctx, k):
        return ClosureBound(ell, False, {"types": 0})
    try:
        levels = enumerate_structures(ctx.vocab, k, cap=search_cap)
    except InvalidArgument:
        return ClosureBound(None, True, {"reason": "type enumeration exceeded the cap"})
    # per j: labelled small side -> {type key: element contribution}
    per_j: dict[int, dict[tuple, dict[tuple, int]]] = {}
    for b in range(1, k + 1):
        for B in levels[b]:
            calc = SubsetCalculus(B, ctx)
            for X in range(calc.full):
                j = _popcount(X)
                if j > ell or not calc.is_algebraic(X, calc.full):
                    continue
                contrib = _popcount(calc.full & ~X) * _petal_bound(calc, X, calc.full)
                xs = calc.members(X)
                for perm in itertools.permutations(xs):
                    small = induced(B, xs)
                    relabel = {x: i for i, x in enumerate(perm)}
                    skey = tuple(sorted((name, tuple(relabel[xs[i]] for i in t)) for name, t in small.all_tuples()))
                    tkey = canonical_form(B, perm)
                    per_j.setdefault(j, {}).setdefault(skey, {})[tkey] = contrib
    total = ell
    detail = {}
    for j, groups in per_j.items():
        best = max(sum(g.values()) for g in groups.values())
        detail[j] = best
        total += math.comb(ell, j) * best
        if total > search_cap:
            return ClosureBound(None, True, {"reason": "bound exceeds search cap", "partial": total})
    return ClosureBound(total, False, detail)
