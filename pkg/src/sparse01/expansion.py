"""Random expansions: beta weights and the derived classification of expanded pairs.

An expansion adds new relations whose atoms are drawn independently with
probability ``c · n^beta`` (optionally divided by ``log n``). The beta weight of
``A ⊆ B`` adds the exponents of every new atom of ``B`` not inside ``A`` to the
base weight of the reduct pair.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateContextError, InvalidArgument, IrrationalityViolation
from .structures import Relation, RelStructure, SubPair, Vocabulary, induced
from .weights import TOL, BaseContext, SubsetCalculus, _submasks, alpha_strong

H_MODES = ("one", "log")


@dataclass(frozen=True)
class NewRelation:
    rel: Relation
    beta: float
    coeff: float


class ExpansionContext:
    """A base context plus new relations with per-atom exponents and coefficients.

    ``overrides`` maps ``(relation name, signature)`` to ``(beta, coeff)``, where
    the signature counts, per base relation, the base tuples lying inside the
    atom's element set. Atoms without an override use the relation default.
    """

    def __init__(self, base: BaseContext, new: Sequence[NewRelation] = (),
                 overrides: Mapping[tuple, tuple[float, float]] | None = None, h_mode: str = "one"):
        self.base = base
        self.new = tuple(new)
        for nr in self.new:
            if nr.rel.name in base.vocab:
                raise InvalidArgument(f"new relation {nr.rel.name} clashes with the base vocabulary")
            self._check(nr.rel.name, nr.beta, nr.coeff)
        self.overrides = dict(overrides or {})
        for (name, sig), (b, c) in self.overrides.items():
            if name not in self.new_names:
                raise InvalidArgument(f"override for unknown relation {name}")
            if len(sig) != len(base.vocab):
                raise InvalidArgument(f"override signature {sig} has the wrong length")
            self._check(name, b, c)
        if h_mode not in H_MODES:
            raise InvalidArgument(f"h_mode must be one of {H_MODES}")
        self.h_mode = h_mode
        self.vocab = base.vocab.union(Vocabulary(tuple(nr.rel for nr in self.new)))

    @staticmethod
    def _check(name, beta, coeff):
        if beta > 0:
            raise InvalidArgument(f"exponent for {name} must be <= 0, got {beta}")
        if not 0.0 < coeff < 1.0:
            raise InvalidArgument(f"coefficient for {name} must lie in (0,1), got {coeff}")

    @property
    def new_names(self):
        return tuple(nr.rel.name for nr in self.new)

    def relation(self, name) -> NewRelation:
        for nr in self.new:
            if nr.rel.name == name:
                return nr
        raise KeyError(name)

    def signature(self, S: RelStructure, elements: Iterable[int]) -> tuple[int, ...]:
        els = set(elements)
        counts = []
        for rel in self.base.vocab:
            counts.append(sum(1 for t in S.tuples(rel.name) if set(t) <= els) if S.n <= 64 else
                          sum(1 for nm, t in S.tuples_within(els) if nm == rel.name))
        return tuple(counts)

    def atom_params(self, name, S: RelStructure, tup) -> tuple[float, float]:
        if self.overrides:
            o = self.overrides.get((name, self.signature(S, tup)))
            if o is not None:
                return o
        nr = self.relation(name)
        return nr.beta, nr.coeff

    def h(self, n: int) -> float:
        return math.log(n) if self.h_mode == "log" else 1.0

    def extend(self, new: Sequence[NewRelation], overrides=None) -> "ExpansionContext":
        """A single context carrying this one's new relations and ``new`` as well."""
        ov = dict(self.overrides)
        ov.update(overrides or {})
        return ExpansionContext(self.base, self.new + tuple(new), ov, self.h_mode)

    def __repr__(self):
        parts = ", ".join(f"{nr.rel}:beta={nr.beta},c={nr.coeff}" for nr in self.new)
        return f"ExpansionContext({self.base!r}; {parts})"


# --------------------------------------------------------------- calculus

class ExpandedCalculus(SubsetCalculus):
    """Subset calculus of the reduct plus the beta mass of new atoms."""

    def __init__(self, S: RelStructure, ctx: ExpansionContext):
        red = S.reduct(ctx.base.vocab)
        super().__init__(red, ctx.base)
        self.full_structure = S
        self.xctx = ctx
        atoms = []
        for name in ctx.new_names:
            for t in S.tuples(name):
                b, c = ctx.atom_params(name, red, t)
                atoms.append((self.mask(t), b, c))
        self.atoms = atoms
        self._psi = {}
        self._kind = {}
        self._b = {}
        self._j = {}
        self._t = {}

    def psi(self, X: int) -> float:
        v = self._psi.get(X)
        if v is None:
            v = sum(b for m, b, _ in self.atoms if m & X == m)
            self._psi[X] = v
        return v

    def beta(self, X: int, Y: int) -> float:
        return self.w(X, Y) + self.psi(Y) - self.psi(X)

    def coeff(self, X: int, Y: int) -> float:
        out = 1.0
        for m, _, c in self.atoms:
            if m & Y == m and m & X != m:
                out *= c
        return out

    def _le_i(self, X, Y):
        return X == Y or self.is_algebraic(X, Y)

    def _le_s(self, X, Y):
        return X == Y or self.is_strong(X, Y)

    def is_b(self, X: int, Y: int) -> bool:
        key = (X, Y)
        r = self._b.get(key)
        if r is not None:
            return r
        r = False
        for s in _submasks(Y & ~X):
            A1 = X | s
            if not (self._le_i(X, A1) and self._le_s(A1, Y)):
                continue
            if A1 != X:
                r = True
                break
            for s2 in _submasks(Y & ~A1):
                if s2 and self.beta(A1, A1 | s2) < 0:
                    r = True
                    break
            if r:
                break
        self._b[key] = r
        return r

    def is_j(self, X: int, Y: int) -> bool:
        key = (X, Y)
        r = self._j.get(key)
        if r is None:
            r = all(self.is_b(X | s, Y) for s in _submasks(Y & ~X) if X | s != Y)
            self._j[key] = r
        return r

    def is_t(self, X: int, Y: int) -> bool:
        key = (X, Y)
        r = self._t.get(key)
        if r is None:
            r = not any(self.is_j(X, X | s) for s in _submasks(Y & ~X) if s)
            self._t[key] = r
        return r

    def is_qr(self, X: int, Y: int) -> bool:
        if X == Y or not self.is_t(X, Y):
            return False
        for s in _submasks(Y & ~X):
            A1 = X | s
            if A1 == X or A1 == Y:
                continue
            if self.is_t(X, A1) and self.is_t(A1, Y):
                return False
        return True

    def kind(self, X: int, Y: int) -> str:
        if X & ~Y:
            raise InvalidArgument("small side is not contained in big side")
        if X != Y and self.is_qr(X, Y):
            if self.is_strong(X, Y):
                v = self.beta(X, Y)
                if abs(v) <= TOL:
                    raise IrrationalityViolation(self.members(X), self.members(Y), v)
            return "qr"
        if X != Y and self.is_t(X, Y):
            return "t"
        if X != Y and self.is_j(X, Y):
            return "j"
        if self.is_b(X, Y):
            return "b"
        return "none"


def _reduct_strong_or_equal(calc: SubsetCalculus, X: int, Y: int) -> bool:
    return X == Y or calc.is_strong(X, Y)


def beta_pair(pair: SubPair, ctx: ExpansionContext) -> float:
    """``alpha(reduct pair) + sum of beta over new atoms of B not inside A``."""
    calc = ExpandedCalculus(pair.big, ctx)
    X, Y = calc.mask(pair.small), calc.full
    if not _reduct_strong_or_equal(calc, X, Y):
        raise InvalidArgument("reduct pair is not strong")
    red = SubPair(pair.big.reduct(ctx.base.vocab), pair.small)
    return alpha_strong(red, ctx.base) + calc.psi(Y) - calc.psi(X)


def beta_additivity_check(big: RelStructure, A: Iterable[int], B: Iterable[int], ctx: ExpansionContext) -> float:
    """Residual ``beta(A,B) + beta(B,C) - beta(A,C)`` for ``A ⊆ B ⊆ C = big``."""
    A, B = frozenset(A), frozenset(B)
    if not A <= B:
        raise InvalidArgument("A must lie inside B")
    Bs = induced(big, B)
    pos = {x: i for i, x in enumerate(sorted(B))}
    ab = beta_pair(SubPair(Bs, {pos[a] for a in A}), ctx)
    bc = beta_pair(SubPair(big, B), ctx)
    ac = beta_pair(SubPair(big, A), ctx)
    return ab + bc - ac


def classify_plus(pair: SubPair, ctx: ExpansionContext) -> str:
    calc = ExpandedCalculus(pair.big, ctx)
    return calc.kind(calc.mask(pair.small), calc.full)


def derived_exponent(pair: SubPair, ctx: ExpansionContext) -> tuple[float, float]:
    """Predicted count exponent and coefficient for a minimal expanded pair."""
    calc = ExpandedCalculus(pair.big, ctx)
    X, Y = calc.mask(pair.small), calc.full
    if calc.kind(X, Y) != "qr":
        raise InvalidArgument("derived exponents are defined for minimal pairs only")
    return beta_pair(pair, ctx), calc.coeff(X, Y)


# ------------------------------------------------------------ screening

@dataclass
class Violation:
    kind: str  # "base" or "beta"
    structure: RelStructure
    small: frozenset
    value: float

    def describe(self):
        return f"{self.kind} weight {self.value:+.3g} on {sorted(self.small)} inside {self.structure!r}"


def _marked_key(S: RelStructure, X: Iterable[int]):
    from .canon import canonical_form

    mark = Relation("__small__", 1)
    vocab = S.vocab.union(Vocabulary((mark,)))
    T = S.with_relations(vocab, {"__small__": [(x,) for x in X]})
    return canonical_form(T)


def irrationality_screen(ctx: ExpansionContext, size_bound: int, decorated_bound: int = 4) -> list[Violation]:
    """Zero-weight pairs up to ``size_bound`` elements, one per isomorphism type.

    Base sub-pairs are scanned up to ``size_bound``. Minimal expanded pairs are
    scanned up to ``min(size_bound, decorated_bound)``; without new relations
    their beta is a base weight, already covered by the base scan.
    """
    from .canon import enumerate_structures

    if size_bound > 7:
        raise InvalidArgument("size_bound must be at most 7")
    out: list[Violation] = []
    seen = set()
    levels = enumerate_structures(ctx.base.vocab, size_bound)
    for s in range(1, size_bound + 1):
        for S in levels[s]:
            calc = SubsetCalculus(S, ctx.base)
            for X in range(calc.full):
                v = calc.w(X, calc.full)
                if abs(v) <= TOL:
                    key = ("base", _marked_key(S, calc.members(X)))
                    if key not in seen:
                        seen.add(key)
                        out.append(Violation("base", S, frozenset(calc.members(X)), v))
    if ctx.new:
        top = min(size_bound, decorated_bound)
        dlevels = enumerate_structures(ctx.vocab, top)
        for s in range(1, top + 1):
            for S in dlevels[s]:
                calc = ExpandedCalculus(S, ctx)
                for X in range(calc.full):
                    try:
                        if not calc.is_strong(X, calc.full):
                            continue
                        v = calc.beta(X, calc.full)
                        if abs(v) > TOL:
                            continue
                        qr = calc.is_qr(X, calc.full)
                    except DegenerateContextError:  # reported by the base scan
                        continue
                    if qr:
                        key = ("beta", _marked_key(S, calc.members(X)))
                        if key not in seen:
                            seen.add(key)
                            out.append(Violation("beta", S, frozenset(calc.members(X)), v))
    return out


def is_minimal_violation(v: Violation, ctx: ExpansionContext) -> bool:
    """No proper induced substructure of the witness carries a zero-weight pair."""
    expanded = v.kind == "beta"
    calc = ExpandedCalculus(v.structure, ctx) if expanded else SubsetCalculus(v.structure, ctx.base)
    value = calc.beta if expanded else calc.w
    for Y in range(1, calc.full):
        X = (Y - 1) & Y
        while True:
            if abs(value(X, Y)) <= TOL:
                return False
            if X == 0:
                break
            X = (X - 1) & Y
    return True


# ------------------------------------------------------ batch evaluation

class DecorationFamily:
    """Beta weights of one base structure under many decorations at once.

    ``slots`` lists candidate new atoms ``(name, tuple)``; a decoration is an
    integer whose bit ``i`` says slot ``i`` is present. Values agree with
    :func:`beta_pair` on every decoration (checked in the tests).
    """

    def __init__(self, base: RelStructure, ctx: ExpansionContext, slots: Sequence[tuple[str, tuple]],
                 decorations: np.ndarray | None = None):
        self.base = base
        self.ctx = ctx
        self.calc = SubsetCalculus(base, ctx.base)
        self.slots = list(slots)
        if decorations is None:
            decorations = np.arange(1 << len(self.slots), dtype=np.int64)
        self.decorations = np.asarray(decorations, dtype=np.int64)
        shifts = np.arange(len(self.slots), dtype=np.int64)
        self.bits = ((self.decorations[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        self.slot_masks = [self.calc.mask(t) for _, t in self.slots]
        self.slot_beta = np.array([ctx.atom_params(name, base, t)[0] for name, t in self.slots])

    def beta(self, X: int, Y: int) -> np.ndarray:
        sel = np.array([(m & Y == m) and (m & X != m) for m in self.slot_masks], dtype=np.float64)
        return self.calc.w(X, Y) + self.bits @ (sel * self.slot_beta)

    def structure(self, index: int) -> RelStructure:
        d = int(self.decorations[index])
        extra = {name: [] for name in self.ctx.new_names}
        for i, (name, t) in enumerate(self.slots):
            if d >> i & 1:
                extra[name].append(t)
        return self.base.with_relations(self.ctx.vocab, extra)


def all_slots(n: int, ctx: ExpansionContext) -> list[tuple[str, tuple]]:
    """Every possible new atom on ``n`` elements."""
    slots = []
    for nr in ctx.new:
        r = nr.rel
        if r.symmetric:
            it = itertools.combinations(range(n), r.arity)
        else:
            it = itertools.permutations(range(n), r.arity)
        slots.extend((r.name, t) for t in it)
    return slots
