"""Random structures and the Monte Carlo experiments run on them.

Every trial owns a Philox stream keyed by ``(seed, trial)``, so a trial's
result does not depend on which worker ran it or in what order. Records are
plain dicts ready for JSON lines.
"""
from __future__ import annotations

import hashlib
import itertools
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import fast
from .canon import canonical_form
from .errors import InvalidArgument
from .expansion import ExpandedCalculus, ExpansionContext
from .formulas import CatalogFormula
from .structures import RelStructure, SubPair, Vocabulary, induced
from .weights import EQUAL, PRIMITIVE, STRONG, BaseContext, SubsetCalculus, closure, closure_bound

log = logging.getLogger(__name__)

SCHEMA = 1


@dataclass
class SampleConfig:
    n: int
    seed: int
    trials: int
    ctx: BaseContext
    xctx: ExpansionContext | None = None
    eps: float = 0.15
    cap: int = 200
    workers: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgument("universe size must be at least 2")
        if self.trials < 1:
            raise InvalidArgument("need at least one trial")
        if not 0.0 < self.eps <= self.ctx.eps_cap:
            raise InvalidArgument(f"eps must lie in (0, {self.ctx.eps_cap}]")
        if self.cap < 1:
            raise InvalidArgument("embedding cap must be positive")
        if self.xctx is not None and self.xctx.base != self.ctx:
            raise InvalidArgument("expansion context is built over a different base context")
        if not 0 <= self.seed < 2**64:
            raise InvalidArgument("seed must be a 64-bit unsigned integer")

    @property
    def vocab(self) -> Vocabulary:
        return self.xctx.vocab if self.xctx is not None else self.ctx.vocab


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("SPARSE01_THREADS", "1")))
    except ValueError:
        return 1


def run_trials(cfg: SampleConfig, body: Callable[[int, np.random.Generator], dict]) -> list[dict]:
    """Apply ``body`` to every trial; results come back in trial order."""
    def one(t):
        return body(t, trial_rng(cfg.seed, t))

    if cfg.workers <= 1:
        return [one(t) for t in range(cfg.trials)]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(one, range(cfg.trials)))


# ------------------------------------------------------------------ drawing

def _clamp(p: float, what: str) -> float:
    if p > 1.0 or p < 0.0:
        log.warning("probability %.4g for %s clamped to [0,1]", p, what)
        return min(1.0, max(0.0, p))
    return p


def _slot_count(n: int, arity: int, symmetric: bool) -> int:
    return math.comb(n, arity) if symmetric else math.perm(n, arity)


def decode_pairs(idx: np.ndarray, n: int) -> np.ndarray:
    """Unordered pair ``(a, b)``, ``a < b``, at each row-major index."""
    idx = np.asarray(idx, dtype=np.int64)
    tot = n * (n - 1) // 2
    a = n - 2 - np.floor(np.sqrt(-8.0 * idx + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5).astype(np.int64)
    b = idx + a + 1 - tot + (n - a) * (n - a - 1) // 2
    return np.stack([a, b], axis=1)


def _sample_tuples(n: int, arity: int, symmetric: bool, p: float, rng: np.random.Generator,
                   exclude: set | None = None) -> np.ndarray:
    """Independent inclusion of every irreflexive tuple with probability ``p``.

    The number of tuples is drawn first, then that many distinct slots
    uniformly; slots listed in ``exclude`` are skipped and not counted.
    """
    total = _slot_count(n, arity, symmetric) - (len(exclude) if exclude else 0)
    if total <= 0 or p <= 0.0:
        return np.zeros((0, arity), dtype=np.int64)
    count = int(rng.binomial(total, p))
    if count == 0:
        return np.zeros((0, arity), dtype=np.int64)
    if arity == 1 and not exclude:
        return np.sort(rng.choice(n, size=count, replace=False)).reshape(-1, 1)
    if arity == 2 and not exclude:
        if symmetric:
            idx = np.sort(rng.choice(n * (n - 1) // 2, size=count, replace=False))
            return decode_pairs(idx, n)
        idx = np.sort(rng.choice(n * (n - 1), size=count, replace=False))
        a = idx // (n - 1)
        r = idx % (n - 1)
        return np.stack([a, r + (r >= a)], axis=1)
    # generic path: draw random tuples and keep new distinct ones
    found: dict[tuple, None] = {}
    excl = exclude or set()
    while len(found) < count:
        cand = rng.integers(0, n, size=(2 * (count - len(found)) + 8, arity))
        for row in cand:
            t = tuple(int(v) for v in row)
            if len(set(t)) < arity:
                continue
            if symmetric:
                t = tuple(sorted(t))
            if t in excl or t in found:
                continue
            found[t] = None
            if len(found) == count:
                break
    return np.array(sorted(found), dtype=np.int64).reshape(-1, arity)


def draw_base_arrays(n: int, ctx: BaseContext, rng: np.random.Generator) -> dict[str, np.ndarray]:
    out = {}
    for rel in ctx.vocab:
        p = _clamp(ctx.coeff[rel.name] * n ** (-ctx.alpha[rel.name]), rel.name)
        out[rel.name] = _sample_tuples(n, rel.arity, rel.symmetric, p, rng)
    return out


def structure_from_arrays(vocab: Vocabulary, n: int, arrays: Mapping[str, np.ndarray]) -> RelStructure:
    return RelStructure(vocab, n, {name: [tuple(int(v) for v in row) for row in a] for name, a in arrays.items()})


def draw_base(cfg: SampleConfig, rng: np.random.Generator) -> RelStructure:
    """A random structure over the base vocabulary."""
    return structure_from_arrays(cfg.ctx.vocab, cfg.n, draw_base_arrays(cfg.n, cfg.ctx, rng))


def _atom_probability(xctx: ExpansionContext, beta: float, coeff: float, n: int, what: str) -> float:
    return _clamp(coeff * n ** beta / xctx.h(n), what)


def _special_slots(base: Mapping[str, np.ndarray], xctx: ExpansionContext, arity: int, symmetric: bool):
    """Slots of the given shape whose element set carries base tuples."""
    out = set()
    for rel in xctx.base.vocab:
        if rel.arity > arity:
            continue
        if rel.arity < arity:
            if len(base[rel.name]):
                raise InvalidArgument("signature overrides need base relations of the atom's arity")
            continue
        for row in base[rel.name]:
            t = tuple(int(v) for v in row)
            if symmetric:
                out.add(tuple(sorted(t)))
            else:
                out.update(itertools.permutations(t))
    return out


def draw_expansion_arrays(n: int, base: Mapping[str, np.ndarray], xctx: ExpansionContext,
                          rng: np.random.Generator) -> dict[str, np.ndarray]:
    """New-relation atoms drawn stage by stage over arity, independently per slot."""
    out = dict(base)
    base_struct = None
    for arity in sorted({nr.rel.arity for nr in xctx.new}):
        for nr in xctx.new:
            rel = nr.rel
            if rel.arity != arity:
                continue
            has_override = any(name == rel.name for name, _ in xctx.overrides)
            if not has_override:
                p = _atom_probability(xctx, nr.beta, nr.coeff, n, rel.name)
                out[rel.name] = _sample_tuples(n, arity, rel.symmetric, p, rng)
                continue
            special = sorted(_special_slots(base, xctx, arity, rel.symmetric))
            if base_struct is None:
                base_struct = structure_from_arrays(xctx.base.vocab, n, base)
            picked = []
            for t in special:
                b, c = xctx.atom_params(rel.name, base_struct, t)
                if rng.random() < _atom_probability(xctx, b, c, n, rel.name):
                    picked.append(t)
            zero = tuple(0 for _ in xctx.base.vocab)
            b, c = xctx.overrides.get((rel.name, zero), (nr.beta, nr.coeff))
            p = _atom_probability(xctx, b, c, n, rel.name)
            rest = _sample_tuples(n, arity, rel.symmetric, p, rng, exclude=set(special))
            allt = sorted(set(picked) | {tuple(int(v) for v in row) for row in rest})
            out[rel.name] = np.array(allt, dtype=np.int64).reshape(-1, arity)
    return out


def draw_expansion(M: RelStructure, xctx: ExpansionContext, rng: np.random.Generator) -> RelStructure:
    """Expand ``M`` by the new relations of ``xctx``; base relations are untouched."""
    if M.vocab != xctx.base.vocab:
        raise InvalidArgument("structure is not over the base vocabulary")
    base = {r.name: np.array(sorted(M.tuples(r.name)), dtype=np.int64).reshape(-1, r.arity) for r in M.vocab}
    arrays = draw_expansion_arrays(M.n, base, xctx, rng)
    return structure_from_arrays(xctx.vocab, M.n, arrays)


def draw_arrays(cfg: SampleConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    arrays = draw_base_arrays(cfg.n, cfg.ctx, rng)
    if cfg.xctx is not None and cfg.xctx.new:
        arrays = draw_expansion_arrays(cfg.n, arrays, cfg.xctx, rng)
    return arrays


# ------------------------------------------------------------- experiments

@dataclass
class Report:
    """Aggregate of one experiment plus its per-trial records."""

    experiment: str
    summary: dict
    records: list = field(default_factory=list)
    checks: list = field(default_factory=list)  # (name, verdict, detail)


def _record(experiment: str, trial: int, **data) -> dict:
    return {"schema": SCHEMA, "experiment": experiment, "trial": trial, **data}


def _pair_exponent(pair: SubPair, cfg: SampleConfig) -> tuple[float, float, int, str]:
    """Predicted count exponent, coefficient, number of new atoms and kind."""
    if cfg.xctx is not None and pair.big.vocab == cfg.xctx.vocab:
        calc = ExpandedCalculus(pair.big, cfg.xctx)
        X, Y = calc.mask(pair.small), calc.full
        kind = "equal" if X == Y else calc.kind(X, Y)
        n_atoms = sum(1 for m, _, _ in calc.atoms if m & Y == m and m & X != m)
        coeff = calc.coeff(X, Y)
    else:
        if pair.big.vocab != cfg.ctx.vocab:
            raise InvalidArgument("pair vocabulary matches neither context")
        calc = SubsetCalculus(pair.big, cfg.ctx)
        X, Y = calc.mask(pair.small), calc.full
        kind = calc.classify(X, Y)
        n_atoms = 0
        coeff = 1.0
    for name, t in pair.big.all_tuples():
        if name in cfg.ctx.vocab and not all(x in pair.small for x in t):
            coeff *= cfg.ctx.coeff[name]
    w = calc.w(X, Y) + (calc.psi(Y) - calc.psi(X) if isinstance(calc, ExpandedCalculus) else 0.0)
    return w, coeff, n_atoms, kind


def count_experiment(pair: SubPair, cfg: SampleConfig, name: str = "counts") -> Report:
    """Extension counts of sampled embeddings of the small side, per trial."""
    A = pair.small_structure
    fixed = sorted(pair.small)

    def body(t, rng):
        arrays = draw_arrays(cfg, rng)
        host = fast.GraphView(cfg.vocab, cfg.n, arrays)
        emb = fast.sample_embeddings(host, A, cfg.cap, rng)
        pat = fast.compile_pattern(pair.big, fixed, host)
        counts = fast.count_extensions(host, pat, emb) if len(emb) else np.zeros(0, dtype=np.int64)
        return _record(name, t, embeddings=int(len(emb)), counts=[int(c) for c in counts])

    records = run_trials(cfg, body)
    allc = [c for r in records for c in r["counts"]]
    summary = {"embeddings": len(allc), "max_count": max(allc) if allc else None,
               "mean_count": float(np.mean(allc)) if allc else None}
    return Report(name, summary, records)


def bracket_experiment(pair: SubPair, cfg: SampleConfig, pair_id: str = "pair") -> Report:
    """Fraction of sampled embeddings whose extension count lies in the predicted bracket."""
    w, coeff, n_atoms, kind = _pair_exponent(pair, cfg)
    if kind not in (EQUAL, "equal", STRONG, PRIMITIVE, "qr"):
        raise InvalidArgument(f"bracket needs a strong or minimal expanded pair, got {kind}")
    if kind not in (EQUAL, "equal") and w <= 0:
        raise InvalidArgument("predicted exponent must be positive")
    h = cfg.xctx.h(cfg.n) if cfg.xctx is not None else 1.0
    center = coeff * cfg.n ** w / h ** n_atoms
    lo, hi = center * cfg.n ** (-cfg.eps), center * cfg.n ** cfg.eps
    if kind in (EQUAL, "equal"):
        lo, hi = min(lo, 1.0), max(hi, 1.0)
    rep = count_experiment(pair, cfg, "bracket")
    inside = total = 0
    for r in rep.records:
        c = np.asarray(r["counts"], dtype=np.float64)
        r["inside"] = int(np.sum((c >= lo) & (c <= hi)))
        inside += r["inside"]
        total += len(c)
    frac = inside / total if total else None
    rep.summary.update({"pair": pair_id, "kind": kind, "exponent": w, "coefficient": coeff,
                        "lo": lo, "hi": hi, "inside": inside, "pass_fraction": frac,
                        "inconclusive": total == 0})
    return rep


def _has_disjoint(newsets: Sequence[frozenset], m: int) -> bool:
    if m <= 0:
        return True
    order = sorted(range(len(newsets)), key=lambda i: len(newsets[i]))

    def rec(start, used, need):
        if need == 0:
            return True
        for j in range(start, len(order)):
            if len(order) - j < need:
                return False
            s = newsets[order[j]]
            if s & used:
                continue
            if rec(j + 1, used | s, need - 1):
                return True
        return False

    return rec(0, frozenset(), m)


def weakly_nice_experiment(pair: SubPair, m: int, cfg: SampleConfig, limit: int = 20000) -> Report:
    """Fraction of sampled embeddings with ``m`` pairwise disjoint extensions."""
    if m < 0:
        raise InvalidArgument("m must be non-negative")
    _, _, _, kind = _pair_exponent(pair, cfg)
    if kind not in (PRIMITIVE, "qr"):
        raise InvalidArgument(f"weakly nice experiment needs a primitive pair, got {kind}")
    A = pair.small_structure
    fixed = sorted(pair.small)
    new = pair.new_elements

    def body(t, rng):
        arrays = draw_arrays(cfg, rng)
        host = fast.GraphView(cfg.vocab, cfg.n, arrays)
        emb = fast.sample_embeddings(host, A, cfg.cap, rng)
        pat = fast.compile_pattern(pair.big, fixed, host)
        ok = 0
        for row in emb:
            if m == 0:
                ok += 1
                continue
            ext = fast.list_extensions(host, pat, row, limit)
            sets = [frozenset(int(v) for v in e[new]) for e in ext]
            ok += _has_disjoint(sets, m)
        return _record("weakly_nice", t, embeddings=int(len(emb)), passed=int(ok))

    records = run_trials(cfg, body)
    total = sum(r["embeddings"] for r in records)
    passed = sum(r["passed"] for r in records)
    frac = passed / total if total else (1.0 if m == 0 else None)
    return Report("weakly_nice", {"m": m, "embeddings": total, "passed": passed, "pass_fraction": frac,
                                  "inconclusive": total == 0}, records)


def _random_subsets(M: RelStructure, ell: int, count: int, rng: np.random.Generator) -> list[tuple]:
    """Half uniform ``ell``-sets, half drawn near a random vertex (within distance two)."""
    out = []
    nb = M.neighbors()
    for i in range(count):
        if ell == 0:
            out.append(())
            continue
        if i % 2 == 0 or ell == 1:
            out.append(tuple(sorted(int(x) for x in rng.choice(M.n, size=ell, replace=False))))
            continue
        v = int(rng.integers(M.n))
        ball = set(nb[v])
        for u in list(ball):
            ball |= nb[u]
        ball.discard(v)
        ball = sorted(ball)
        if len(ball) < ell - 1:
            out.append(tuple(sorted(int(x) for x in rng.choice(M.n, size=ell, replace=False))))
            continue
        rest = rng.choice(len(ball), size=ell - 1, replace=False)
        out.append(tuple(sorted([v] + [ball[j] for j in rest])))
    return out


def closure_experiment(ell: int, k: int, cfg: SampleConfig, subsets: int = 20) -> Report:
    """Largest observed closure of ``ell``-sets against the enumerated bound."""
    bound = closure_bound(k, ell, cfg.ctx)
    if bound.overflow:
        return Report("closure", {"skipped": True, "reason": bound.detail.get("reason")})

    def body(t, rng):
        M = structure_from_arrays(cfg.ctx.vocab, cfg.n, draw_base_arrays(cfg.n, cfg.ctx, rng))
        sizes = []
        for A in _random_subsets(M, ell, subsets, rng):
            sizes.append(len(closure(A, M, k, cfg.ctx).result))
        return _record("closure", t, sizes=sizes, violations=sum(s > bound.value for s in sizes))

    records = run_trials(cfg, body)
    biggest = max((s for r in records for s in r["sizes"]), default=0)
    viol = sum(r["violations"] for r in records)
    return Report("closure", {"ell": ell, "k": k, "bound": bound.value, "max_size": biggest,
                              "violations": viol, "skipped": False}, records)


@dataclass(frozen=True)
class Quad:
    """A structure ``D`` with marked subsets ``A`` and ``B`` and a closure radius ``r``."""

    D: RelStructure
    A: frozenset
    B: frozenset
    r: int = 1


def semi_good_experiment(quad: Quad, k: int, cfg: SampleConfig, limit: int = 200) -> Report:
    """Fraction of closed embeddings of ``A`` that extend to ``D`` with the closure of ``B`` preserved.

    An embedding ``f`` of ``A`` qualifies when ``cl^r(f(A)) = f(A)`` in the
    sample. It passes when some extension ``g`` to ``D`` satisfies
    ``cl^k(g(B)) = g(cl^k(B, D))``.
    """
    D = quad.D
    fixed = sorted(quad.A)
    A = induced(D, fixed)
    clB = sorted(closure(quad.B, D, k, cfg.ctx).result)

    def body(t, rng):
        arrays = draw_base_arrays(cfg.n, cfg.ctx, rng)
        host = fast.GraphView(cfg.ctx.vocab, cfg.n, arrays)
        M = structure_from_arrays(cfg.ctx.vocab, cfg.n, arrays)
        emb = fast.sample_embeddings(host, A, cfg.cap, rng)
        pat = fast.compile_pattern(D, fixed, host)
        qualifying = passed = 0
        for row in emb:
            fa = [int(v) for v in row]
            if closure(fa, M, quad.r, cfg.ctx).result != frozenset(fa):
                continue
            qualifying += 1
            for g in fast.list_extensions(host, pat, row, limit):
                gB = [int(g[x]) for x in sorted(quad.B)]
                if closure(gB, M, k, cfg.ctx).result == frozenset(int(g[x]) for x in clB):
                    passed += 1
                    break
        return _record("semi_good", t, embeddings=int(len(emb)), qualifying=qualifying, passed=passed)

    records = run_trials(cfg, body)
    q = sum(r["qualifying"] for r in records)
    p = sum(r["passed"] for r in records)
    skipped = sum(1 for r in records if r["qualifying"] == 0)
    return Report("semi_good", {"qualifying": q, "passed": p, "pass_fraction": p / q if q else None,
                                "skipped_trials": skipped}, records)


def qe_determinism_experiment(catalog: Sequence[CatalogFormula], k: int, cfg: SampleConfig,
                              tuples: int = 40) -> Report:
    """Group parameter tuples by the type of their closure; count groups with both truth values."""
    for phi in catalog:
        if len(phi.params) > 2:
            raise InvalidArgument("catalog formulas take at most two parameters")

    def body(t, rng):
        M = structure_from_arrays(cfg.ctx.vocab, cfg.n, draw_base_arrays(cfg.n, cfg.ctx, rng))
        rows = []
        for phi in catalog:
            s = len(phi.params)
            for tup in _random_subsets(M, s, tuples, rng):
                tup = list(tup)
                if s == 2 and rng.random() < 0.5:
                    tup.reverse()
                cl = sorted(closure(tup, M, k, cfg.ctx).result)
                pos = {x: i for i, x in enumerate(cl)}
                key = canonical_form(induced(M, cl), [pos[x] for x in tup])
                digest = hashlib.sha1(repr(key).encode()).hexdigest()[:16]
                rows.append([phi.name, digest, bool(phi.holds(M, tup))])
        return _record("qe_determinism", t, rows=rows)

    records = run_trials(cfg, body)
    groups: dict[tuple, list[int]] = {}
    for r in records:
        for name, key, truth in r["rows"]:
            g = groups.setdefault((name, key), [0, 0])
            g[int(truth)] += 1
    per = {}
    for (name, _), (f, tr) in groups.items():
        d = per.setdefault(name, {"tuples": 0, "collisions": 0, "groups": 0})
        d["tuples"] += f + tr
        d["collisions"] += min(f, tr)
        d["groups"] += 1
    total = sum(d["tuples"] for d in per.values())
    coll = sum(d["collisions"] for d in per.values())
    return Report("qe_determinism", {"k": k, "tuples": total, "collisions": coll,
                                     "collision_fraction": coll / total if total else 0.0,
                                     "per_formula": per}, records)
