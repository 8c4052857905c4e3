"""Families of injections with randomly chosen image sets, and their component census.

A system fixes injections ``f: [m] -> [n]``, a family ``P`` of nonempty
subsets of ``[m]`` grouped into classes, and one probability per class. Every
image set ``f(u)`` of a class is chosen independently with the class
probability. A function succeeds when all its ``P``-images are chosen;
successful functions with overlapping ranges form the success graph whose
components are counted by isomorphism type.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .canon import canonical_form
from .errors import HypothesisViolation, InvalidArgument
from .sampler import SCHEMA, trial_rng
from .stats import FAIL, INCONCLUSIVE, PASS, Interval, wilson
from .structures import Relation, RelStructure, Vocabulary

SEPARATIVE = "separative"
SEMI = "semi_separative"
WEAK = "weakly_separative"
NONE = "none"
LEVELS = (SEPARATIVE, SEMI, WEAK, NONE)

OVERFLOW = "overflow"
DEFAULT_CAP = 12


class _DSU:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def classes(self):
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return sorted(sorted(c) for c in out.values())


class System:
    """Injections ``F`` from ``[m]`` to ``[n]`` with classes of ``P`` and their probabilities.

    ``classes`` is a sequence of ``(members, p)`` where ``members`` lists
    subsets of ``range(m)``; the classes partition ``P``.
    """

    def __init__(self, m: int, n: int, F: Sequence[Sequence[int]], classes: Sequence[tuple], name: str = ""):
        if m < 1 or n < 1:
            raise InvalidArgument("m and n must be positive")
        self.m, self.n, self.name = int(m), int(n), name
        self.F = [tuple(int(v) for v in f) for f in F]
        for f in self.F:
            if len(f) != self.m:
                raise InvalidArgument(f"function {f} does not have domain size {m}")
            if len(set(f)) != self.m:
                raise InvalidArgument(f"function {f} is not injective")
            if any(not 0 <= v < self.n for v in f):
                raise InvalidArgument(f"function {f} leaves the range [0,{n})")
        self.P: list[frozenset] = []
        self.cls: list[int] = []
        self.p: list[float] = []
        for ci, (members, p) in enumerate(classes):
            p = float(p)
            if not 0.0 < p < 1.0:
                raise InvalidArgument(f"class probability {p} outside (0,1)")
            self.p.append(p)
            for u in members:
                u = frozenset(int(x) for x in u)
                if not u or any(not 0 <= x < self.m for x in u):
                    raise InvalidArgument(f"P-member {sorted(u)} is not a nonempty subset of [0,{m})")
                if u in self.P:
                    raise InvalidArgument(f"P-member {sorted(u)} listed twice")
                self.P.append(u)
                self.cls.append(ci)
        if not self.P:
            raise InvalidArgument("P must be nonempty")
        self._index()

    def _index(self):
        atoms: dict[tuple, int] = {}
        self.f_atoms = []
        for f in self.F:
            row = []
            for u, c in zip(self.P, self.cls):
                key = (c, frozenset(f[x] for x in u))
                if key not in atoms:
                    atoms[key] = len(atoms)
                if atoms[key] not in row:
                    row.append(atoms[key])
            self.f_atoms.append(row)
        self.atoms = sorted(atoms, key=atoms.get)
        self.atom_p = np.array([self.p[c] for c, _ in self.atoms])
        width = max(len(r) for r in self.f_atoms)
        self.atom_matrix = np.array([r + [r[0]] * (width - len(r)) for r in self.f_atoms], dtype=np.int64)
        by_point: dict[int, list[int]] = {}
        for i, f in enumerate(self.F):
            for v in f:
                by_point.setdefault(v, []).append(i)
        adj = [set() for _ in self.F]
        for fs in by_point.values():
            for a in fs:
                adj[a].update(fs)
        for i in range(len(self.F)):
            adj[i].discard(i)
        self.adj = [sorted(s) for s in adj]
        self.adj_matrix = np.zeros((len(self.F), len(self.F)), dtype=np.int64)
        for i, s in enumerate(self.adj):
            self.adj_matrix[i, s] = 1

    @property
    def member_p(self) -> list[float]:
        return [self.p[c] for c in self.cls]

    def __repr__(self):
        return f"System({self.name or ''} m={self.m}, n={self.n}, |F|={len(self.F)}, |P|={len(self.P)})"


# ------------------------------------------------------------ separativity

def is_separative(F: Sequence[Sequence[int]]) -> bool:
    """No two functions send different coordinates to the same point."""
    coord: dict[int, int] = {}
    for f in F:
        for l, v in enumerate(f):
            if coord.setdefault(v, l) != l:
                return False
    return True


@dataclass
class SeparativityReport:
    level: str
    coordinate_classes: list  # the witnessing equivalence on [m]
    failed: list = field(default_factory=list)  # clauses that fail, e.g. ["(ii)"]


def _coordinate_classes(sys: System) -> _DSU:
    """Finest equivalence on ``[m]`` identifying coordinates that share an image point."""
    dsu = _DSU(range(sys.m))
    first: dict[int, int] = {}
    for f in sys.F:
        for l, v in enumerate(f):
            if v in first:
                dsu.union(first[v], l)
            else:
                first[v] = l
    return dsu


def _clause_iii(sys: System, dsu: _DSU) -> bool:
    """Some equivalence on ``[n]`` matches equivalence of preimage coordinates."""
    label: dict[int, int] = {}
    for f in sys.F:
        for l, v in enumerate(f):
            c = dsu.find(l)
            if label.setdefault(v, c) != c:
                return False
    return True


def _clause_iii_brute(sys: System, dsu: _DSU) -> bool:
    """Direct check: the point relation induced by the coordinate classes is an equivalence matching them."""
    pts = sorted({v for f in sys.F for v in f})
    rel = set()
    for f1 in sys.F:
        for f2 in sys.F:
            for a in range(sys.m):
                for b in range(sys.m):
                    if dsu.find(a) == dsu.find(b):
                        rel.add((f1[a], f2[b]))
    # transitive closure must not relate points whose preimages sit in different classes
    pdsu = _DSU(pts)
    for a, b in rel:
        pdsu.union(a, b)
    for f1 in sys.F:
        for f2 in sys.F:
            for a in range(sys.m):
                for b in range(sys.m):
                    same = dsu.find(a) == dsu.find(b)
                    if same != (pdsu.find(f1[a]) == pdsu.find(f2[b])):
                        return False
    return True


def separativity_level(sys: System, brute: bool = False) -> SeparativityReport:
    """Strongest separativity level of ``sys`` with its witnessing coordinate equivalence."""
    dsu = _coordinate_classes(sys)
    classes = dsu.classes()
    if is_separative(sys.F):
        return SeparativityReport(SEPARATIVE, classes)
    failed = []
    # (i) no P-member meets a class twice
    if any(len({dsu.find(x) for x in u}) != len(u) for u in sys.P):
        failed.append("(i)")
    # (ii) members meeting the same classes share a probability class
    seen: dict[frozenset, int] = {}
    for u, c in zip(sys.P, sys.cls):
        key = frozenset(dsu.find(x) for x in u)
        if seen.setdefault(key, c) != c:
            failed.append("(ii)")
            break
    ok3 = _clause_iii_brute(sys, dsu) if brute else _clause_iii(sys, dsu)
    if not ok3:
        failed.append("(iii)")
    if failed:
        return SeparativityReport(NONE, classes, failed)
    # (iv) equal image sets come from the same member with the same values
    owner: dict[frozenset, tuple] = {}
    for f in sys.F:
        for u, c in zip(sys.P, sys.cls):
            img = frozenset(f[x] for x in u)
            val = (c, tuple(sorted((x, f[x]) for x in u)))
            if owner.setdefault(img, val) != val:
                return SeparativityReport(WEAK, classes, ["(iv)"])
    return SeparativityReport(SEMI, classes)


def require_weak(sys: System) -> SeparativityReport:
    rep = separativity_level(sys)
    if rep.level == NONE:
        raise HypothesisViolation("weakly separative", f"clauses {', '.join(rep.failed)} fail for {sys!r}")
    return rep


# ------------------------------------------------------------------ weights

def q_weight(X: Iterable, sys: System) -> float:
    """``prod_{u in X} p_u * prod_{u in P \\ X} (1 - p_u)``; ``X`` holds members or their indices."""
    idx = set()
    for u in X:
        if isinstance(u, (int, np.integer)):
            idx.add(int(u))
        else:
            idx.add(sys.P.index(frozenset(u)))
    out = 1.0
    for i, p in enumerate(sys.member_p):
        out *= p if i in idx else 1.0 - p
    return out


def q_empty(sys: System) -> float:
    return q_weight((), sys)


def q_full(sys: System) -> float:
    return q_weight(range(len(sys.P)), sys)


# ------------------------------------------------------------------ drawing

@dataclass
class DrawnModel:
    system: System
    chosen: np.ndarray  # bool per atom (class, image set)

    def chosen_sets(self) -> dict[int, list[frozenset]]:
        out: dict[int, list[frozenset]] = {}
        for (c, img), on in zip(self.system.atoms, self.chosen):
            if on:
                out.setdefault(c, []).append(img)
        return out


def draw_model(sys: System, rng: np.random.Generator) -> DrawnModel:
    return DrawnModel(sys, rng.random(len(sys.atoms)) < sys.atom_p)


@dataclass
class Census:
    counts: dict  # type label -> number of components
    successes: list  # indices of F[M]
    overflow_functions: int = 0

    def conserved(self, sizes: Mapping[str, int]) -> bool:
        total = sum(sizes[t] * c for t, c in self.counts.items() if t != OVERFLOW)
        return total + self.overflow_functions == len(self.successes)


class TypeRegistry:
    """Canonical labels for component types, cached by member set."""

    def __init__(self, sys: System, cap: int = DEFAULT_CAP):
        self.sys = sys
        self.cap = cap
        self.by_members: dict[tuple, str] = {}
        self.sizes: dict[str, int] = {}
        self.forms: dict[str, tuple] = {}
        rels = [Relation("fn", 1)] + [Relation(f"c{a}", 2) for a in range(sys.m)]
        self.vocab = Vocabulary(tuple(rels))
        self.singleton = self.label((0,)) if sys.F else None

    def form(self, members: Sequence[int]) -> tuple:
        pts = sorted({v for i in members for v in self.sys.F[i]})
        k = len(members)
        pos = {v: k + j for j, v in enumerate(pts)}
        tuples = {"fn": [(j,) for j in range(k)]}
        for a in range(self.sys.m):
            tuples[f"c{a}"] = [(j, pos[self.sys.F[i][a]]) for j, i in enumerate(members)]
        return canonical_form(RelStructure(self.vocab, k + len(pts), tuples))

    def label(self, members: Sequence[int]) -> str:
        key = tuple(sorted(members))
        lab = self.by_members.get(key)
        if lab is not None:
            return lab
        if len(key) > self.cap:
            lab = OVERFLOW
        else:
            form = self.form(key)
            lab = f"t{len(key)}-" + hashlib.sha1(repr(form).encode()).hexdigest()[:10]
            self.sizes[lab] = len(key)
            self.forms[lab] = form
        self.by_members[key] = lab
        return lab


def _components(sys: System, members: Sequence[int]) -> list[list[int]]:
    alive = set(members)
    dsu = _DSU(members)
    for i in members:
        for j in sys.adj[i]:
            if j in alive:
                dsu.union(i, j)
    return dsu.classes()


def census(model: DrawnModel, registry: TypeRegistry | None = None) -> Census:
    sys = model.system
    reg = registry or TypeRegistry(sys)
    ok = model.chosen[sys.atom_matrix].all(axis=1)
    succ = [int(i) for i in np.flatnonzero(ok)]
    counts: dict[str, int] = {}
    over = 0
    for comp in _components(sys, succ):
        lab = reg.label(comp)
        counts[lab] = counts.get(lab, 0) + 1
        if lab == OVERFLOW:
            over += len(comp)
    return Census(dict(sorted(counts.items())), succ, over)


def f_star(model: DrawnModel) -> list[int]:
    """Functions with no chosen image that no overlapping function could complete around them.

    ``f`` is kept when none of its images is chosen and every other function
    meeting its range has some ``P``-image outside ``Rang(f)`` left unchosen.
    """
    sys = model.system
    ch = model.chosen
    out = []
    for i, f in enumerate(sys.F):
        if ch[sys.f_atoms[i]].any():
            continue
        rng_f = set(f)
        blocked = False
        for j in sys.adj[i]:
            outside = [a for a in sys.f_atoms[j] if not sys.atoms[a][1] <= rng_f]
            if all(ch[a] for a in outside):
                blocked = True
                break
        if not blocked:
            out.append(i)
    return out


# ------------------------------------------------------------- simulation

@dataclass
class Runs:
    """Per-trial outcomes of repeated draws from one system."""

    system: System
    seed: int
    singles: np.ndarray  # L_{t*} per trial
    successes: np.ndarray  # |F[M]| per trial
    fstar: np.ndarray  # |F_*| per trial
    vectors: list  # census dict per trial
    conserved: np.ndarray
    registry: TypeRegistry

    @property
    def trials(self) -> int:
        return len(self.singles)

    @property
    def singleton(self) -> str:
        return self.registry.singleton

    def records(self) -> list[dict]:
        out = []
        for t in range(self.trials):
            out.append({"schema": SCHEMA, "experiment": "census", "trial": t, "system": self.system.name,
                        "singletons": int(self.singles[t]), "successes": int(self.successes[t]),
                        "f_star": int(self.fstar[t]), "census": self.vectors[t],
                        "conserved": bool(self.conserved[t])})
        return out


def _outside_atoms(sys: System):
    pairs = []
    for i, f in enumerate(sys.F):
        rng_f = set(f)
        for j in sys.adj[i]:
            pairs.append((i, [a for a in sys.f_atoms[j] if not sys.atoms[a][1] <= rng_f]))
    return pairs


def simulate(sys: System, trials: int, seed: int, cap: int = DEFAULT_CAP) -> Runs:
    """Draw ``trials`` models (trial ``t`` uses the stream ``(seed, t)``) and take their census."""
    if trials < 1:
        raise InvalidArgument("need at least one trial")
    reg = TypeRegistry(sys, cap)
    nF = len(sys.F)
    chosen = np.empty((trials, len(sys.atoms)), dtype=bool)
    for t in range(trials):
        chosen[t] = trial_rng(seed, t).random(len(sys.atoms)) < sys.atom_p
    succ = chosen[:, sys.atom_matrix].all(axis=2)
    nbr = (succ.astype(np.int64) @ sys.adj_matrix) > 0
    singles = (succ & ~nbr).sum(axis=1)
    # F_*: no own image chosen, and no overlapping function completed outside Rang(f)
    empty = ~chosen[:, sys.atom_matrix].any(axis=2)
    blocked = np.zeros((trials, nF), dtype=bool)
    for i, outside in _outside_atoms(sys):
        if outside:
            blocked[:, i] |= chosen[:, outside].all(axis=1)
        else:
            blocked[:, i] = True
    fstar = (empty & ~blocked).sum(axis=1)
    vectors, conserved = [], np.zeros(trials, dtype=bool)
    single_lab = reg.singleton
    for t in range(trials):
        row = succ[t]
        lone = row & ~nbr[t]
        counts: dict[str, int] = {}
        if lone.any():
            counts[single_lab] = int(lone.sum())
        rest = [int(i) for i in np.flatnonzero(row & nbr[t])]
        over = 0
        for comp in _components(sys, rest):
            lab = reg.label(comp)
            counts[lab] = counts.get(lab, 0) + 1
            if lab == OVERFLOW:
                over += len(comp)
        counts = dict(sorted(counts.items()))
        vectors.append(counts)
        total = sum(reg.sizes[k] * c for k, c in counts.items() if k != OVERFLOW) + over
        conserved[t] = total == int(row.sum())
    return Runs(sys, seed, singles, succ.sum(axis=1), fstar, vectors, conserved, reg)


# -------------------------------------------------------------- verdicts

@dataclass
class InequalityReport:
    claim: str
    target: object
    factor: float
    p1: Interval
    p2: Interval
    zeta: Interval | None
    verdict: str
    trials: int
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        d = {"claim": self.claim, "target": self.target, "factor": self.factor,
             "p1": [self.p1.estimate, self.p1.lo, self.p1.hi], "p2": [self.p2.estimate, self.p2.lo, self.p2.hi],
             "verdict": self.verdict, "trials": self.trials}
        if self.zeta is not None:
            d["zeta"] = [self.zeta.estimate, self.zeta.lo, self.zeta.hi]
        d.update(self.detail)
        return d


def _events(runs: Runs, target) -> tuple[np.ndarray, np.ndarray, int]:
    """Indicators of ``L = target`` and of ``L = target`` plus one isolated success, and ``L^2_{t*}``."""
    if isinstance(target, Mapping):
        t1 = {k: int(v) for k, v in target.items() if int(v) != 0}
        t2 = dict(t1)
        t2[runs.singleton] = t2.get(runs.singleton, 0) + 1
        e1 = np.array([v == t1 for v in runs.vectors])
        e2 = np.array([v == t2 for v in runs.vectors])
        return e1, e2, t2[runs.singleton]
    L1 = int(target)
    return runs.singles == L1, runs.singles == L1 + 1, L1 + 1


def _runs_for(sys, trials, seed, runs):
    if runs is not None:
        if runs.system is not sys:
            raise InvalidArgument("runs were drawn from a different system")
        return runs
    return simulate(sys, trials, seed)


def verify_step_inequality(sys: System, target, trials: int = 100_000, seed: int = 0,
                           runs: Runs | None = None) -> InequalityReport:
    """``P(L = L1) >= q_0 * L2_{t*} / (q_P |F|) * P(L = L2)`` with Wilson slack.

    ``target`` is either a count of isolated successes or a full census
    vector (type label to count).
    """
    require_weak(sys)
    runs = _runs_for(sys, trials, seed, runs)
    e1, e2, l2 = _events(runs, target)
    factor = q_empty(sys) * l2 / (q_full(sys) * len(sys.F))
    p1 = wilson(int(e1.sum()), runs.trials)
    p2 = wilson(int(e2.sum()), runs.trials)
    if p1.lo >= factor * p2.hi and p1.estimate > 0:
        verdict = PASS
    elif p1.hi < factor * p2.lo:
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    return InequalityReport("step", target, factor, p1, p2, None, verdict, runs.trials)


def tail_bound(sys: System, L_star: int) -> float:
    """``prod_{L = L0+1}^{L*} mu / L`` with ``mu = q_P |F| / q_0`` and ``L0 = ceil(mu)``."""
    mu = q_full(sys) * len(sys.F) / q_empty(sys)
    L0 = math.ceil(mu)
    if L_star < L0:
        raise InvalidArgument(f"L* must be at least {L0}")
    out = 1.0
    for L in range(L0 + 1, L_star + 1):
        out *= mu / L
    return out


def verify_tail_bound(sys: System, L_star: int, trials: int = 100_000, seed: int = 0,
                      runs: Runs | None = None) -> InequalityReport:
    require_weak(sys)
    bound = tail_bound(sys, L_star)
    runs = _runs_for(sys, trials, seed, runs)
    p = wilson(int((runs.singles == L_star).sum()), runs.trials)
    if p.hi <= bound:
        verdict = PASS
    elif p.lo > bound:
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    return InequalityReport("tail", int(L_star), bound, p, Interval(1.0, 1.0, 1.0), None, verdict, runs.trials,
                            {"bound": bound})


def verify_lower_deviation(sys: System, target, alpha: float, trials: int = 100_000, seed: int = 0,
                           runs: Runs | None = None) -> InequalityReport:
    """``P(L = L1) <= q_0 * L2_{t*} / (q_P alpha |F|) * P(L = L2) + zeta``.

    ``zeta`` estimates ``P(L = L1 and |F_*| < alpha |F|)``. A census vector
    target compares full vectors; an integer target compares isolated counts only.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidArgument("alpha must lie in (0,1)")
    require_weak(sys)
    runs = _runs_for(sys, trials, seed, runs)
    e1, e2, l2 = _events(runs, target)
    thin = runs.fstar < alpha * len(sys.F)
    factor = q_empty(sys) * l2 / (q_full(sys) * alpha * len(sys.F))
    p1 = wilson(int(e1.sum()), runs.trials)
    p2 = wilson(int(e2.sum()), runs.trials)
    z = wilson(int((e1 & thin).sum()), runs.trials)
    if p1.hi <= factor * p2.lo + z.lo:
        verdict = PASS
    elif p1.lo > factor * p2.hi + z.hi:
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    claim = "lower-vector" if isinstance(target, Mapping) else "lower-singletons"
    return InequalityReport(claim, target, factor, p1, p2, z, verdict, runs.trials, {"alpha": alpha})


def modal_vector(runs: Runs, singles: int) -> dict:
    """Most frequent census vector among trials with the given number of isolated successes."""
    counts: dict[tuple, int] = {}
    for v, s in zip(runs.vectors, runs.singles):
        if s == singles:
            key = tuple(sorted(v.items()))
            counts[key] = counts.get(key, 0) + 1
    if not counts:
        raise InvalidArgument(f"no trial has {singles} isolated successes")
    best = min(counts, key=lambda k: (-counts[k], k))
    return dict(best)


# --------------------------------------------------------------- splitting

def _code(c: int, L: int) -> tuple:
    return tuple((c >> (L - 1 - i)) & 1 for i in range(L))


def split_bound(n: int, dom: int) -> int:
    return max(1, math.ceil(math.log2(n))) ** (dom + 1)


def separation_split(F: Sequence[Sequence[int]], n: int, fixed: Iterable[int] = ()) -> list[list[int]]:
    """Cells of ``F`` (as index lists) that are each separative.

    Points get binary codes of length ``ceil(log2 n)``. A function is keyed by
    the first bit positions separating its new points and by the bits its new
    coordinates take there; equal keys share a cell. Cells are then merged
    greedily while the union stays separative.
    """
    F = [tuple(int(v) for v in f) for f in F]
    if not F:
        return []
    dom = len(F[0])
    fixed = sorted(set(int(x) for x in fixed))
    for f in F:
        if len(f) != dom or len(set(f)) != dom:
            raise InvalidArgument("functions must be injective with a common domain")
        if any(v < 0 or v >= n for v in f):
            raise InvalidArgument("function leaves the universe")
        if any(f[x] != F[0][x] for x in fixed):
            raise InvalidArgument("functions disagree on the shared coordinates")
    L = max(1, math.ceil(math.log2(n)))
    new = [x for x in range(dom) if x not in fixed]
    cells: dict[tuple, list[int]] = {}
    for i, f in enumerate(F):
        pts = [f[x] for x in new]
        codes = {v: _code(v, L) for v in pts}
        w = set()
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                ca, cb = codes[pts[a]], codes[pts[b]]
                w.add(next(j for j in range(L) if ca[j] != cb[j]))
        w = tuple(sorted(w))
        v = tuple((x, j, codes[f[x]][j]) for x in new for j in w)
        cells.setdefault((w, v), []).append(i)
    # greedy merge of keyed cells whose union stays separative
    merged: list[tuple[list[int], dict[int, int]]] = []
    for k in sorted(cells):
        owner = {}
        for i in cells[k]:
            for x in new:
                owner[F[i][x]] = x
        for idx, seen in merged:
            if all(seen.get(v, x) == x for v, x in owner.items()):
                idx.extend(cells[k])
                seen.update(owner)
                break
        else:
            merged.append((list(cells[k]), owner))
    return [sorted(idx) for idx, _ in merged]
