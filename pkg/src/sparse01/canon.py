"""Canonical forms and isomorphism-free enumeration of small structures.

The canonical form is the lexicographically least tuple encoding over all
labellings reachable by individualisation and colour refinement. Refinement
is isomorphism invariant, so this is an exact canonical form: two
structures get equal forms exactly when they are isomorphic. The chosen
representative can differ from the least encoding over all permutations,
which ``brute_canonical_form`` computes for cross-checking.
"""
from __future__ import annotations

import itertools
from typing import Iterator, Sequence

from .errors import InvalidArgument
from .structures import RelStructure, Vocabulary


def _tuple_lists(S: RelStructure):
    return [(i, rel.symmetric, sorted(S.tuples(rel.name))) for i, rel in enumerate(S.vocab)]


def _refine(n, tlists, colors):
    """Equitable refinement of an integer colouring."""
    while True:
        sig = [[] for _ in range(n)]
        for ri, sym, ts in tlists:
            for t in ts:
                cs = [colors[x] for x in t]
                if sym:
                    key = tuple(sorted(cs))
                    for x in t:
                        sig[x].append((ri, -1, key))
                else:
                    key = tuple(cs)
                    for pos, x in enumerate(t):
                        sig[x].append((ri, pos, key))
        keys = [(colors[x], tuple(sorted(sig[x]))) for x in range(n)]
        ranks = {k: r for r, k in enumerate(sorted(set(keys)))}
        new = [ranks[k] for k in keys]
        if len(ranks) == len(set(colors)):
            return new
        colors = new


def _encode(tlists, labels):
    out = []
    for _, sym, ts in tlists:
        if sym:
            out.append(tuple(sorted(tuple(sorted(labels[x] for x in t)) for t in ts)))
        else:
            out.append(tuple(sorted(tuple(labels[x] for x in t) for t in ts)))
    return tuple(out)


def canonical_labeling(S: RelStructure, fixed: Sequence[int] = ()) -> tuple[tuple, list[int]]:
    """Return ``(form, labels)``: the canonical form and one labelling achieving it.

    ``fixed`` lists distinguished elements (a parameter tuple); they keep their
    order and are placed first.
    """
    n = S.n
    fixed = list(fixed)
    if len(set(fixed)) != len(fixed):
        raise InvalidArgument("distinguished elements must be distinct")
    tlists = _tuple_lists(S)
    init = [len(fixed)] * n
    for i, x in enumerate(fixed):
        init[x] = i
    colors = _refine(n, tlists, init)
    best = [None, None]

    def search(colors):
        cells = {}
        for x, c in enumerate(colors):
            cells.setdefault(c, []).append(x)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            # discrete: colour rank is the label
            order = sorted(range(n), key=lambda x: colors[x])
            labels = [0] * n
            for pos, x in enumerate(order):
                labels[x] = pos
            enc = _encode(tlists, labels)
            if best[0] is None or enc < best[0]:
                best[0], best[1] = enc, labels
            return
        for x in target:
            # individualise x: give it a colour just below its cell
            new = [2 * c + 1 for c in colors]
            new[x] -= 1
            search(_refine(n, tlists, new))

    search(colors)
    form = (n, len(fixed), best[0])
    return form, best[1]


def canonical_form(S: RelStructure, fixed: Sequence[int] = ()) -> tuple:
    return canonical_labeling(S, fixed)[0]


def brute_canonical_form(S: RelStructure, fixed: Sequence[int] = ()) -> tuple:
    """Minimum encoding over every permutation; exponential, kept as a cross-check."""
    n = S.n
    fixed = list(fixed)
    tlists = _tuple_lists(S)
    rest = [x for x in range(n) if x not in fixed]
    best = None
    for perm in itertools.permutations(rest):
        labels = [0] * n
        for pos, x in enumerate(fixed + list(perm)):
            labels[x] = pos
        enc = _encode(tlists, labels)
        if best is None or enc < best:
            best = enc
    return (n, len(fixed), best)


def from_form(vocab: Vocabulary, form: tuple) -> RelStructure:
    n, _, enc = form
    return RelStructure(vocab, n, {rel.name: ts for rel, ts in zip(vocab, enc)})


def _new_tuples(vocab: Vocabulary, s: int):
    """All irreflexive tuples over ``0..s`` that contain the element ``s``."""
    out = []
    for rel in vocab:
        if rel.arity > s + 1:
            continue
        if rel.symmetric:
            for rest in itertools.combinations(range(s), rel.arity - 1):
                out.append((rel.name, tuple(rest) + (s,)))
        else:
            for t in itertools.permutations(range(s + 1), rel.arity):
                if s in t:
                    out.append((rel.name, t))
    return out


def enumerate_structures(vocab: Vocabulary, max_size: int, cap: int = 2_000_000) -> dict[int, list[RelStructure]]:
    """One representative per isomorphism type, for every size up to ``max_size``.

    Built by adding one element at a time to the representatives of the
    previous size. ``cap`` bounds the number of candidates examined.
    """
    levels = {0: [RelStructure(vocab, 0)]}
    examined = 0
    for s in range(max_size):
        extra = _new_tuples(vocab, s)
        seen = {}
        for rep in levels[s]:
            base = {rel.name: set(rep.tuples(rel.name)) for rel in vocab}
            for k in range(len(extra) + 1):
                for chosen in itertools.combinations(extra, k):
                    examined += 1
                    if examined > cap:
                        raise InvalidArgument(f"enumeration exceeds {cap} candidates")
                    tups = {name: set(ts) for name, ts in base.items()}
                    for name, t in chosen:
                        tups[name].add(t)
                    S = RelStructure(vocab, s + 1, tups, check=False)
                    key = canonical_form(S)
                    if key not in seen:
                        seen[key] = S
        levels[s + 1] = [seen[k] for k in sorted(seen)]
    return levels


def iter_structures(vocab: Vocabulary, max_size: int, min_size: int = 0) -> Iterator[RelStructure]:
    levels = enumerate_structures(vocab, max_size)
    for s in range(min_size, max_size + 1):
        yield from levels[s]
