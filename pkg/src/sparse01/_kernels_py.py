"""Pure-Python twin of the compiled kernels; same signatures and results."""
from __future__ import annotations

import numpy as np


def _search(indptr, indices, pairmask, vmask, pat_pair, pat_v, order, anchor, n_fixed, img, limit, out):
    k = len(order)
    n = len(vmask)
    if n_fixed >= k:
        if out is not None:
            out.append(list(img))
        return 1
    found = 0
    cursor = [0] * k
    stop = [0] * k

    def init(level):
        a = anchor[level]
        if a >= 0:
            cursor[level] = indptr[img[a]]
            stop[level] = indptr[img[a] + 1]
        else:
            cursor[level] = 0
            stop[level] = n

    level = n_fixed
    init(level)
    while level >= n_fixed:
        if cursor[level] >= stop[level]:
            level -= 1
            continue
        cand = indices[cursor[level]] if anchor[level] >= 0 else cursor[level]
        cursor[level] += 1
        x = order[level]
        if vmask[cand] != pat_v[x]:
            continue
        row = pairmask[cand]
        prow = pat_pair[x]
        ok = True
        for j in range(level):
            z = order[j]
            w = img[z]
            if w == cand or row[w] != prow[z] or pairmask[w][cand] != pat_pair[z][x]:
                ok = False
                break
        if not ok:
            continue
        img[x] = cand
        if level == k - 1:
            if out is not None:
                out.append(list(img))
            found += 1
            if limit > 0 and found >= limit:
                return found
        else:
            level += 1
            init(level)
    return found


def _prep(indptr, indices, vmask, pat_pair, pat_v, order, anchor):
    return (indptr.tolist(), indices.tolist(), vmask.tolist(), pat_pair.tolist(), pat_v.tolist(),
            order.tolist(), anchor.tolist())


class _Rows:
    """Row access into the host pair matrix without copying it whole."""

    def __init__(self, pairmask):
        self.m = pairmask
        self.cache = {}

    def __getitem__(self, y):
        r = self.cache.get(y)
        if r is None:
            r = self.m[y].tolist()
            if len(self.cache) > 4096:
                self.cache.clear()
            self.cache[y] = r
        return r


def count_batch(indptr, indices, pairmask, vmask, pat_pair, pat_v, order, anchor, starts, limit=0):
    ip, ix, vm, pp, pv, od, an = _prep(indptr, indices, vmask, pat_pair, pat_v, order, anchor)
    rows = _Rows(pairmask)
    k = len(od)
    starts = np.asarray(starts)
    counts = np.zeros(starts.shape[0], dtype=np.int64)
    for r, st in enumerate(starts.tolist()):
        img = [0] * k
        for j, y in enumerate(st):
            img[od[j]] = y
        counts[r] = _search(ip, ix, rows, vm, pp, pv, od, an, len(st), img, int(limit), None)
    return counts


def list_extensions(indptr, indices, pairmask, vmask, pat_pair, pat_v, order, anchor, start, limit=0):
    ip, ix, vm, pp, pv, od, an = _prep(indptr, indices, vmask, pat_pair, pat_v, order, anchor)
    k = len(od)
    img = [0] * k
    st = np.asarray(start).tolist()
    for j, y in enumerate(st):
        img[od[j]] = y
    out = []
    _search(ip, ix, _Rows(pairmask), vm, pp, pv, od, an, len(st), img, int(limit), out)
    return np.asarray(out, dtype=np.int32).reshape(len(out), k)
