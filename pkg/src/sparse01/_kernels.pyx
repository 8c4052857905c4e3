# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled backtracking for extension counting on coloured graphs.

Hosts are given by a CSR neighbour list, an ``n x n`` byte matrix whose bit
``r`` says binary relation ``r`` holds, and a per-vertex byte of unary bits.
Patterns use the same encoding. Matching is induced: every bit must agree.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t

cnp.import_array()


cdef int64_t _search(const int64_t[::1] indptr, const int32_t[::1] indices,
                     const uint8_t[:, ::1] pairmask, const uint8_t[::1] vmask,
                     const uint8_t[:, ::1] pat_pair, const uint8_t[::1] pat_v,
                     const int32_t[::1] order, const int32_t[::1] anchor, int n_fixed,
                     int32_t[::1] img, int64_t[::1] cursor, int64_t[::1] stop,
                     int64_t limit, int32_t[:, ::1] out, int64_t out_row) noexcept nogil:
    cdef int k = order.shape[0]
    cdef int n = vmask.shape[0]
    cdef int level, j, x, z, a
    cdef int32_t cand, w
    cdef int64_t found = 0
    cdef bint ok
    if n_fixed >= k:
        if out.shape[0] > out_row:
            for j in range(k):
                out[out_row, j] = img[j]
        return 1
    level = n_fixed
    a = anchor[level]
    if a >= 0:
        cursor[level] = indptr[img[a]]
        stop[level] = indptr[img[a] + 1]
    else:
        cursor[level] = 0
        stop[level] = n
    while level >= n_fixed:
        if cursor[level] >= stop[level]:
            level -= 1
            continue
        if anchor[level] >= 0:
            cand = indices[cursor[level]]
        else:
            cand = <int32_t>cursor[level]
        cursor[level] += 1
        x = order[level]
        if vmask[cand] != pat_v[x]:
            continue
        ok = True
        for j in range(level):
            z = order[j]
            w = img[z]
            if w == cand or pairmask[cand, w] != pat_pair[x, z] or pairmask[w, cand] != pat_pair[z, x]:
                ok = False
                break
        if not ok:
            continue
        img[x] = cand
        if level == k - 1:
            if out.shape[0] > out_row + found:
                for j in range(k):
                    out[out_row + found, j] = img[j]
            found += 1
            if limit > 0 and found >= limit:
                return found
        else:
            level += 1
            a = anchor[level]
            if a >= 0:
                cursor[level] = indptr[img[a]]
                stop[level] = indptr[img[a] + 1]
            else:
                cursor[level] = 0
                stop[level] = n
    return found


def count_batch(const int64_t[::1] indptr, const int32_t[::1] indices,
                const uint8_t[:, ::1] pairmask, const uint8_t[::1] vmask,
                const uint8_t[:, ::1] pat_pair, const uint8_t[::1] pat_v,
                const int32_t[::1] order, const int32_t[::1] anchor,
                const int32_t[:, ::1] starts, int64_t limit=0):
    """Extension counts for each row of ``starts`` (images of the first pattern vertices in ``order``)."""
    cdef int k = order.shape[0]
    cdef int n_fixed = starts.shape[1]
    cdef Py_ssize_t rows = starts.shape[0]
    cdef Py_ssize_t r
    cdef int j
    counts = np.zeros(rows, dtype=np.int64)
    cdef int64_t[::1] cv = counts
    img_a = np.zeros(k, dtype=np.int32)
    cur_a = np.zeros(k, dtype=np.int64)
    stop_a = np.zeros(k, dtype=np.int64)
    empty = np.zeros((0, k), dtype=np.int32)
    cdef int32_t[::1] img = img_a
    cdef int64_t[::1] cur = cur_a
    cdef int64_t[::1] stp = stop_a
    cdef int32_t[:, ::1] out = empty
    with nogil:
        for r in range(rows):
            for j in range(n_fixed):
                img[order[j]] = starts[r, j]
            cv[r] = _search(indptr, indices, pairmask, vmask, pat_pair, pat_v, order, anchor,
                            n_fixed, img, cur, stp, limit, out, 0)
    return counts


def list_extensions(const int64_t[::1] indptr, const int32_t[::1] indices,
                    const uint8_t[:, ::1] pairmask, const uint8_t[::1] vmask,
                    const uint8_t[:, ::1] pat_pair, const uint8_t[::1] pat_v,
                    const int32_t[::1] order, const int32_t[::1] anchor,
                    const int32_t[::1] start, int64_t limit=0):
    """Image rows (indexed by pattern vertex) of every extension of ``start``."""
    cdef int k = order.shape[0]
    cdef int n_fixed = start.shape[0]
    cdef int j
    img_a = np.zeros(k, dtype=np.int32)
    cur_a = np.zeros(k, dtype=np.int64)
    stop_a = np.zeros(k, dtype=np.int64)
    cdef int32_t[::1] img = img_a
    for j in range(n_fixed):
        img[order[j]] = start[j]
    empty = np.zeros((0, k), dtype=np.int32)
    total = _search(indptr, indices, pairmask, vmask, pat_pair, pat_v, order, anchor,
                    n_fixed, img, cur_a, stop_a, limit, empty, 0)
    out_a = np.zeros((total, k), dtype=np.int32)
    for j in range(n_fixed):
        img[order[j]] = start[j]
    _search(indptr, indices, pairmask, vmask, pat_pair, pat_v, order, anchor,
            n_fixed, img, cur_a, stop_a, total, out_a, 0)
    return out_a
