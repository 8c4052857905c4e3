"""Compiled vs pure-Python extension counting on a random sparse graph.

    python3 benchmarks/bench_kernels.py [--n 2000] [--alpha 0.6] [--starts 500] [--repeat 3]

Both backends count the same extensions from every start tuple; the script
checks that the counts agree and prints the best wall time of each.
"""
import argparse
import time

import numpy as np

from sparse01 import _kernels_py, kernels
from sparse01.fast import GraphView, compile_pattern
from sparse01.structures import RelStructure

PATTERNS = {
    "pendant": (RelStructure.graph(2, [(0, 1)]), [0]),
    "common-neighbor": (RelStructure.graph(3, [(0, 2), (1, 2)]), [0, 1]),
    "triangle": (RelStructure.graph(3, [(0, 1), (1, 2), (0, 2)]), [0]),
    "path-3": (RelStructure.graph(4, [(0, 1), (1, 2), (2, 3)]), [0]),
}


def random_graph(n, alpha, seed):
    rng = np.random.default_rng(seed)
    p = n ** -alpha
    m = rng.binomial(n * (n - 1) // 2, p)
    a = rng.integers(0, n, size=2 * m)
    b = rng.integers(0, n, size=2 * m)
    keep = a != b
    pairs = {(min(x, y), max(x, y)) for x, y in zip(a[keep].tolist(), b[keep].tolist())}
    return RelStructure.graph(n, sorted(pairs)[:m])


def starts_for(n, k, rng, cap):
    if k == 1:
        return np.arange(min(n, cap), dtype=np.int32).reshape(-1, 1)
    rows = rng.integers(0, n, size=(cap, k)).astype(np.int32)
    return rows[rows[:, 0] != rows[:, 1]]


def best_time(impl, host, pat, starts, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = impl.count_batch(host.indptr, host.indices, host.pairmask, host.vmask, pat.pat_pair,
                               pat.pat_v, pat.order, pat.anchor, starts, 0)
        best = min(best, time.perf_counter() - t)
    return best, np.asarray(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--starts", type=int, default=500)
    ap.add_argument("--alpha", type=float, default=0.6)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if kernels.BACKEND != "cython":
        raise SystemExit("compiled backend not built; run `pip install -e . --no-build-isolation` first")
    host = GraphView.from_structure(random_graph(args.n, args.alpha, args.seed))
    rng = np.random.default_rng(args.seed)
    print(f"host n={args.n} alpha={args.alpha}")
    print(f"{'pattern':<16}{'starts':>8}{'cython s':>12}{'python s':>12}{'speedup':>10}")
    for name, (B, fixed) in PATTERNS.items():
        pat = compile_pattern(B, fixed, host)
        starts = starts_for(args.n, len(fixed), rng, args.starts)
        tc, a = best_time(kernels._impl, host, pat, starts, args.repeat)
        tp, b = best_time(_kernels_py, host, pat, starts, args.repeat)
        if not np.array_equal(a, b):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<16}{len(starts):>8}{tc:>12.4f}{tp:>12.4f}{tp / max(tc, 1e-9):>9.1f}x")


if __name__ == "__main__":
    main()
