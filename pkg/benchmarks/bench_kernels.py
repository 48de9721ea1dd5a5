"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 256 512 1024] [--repeat 3]

Both backends are imported directly, so one process measures both and also
checks that they agree.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from dcct import _kernels_py, kernels
from dcct.metricspace import cosine_distance_matrix, k_reciprocal_jaccard, neighbor_ranking

try:
    from dcct import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def use(backend):
    for name in ("k_reciprocal_expanded", "jaccard_sparse", "dbscan_expand"):
        setattr(kernels, name, getattr(backend, name))


def clustered_embeddings(n, d=32, n_centers=None, seed=0):
    rng = np.random.default_rng(seed)
    n_centers = n_centers or max(2, n // 16)
    centers = rng.standard_normal((n_centers, d))
    x = centers[rng.integers(0, n_centers, n)] + 0.5 * rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 512, 1024])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = [("python", _kernels_py)] + ([("cython", _ckernels)] if _ckernels else [])
    if _ckernels is None:
        print("compiled extension not available; timing the fallback only")
    print(f"{'n':>6} {'step':<22}" + "".join(f"{b:>12}" for b, _ in backends) + "     speedup")
    for n in args.sizes:
        emb = clustered_embeddings(n)
        rank = neighbor_ranking(cosine_distance_matrix(emb))[:, :31]
        steps = {
            "k-reciprocal sets": lambda: kernels.k_reciprocal_expanded(rank, 30, 15),
            "full Jaccard (k1=30)": lambda: k_reciprocal_jaccard(emb, 30, 6),
        }
        results = {}
        for step, fn in steps.items():
            row = []
            for name, mod in backends:
                use(mod)
                t, out = best_of(fn, args.repeat)
                row.append(t)
                results.setdefault(step, []).append(out)
            speed = f"{row[0] / row[1]:9.1f}x" if len(row) > 1 else ""
            print(f"{n:>6} {step:<22}" + "".join(f"{t * 1e3:10.1f}ms" for t in row) + speed)
        jac = results["full Jaccard (k1=30)"]
        if len(jac) > 1:
            print(f"{'':>6} max |cython - python| = {np.abs(jac[0] - jac[1]).max():.2e}")
        dist = jac[0]
        row = []
        for name, mod in backends:
            use(mod)
            t, _ = best_of(lambda: kernels.dbscan_expand(*_dbscan_inputs(dist, 0.5, 4)), args.repeat)
            row.append(t)
        speed = f"{row[0] / row[1]:9.1f}x" if len(row) > 1 else ""
        print(f"{n:>6} {'DBSCAN expansion':<22}" + "".join(f"{t * 1e3:10.1f}ms" for t in row) + speed)


def _dbscan_inputs(dist, eps, min_pts):
    adj = dist <= eps
    rows, cols = np.nonzero(adj)
    indptr = np.searchsorted(rows, np.arange(len(dist) + 1))
    return indptr, cols, (adj.sum(axis=1) >= min_pts).astype(np.uint8)


if __name__ == "__main__":
    main()
