"""Reference (numpy / pure Python) versions of the hot kernels.

Signatures match ``_ckernels.pyx``; results agree to rounding. ``kernels`` picks one.
"""
from __future__ import annotations

from collections import deque

import numpy as np


def _to_csr(rows: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.concatenate(rows).astype(np.int64) if rows else np.zeros(0, dtype=np.int64)
    return indptr, indices


def _reciprocal(rank: np.ndarray, i: int, k: int) -> np.ndarray:
    forward = rank[i, : k + 1]
    backward = rank[forward, : k + 1]
    return forward[(backward == i).any(axis=1)]


def k_reciprocal_expanded(rank: np.ndarray, k1: int, k_half: int) -> tuple[np.ndarray, np.ndarray]:
    """Expanded k-reciprocal sets R*(i) as CSR (indices sorted per row)."""
    rank = np.asarray(rank, dtype=np.int64)
    rows = []
    for i in range(len(rank)):
        r = _reciprocal(rank, i, k1)
        expansion = [r]
        for cand in r:
            cr = _reciprocal(rank, int(cand), k_half)
            if 3 * len(np.intersect1d(cr, r)) > 2 * len(cr):
                expansion.append(cr)
        rows.append(np.unique(np.concatenate(expansion)))
    return _to_csr(rows)


def jaccard_sparse(indptr: np.ndarray, indices: np.ndarray, data: np.ndarray, n: int) -> np.ndarray:
    """1 - sum(min)/sum(max) between all pairs of sparse non-negative rows."""
    dense = np.zeros((n, n))
    for i in range(n):
        dense[i, indices[indptr[i] : indptr[i + 1]]] = data[indptr[i] : indptr[i + 1]]
    rowsum = dense.sum(axis=1)
    out = np.ones((n, n))
    for i in range(n):
        cols = indices[indptr[i] : indptr[i + 1]]
        if len(cols) == 0:
            continue
        sub = dense[i:, cols]
        touched = np.flatnonzero((sub > 0).any(axis=1))
        smin = np.minimum(sub[touched], dense[i, cols]).sum(axis=1)
        smax = rowsum[i] + rowsum[i + touched] - smin
        out[i, i + touched] = 1.0 - smin / smax
    upper = np.triu(out, 1)
    out = upper + upper.T
    np.fill_diagonal(out, 0.0)
    return out


def dbscan_expand(indptr: np.ndarray, indices: np.ndarray, is_core: np.ndarray) -> np.ndarray:
    """Label points by breadth-first expansion from cores in ascending index order."""
    n = len(is_core)
    labels = np.full(n, -1, dtype=np.int64)
    cluster = 0
    for seed in range(n):
        if labels[seed] != -1 or not is_core[seed]:
            continue
        labels[seed] = cluster
        queue = deque([seed])
        while queue:
            p = queue.popleft()
            for q in indices[indptr[p] : indptr[p + 1]]:
                if labels[q] == -1:
                    labels[q] = cluster
                    if is_core[q]:
                        queue.append(q)
        cluster += 1
    return labels
