"""Pairwise distances: cosine and k-reciprocal Jaccard."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import kernels
from .io import atomic_write_text

UNIT_TOL = 1e-6


def _rows(embeddings) -> np.ndarray:
    e = np.asarray(getattr(embeddings, "emb", embeddings), dtype=np.float64)
    if e.ndim != 2:
        raise ValueError(f"expected a 2-D embedding matrix, got shape {e.shape}")
    return e


def cosine_distance_matrix(embeddings) -> np.ndarray:
    e = _rows(embeddings)
    norms = np.linalg.norm(e, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
    if len(bad):
        raise ValueError(f"row {int(bad[0])} has norm {norms[bad[0]]:.8f}, expected unit rows")
    d = 1.0 - e @ e.T
    d = 0.5 * (d + d.T)
    np.clip(d, 0.0, 2.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def neighbor_ranking(dist: np.ndarray) -> np.ndarray:
    """Row-wise ascending order of ``dist``; ties go to the lower index."""
    return np.argsort(dist, axis=1, kind="stable")


def k_reciprocal_jaccard(embeddings, k1: int = 30, k2: int = 6, lambda_value: float = 0.0) -> np.ndarray:
    """Jaccard distance over k-reciprocal encodings.

    Expanded k1-reciprocal sets are weighted by ``exp(-d_cos)`` and normalized
    per row, smoothed over each row's k2 nearest neighbors (skipped when
    k2 == 1), and compared with the soft Jaccard ``1 - sum(min)/sum(max)``.
    ``lambda_value`` blends in the cosine distance and defaults to 0.
    """
    e = _rows(embeddings)
    n = len(e)
    if not 1 <= k1 < n:
        raise ValueError(f"k1 must satisfy 1 <= k1 < n={n}, got {k1}")
    if not 1 <= k2 <= k1:
        raise ValueError(f"k2 must satisfy 1 <= k2 <= k1, got {k2}")
    if not 0.0 <= lambda_value <= 1.0:
        raise ValueError("lambda_value must lie in [0, 1]")

    d_cos = cosine_distance_matrix(e)
    rank = neighbor_ranking(d_cos)
    indptr, indices = kernels.k_reciprocal_expanded(rank[:, : k1 + 1], k1, int(np.around(k1 / 2)))

    v = np.zeros((n, n))
    for i in range(n):
        cols = indices[indptr[i] : indptr[i + 1]]
        w = np.exp(-d_cos[i, cols])
        v[i, cols] = w / w.sum()
    if k2 != 1:
        v = v[rank[:, :k2]].mean(axis=1)

    rows, cols = np.nonzero(v)
    vptr = np.searchsorted(rows, np.arange(n + 1))
    jac = kernels.jaccard_sparse(vptr, cols, v[rows, cols], n)
    if lambda_value:
        jac = (1.0 - lambda_value) * jac + lambda_value * d_cos
    return jac


def dump_distance_csv(dist: np.ndarray, path: str | Path) -> None:
    lines = [",".join(repr(float(x)) for x in row) for row in dist]
    atomic_write_text(path, "\n".join(lines) + "\n")
