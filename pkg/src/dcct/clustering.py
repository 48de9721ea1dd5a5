"""DBSCAN, k-means and InfoMap backends, Davies-Bouldin scoring, and the
conversion of a clustering into a pseudo-labelled training set."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .infomap import infomap_partition
from .io import write_csv

log = logging.getLogger(__name__)

OUTLIER = -1


@dataclass(frozen=True)
class ClusterResult:
    assignment: np.ndarray
    k: int
    dbi: float | None = None  # None: fewer than two clusters, quality unknown

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> "ClusterResult":
        labels = relabel(labels)
        return cls(labels, int(labels.max()) + 1 if (labels >= 0).any() else 0)

    def with_dbi(self, embeddings) -> "ClusterResult":
        return replace(self, dbi=davies_bouldin(embeddings, self.assignment, strict=False))

    @property
    def n_outliers(self) -> int:
        return int((self.assignment == OUTLIER).sum())


def relabel(labels: np.ndarray) -> np.ndarray:
    """Map non-negative labels to 0..K-1 in order of first appearance."""
    labels = np.asarray(labels, dtype=np.int64)
    out = np.full(len(labels), OUTLIER, dtype=np.int64)
    mapping: dict[int, int] = {}
    for i, lab in enumerate(labels):
        if lab < 0:
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out


def dbscan(dist: np.ndarray, eps: float, min_pts: int = 4) -> ClusterResult:
    """Density-based clustering on a precomputed distance matrix.

    Neighborhoods are ``dist <= eps`` and include the point itself. Clusters are
    grown breadth-first from cores in ascending index order, so a border point
    reachable from several clusters joins the one discovered first.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    dist = np.asarray(dist, dtype=np.float64)
    adj = dist <= eps
    is_core = adj.sum(axis=1) >= min_pts
    rows, cols = np.nonzero(adj)
    indptr = np.searchsorted(rows, np.arange(len(dist) + 1))
    labels = kernels.dbscan_expand(indptr, cols, is_core.astype(np.uint8))
    return ClusterResult.from_labels(labels)


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    chosen = [int(rng.integers(n))]
    d2 = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((x - x[nxt]) ** 2).sum(axis=1))
    return x[chosen].copy()


def kmeans(embeddings, k: int, seed: int | np.random.Generator = 0, max_iter: int = 100) -> ClusterResult:
    x = np.asarray(getattr(embeddings, "emb", embeddings), dtype=np.float64)
    n = len(x)
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    centers = _kmeans_pp(x, k, rng)
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None]) ** 2).sum(axis=2)
        new = d2.argmin(axis=1)
        taken: set[int] = set()
        for c in range(k):
            members = new == c
            if members.any():
                continue
            # Re-seed from the point farthest from its current center.
            far = d2[np.arange(n), new]
            far[list(taken)] = -1.0
            p = int(far.argmax())
            taken.add(p)
            new[p] = c
        for c in range(k):
            centers[c] = x[new == c].mean(axis=0)
        if np.array_equal(new, labels):
            break
        labels = new
    return ClusterResult.from_labels(labels)


def infomap(dist: np.ndarray, psi: float) -> ClusterResult:
    """Two-level map-equation communities on the graph linking ``D(i,j) < psi``
    with weight ``1 - D(i,j)``. Isolated nodes are outliers."""
    if not 0 < psi <= 1:
        raise ValueError("psi must lie in (0, 1]")
    dist = np.asarray(dist, dtype=np.float64)
    w = np.where(dist < psi, 1.0 - dist, 0.0)
    np.fill_diagonal(w, 0.0)
    w = 0.5 * (w + w.T)
    labels = infomap_partition(w)
    return ClusterResult.from_labels(labels)


class DbiUndefined(ValueError):
    """Fewer than two non-outlier clusters."""


def davies_bouldin(embeddings, assignment, strict: bool = True) -> float | None:
    """Davies-Bouldin index over non-outlier clusters (Euclidean geometry).

    With fewer than two clusters raises ``DbiUndefined``, or returns None when
    ``strict`` is false.
    """
    x = np.asarray(getattr(embeddings, "emb", embeddings), dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    a = np.asarray(assignment)
    keep = a >= 0
    x, a = x[keep], a[keep]
    ids = np.unique(a)
    if len(ids) < 2:
        if strict:
            raise DbiUndefined(f"need >= 2 clusters, got {len(ids)}")
        return None
    inv = np.searchsorted(ids, a)
    counts = np.bincount(inv)
    cent = np.zeros((len(ids), x.shape[1]))
    np.add.at(cent, inv, x)
    cent /= counts[:, None]
    scatter = np.bincount(inv, weights=np.linalg.norm(x - cent[inv], axis=1)) / counts
    sep = np.linalg.norm(cent[:, None] - cent[None], axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (scatter[:, None] + scatter[None]) / sep
    # Coincident centroids: zero scatter counts as 0, otherwise unbounded.
    coincident = sep == 0
    ratio[coincident] = np.where((scatter[:, None] + scatter[None])[coincident] == 0, 0.0, np.inf)
    np.fill_diagonal(ratio, -np.inf)
    return float(ratio.max(axis=1).mean())


@dataclass(frozen=True)
class TrainingSet:
    indices: np.ndarray  # positions into the full dataset
    labels: np.ndarray  # contiguous pseudo labels
    k: int

    @property
    def empty(self) -> bool:
        return len(self.indices) == 0

    def __len__(self) -> int:
        return len(self.indices)


def pseudo_labels(result: ClusterResult, samples=None) -> TrainingSet:
    """Drop outliers and relabel to ``0..K-1``. ``samples`` is only length-checked."""
    a = np.asarray(result.assignment)
    if samples is not None and len(samples) != len(a):
        raise ValueError(f"{len(a)} assignments for {len(samples)} samples")
    keep = np.flatnonzero(a >= 0)
    labels = relabel(a[keep])
    k = int(labels.max()) + 1 if len(labels) else 0
    if k == 0:
        log.warning("clustering produced no clusters; training set is empty")
    return TrainingSet(keep, labels, k)


def dump_assignment_csv(result: ClusterResult, path: str | Path) -> None:
    write_csv(path, ["index", "label"], ({"index": i, "label": int(c)} for i, c in enumerate(result.assignment)))
