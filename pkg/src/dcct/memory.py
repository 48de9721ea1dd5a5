"""Cluster-level memory bank."""
from __future__ import annotations

import numpy as np

from .clustering import ClusterResult


class MemoryBank:
    """K cluster representations updated by momentum.

    ``normalize`` re-projects each representation onto the unit sphere after an
    update; turning it off gives the raw convex combination.
    """

    def __init__(self, reps: np.ndarray, beta: float = 0.1, normalize: bool = True):
        if not 0 <= beta < 1:
            raise ValueError(f"beta must lie in [0, 1), got {beta}")
        self.reps = np.array(reps, dtype=np.float64)
        self.beta = beta
        self.normalize = normalize

    def __len__(self) -> int:
        return len(self.reps)

    def copy(self) -> "MemoryBank":
        return MemoryBank(self.reps.copy(), self.beta, self.normalize)

    def update(self, k: int, q: np.ndarray) -> None:
        if not 0 <= k < len(self.reps):
            raise IndexError(f"cluster id {k} out of range [0, {len(self.reps)})")
        c = self.beta * self.reps[k] + (1.0 - self.beta) * q
        if self.normalize:
            c = c / np.linalg.norm(c)
        self.reps[k] = c

    def update_batch(self, ids, feats: np.ndarray) -> None:
        """One sequential update per row, in batch order."""
        for k, q in zip(np.asarray(ids), feats):
            self.update(int(k), q)


def init_from_clusters(embeddings, result: ClusterResult | np.ndarray, beta: float = 0.1, normalize: bool = True) -> MemoryBank:
    """Per-cluster mean of member embeddings (outliers skipped), renormalized."""
    e = np.asarray(getattr(embeddings, "emb", embeddings), dtype=np.float64)
    labels = np.asarray(getattr(result, "assignment", result))
    if len(labels) != len(e):
        raise ValueError(f"{len(labels)} labels for {len(e)} embeddings")
    keep = labels >= 0
    k = int(labels[keep].max()) + 1 if keep.any() else 0
    if k < 1:
        raise ValueError("memory needs at least one cluster")
    counts = np.bincount(labels[keep], minlength=k)
    assert (counts > 0).all(), "empty cluster in a ClusterResult"
    reps = np.zeros((k, e.shape[1]))
    np.add.at(reps, labels[keep], e[keep])
    reps /= counts[:, None]
    reps /= np.linalg.norm(reps, axis=1, keepdims=True)
    return MemoryBank(reps, beta, normalize)


def momentum_update(bank: MemoryBank, k: int, q: np.ndarray) -> MemoryBank:
    bank.update(k, q)
    return bank
