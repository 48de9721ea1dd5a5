"""Consistent sample mining and its clustering-quality gate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .memory import MemoryBank


@dataclass(frozen=True)
class CsmReport:
    consistent_count: int
    inconsistent_count: int
    inconsistent_correct: int = 0
    inconsistent_incorrect: int = 0

    def __add__(self, other: "CsmReport") -> "CsmReport":
        return CsmReport(
            self.consistent_count + other.consistent_count,
            self.inconsistent_count + other.inconsistent_count,
            self.inconsistent_correct + other.inconsistent_correct,
            self.inconsistent_incorrect + other.inconsistent_incorrect,
        )


EMPTY_REPORT = CsmReport(0, 0, 0, 0)


def nearest_cluster(emb: np.ndarray, bank: MemoryBank) -> np.ndarray:
    if len(bank) == 0:
        raise ValueError("empty memory bank")
    # argmax returns the first maximum, i.e. the smallest cluster id on ties.
    return np.argmax(np.asarray(emb) @ bank.reps.T, axis=1)


def mine(emb: np.ndarray, labels, bank: MemoryBank, label_correct: np.ndarray | None = None):
    """Keep samples whose most similar representation is their own cluster.

    Returns ``(kept, marked, report)``: positions kept, the labels with dropped
    samples set to -1, and counts. ``label_correct`` (diagnostics only) flags
    which pseudo labels agree with ground truth.
    """
    if len(bank) == 0:
        raise ValueError("empty memory bank")
    labels = np.asarray(labels, dtype=np.int64)
    emb = np.asarray(getattr(emb, "emb", emb))
    if len(labels) and (labels.min() < 0 or labels.max() >= len(bank)):
        raise IndexError("pseudo label outside the memory bank")
    consistent = nearest_cluster(emb, bank) == labels if len(labels) else np.zeros(0, bool)
    kept = np.flatnonzero(consistent)
    marked = np.where(consistent, labels, -1)
    n_in = int((~consistent).sum())
    correct = int(np.asarray(label_correct)[~consistent].sum()) if label_correct is not None else 0
    incorrect = n_in - correct if label_correct is not None else 0
    return kept, marked, CsmReport(len(kept), n_in, correct, incorrect)


def gate(dbi1: float | None, dbi2: float | None, gamma: float) -> bool:
    """Filtering is on only when both DBIs exist and the better one is below gamma."""
    if dbi1 is None or dbi2 is None:
        return False
    return min(dbi1, dbi2) < gamma
