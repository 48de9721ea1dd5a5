"""mAP / CMC retrieval scoring with the cross-camera protocol."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

TOPK = (1, 5, 10)


@dataclass(frozen=True)
class RetrievalResult:
    mAP: float
    cmc: dict[int, float] = field(default_factory=dict)
    n_valid: int = 0
    n_excluded: int = 0

    @property
    def top1(self) -> float:
        return self.cmc[1]


def evaluate(q_emb, q_ids, q_cams, g_emb, g_ids, g_cams, topk=TOPK) -> RetrievalResult:
    """Rank gallery by descending cosine similarity (ties: lower gallery index
    first), skipping same-identity same-camera entries. Queries with no valid
    match are left out and counted in ``n_excluded``."""
    q_emb, g_emb = np.asarray(q_emb, float), np.asarray(g_emb, float)
    q_ids, q_cams = np.asarray(q_ids), np.asarray(q_cams)
    g_ids, g_cams = np.asarray(g_ids), np.asarray(g_cams)
    sim = q_emb @ g_emb.T
    gidx = np.arange(len(g_ids))
    aps, hits = [], {k: 0 for k in topk}
    excluded = 0
    for i in range(len(q_ids)):
        order = np.lexsort((gidx, -sim[i]))
        ids, cams = g_ids[order], g_cams[order]
        valid = ~((ids == q_ids[i]) & (cams == q_cams[i]))
        match = (ids == q_ids[i])[valid]
        if not match.any():
            excluded += 1
            continue
        ranks = np.flatnonzero(match)  # 0-based
        aps.append(np.mean(np.arange(1, len(ranks) + 1) / (ranks + 1)))
        for k in topk:
            hits[k] += int(ranks[0] < k)
    if excluded:
        log.info("%d queries had no cross-camera match and were excluded", excluded)
    n = len(aps)
    if n == 0:
        return RetrievalResult(0.0, {k: 0.0 for k in topk}, 0, excluded)
    return RetrievalResult(float(np.mean(aps)), {k: hits[k] / n for k in topk}, n, excluded)
