"""Dual clustering co-teaching loop.

Per epoch both mean nets embed the whole dataset and are clustered with their
own schedule parameter; each clustering yields a pseudo-labelled training set,
a memory bank and a DBI score. Per iteration each network trains on a batch
drawn (and optionally mined) from its *peer's* training set against the peer's
memory, and the peer's memory is updated with this network's features.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import csm as csm_mod
from .clustering import ClusterResult, TrainingSet, dbscan, infomap, kmeans, pseudo_labels
from .config import RunConfig
from .datagen import Split, as_arrays, generate, split_query_gallery
from .encoder import EncoderParams, MeanNet, ema_update, forward, loss_and_grad, sgd_step
from .evaluation import RetrievalResult, evaluate
from .memory import MemoryBank, init_from_clusters
from .metricspace import k_reciprocal_jaccard
from .schedule import constant, params_at

log = logging.getLogger(__name__)

METRIC_COLUMNS = [
    "epoch", "iterations", "skipped", "lr", "p1", "p2", "k1", "k2", "outliers1", "outliers2",
    "dbi1", "dbi2", "gate", "consistent", "inconsistent", "inconsistent_correct",
    "inconsistent_incorrect", "skipped_steps1", "skipped_steps2", "loss1", "loss2",
    "mAP1", "mAP2", "top1_1", "top5_1", "top10_1", "top1_2", "top5_2", "top10_2",
    "mean_net_similarity",
]


@dataclass
class NetState:
    params: EncoderParams
    mean: MeanNet
    rng: np.random.Generator
    result: ClusterResult | None = None
    train: TrainingSet | None = None
    bank: MemoryBank | None = None
    members: list[np.ndarray] = field(default_factory=list)
    label_correct: np.ndarray | None = None  # diagnostics only


@dataclass
class CoTeachState:
    nets: list[NetState]
    lr: float
    gate: bool = False
    epoch: int = 0


@dataclass
class Data:
    """Training inputs plus the evaluation-only ground truth."""

    x: np.ndarray
    cams: np.ndarray
    ids: np.ndarray
    split: Split

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "Data":
        samples, _ = generate(cfg.data)
        x, ids, cams = as_arrays(samples)
        return cls(x, cams, ids, split_query_gallery(samples, cfg.query_fraction, seed=cfg.data.seed))


@dataclass
class RunResult:
    rows: list[dict]
    best_net: int  # 1 or 2, by final mAP
    best_params: EncoderParams
    dbi_choice: int  # 1 or 2, by lower final DBI (label-free)
    final: dict
    mean_params: tuple[EncoderParams, EncoderParams]
    wall_time: float


def pk_sample(train: TrainingSet, p: int, k: int, rng: np.random.Generator, members: list[np.ndarray] | None = None) -> np.ndarray:
    """``p`` distinct clusters, ``k`` members each (with replacement only when a
    cluster has fewer than ``k``). Returns positions into ``train``."""
    if members is None:
        members = cluster_members(train)
    n_clusters = len(members)
    if n_clusters < p:
        log.info("only %d clusters; lowering P from %d", n_clusters, p)
        p = n_clusters
    out = []
    for c in rng.choice(n_clusters, size=p, replace=False):
        m = members[c]
        out.append(rng.choice(m, size=k, replace=len(m) < k))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def cluster_members(train: TrainingSet) -> list[np.ndarray]:
    order = np.argsort(train.labels, kind="stable")
    bounds = np.searchsorted(train.labels[order], np.arange(train.k + 1))
    return [order[bounds[c] : bounds[c + 1]] for c in range(train.k)]


def majority_correct(train: TrainingSet, ids: np.ndarray) -> np.ndarray:
    """True where a sample's identity is its cluster's most common identity."""
    true = ids[train.indices]
    correct = np.zeros(len(train), dtype=bool)
    for c, m in enumerate(cluster_members(train)):
        vals, counts = np.unique(true[m], return_counts=True)
        correct[m] = true[m] == vals[np.argmax(counts)]
    return correct


def cluster(cfg: RunConfig, feats: np.ndarray, param, rng: np.random.Generator) -> ClusterResult:
    if cfg.clusterer == "kmeans":
        return kmeans(feats, int(param), rng)
    dist = k_reciprocal_jaccard(feats, cfg.k1, cfg.k2, cfg.jaccard_lambda)
    if cfg.clusterer == "dbscan":
        return dbscan(dist, param, cfg.min_pts)
    return infomap(dist, min(param, 1.0))


def init_state(cfg: RunConfig, d_in: int) -> CoTeachState:
    seq = np.random.SeedSequence(cfg.seed)
    init_seq, s1, s2 = seq.spawn(3)
    theta = EncoderParams.init(d_in, cfg.d_hidden, cfg.d_out, np.random.default_rng(init_seq))
    nets = [
        NetState(theta.copy(), MeanNet.from_encoder(theta, cfg.alpha), np.random.default_rng(s))
        for s in (s1, s2)
    ]
    return CoTeachState(nets, cfg.lr)


def epoch_params(cfg: RunConfig, epoch: int):
    return params_at(cfg.schedule, epoch) if cfg.use_dcdp else constant(cfg.schedule, epoch)


def epoch_setup(state: CoTeachState, cfg: RunConfig, data: Data, epoch: int) -> dict:
    """Cluster both mean nets' features and rebuild training sets and memories.

    Returns the setup part of the epoch's metrics row; ``row["skipped"]`` is set
    when either clustering leaves no training samples.
    """
    state.epoch = epoch
    p = epoch_params(cfg, epoch)
    row: dict = {"epoch": epoch, "p1": p[0], "p2": p[1], "skipped": False}
    feats = [forward(n.mean.params, data.x).emb for n in state.nets]
    for t, net in enumerate(state.nets):
        res = cluster(cfg, feats[t], p[t], net.rng).with_dbi(feats[t])
        net.result = res
        net.train = pseudo_labels(res)
        row[f"k{t + 1}"] = res.k
        row[f"outliers{t + 1}"] = res.n_outliers
        row[f"dbi{t + 1}"] = res.dbi if res.dbi is not None else ""
    if any(n.train.empty for n in state.nets):
        log.warning("epoch %d: empty training set, epoch skipped", epoch)
        row["skipped"] = True
        state.gate = False
        return row
    for t, net in enumerate(state.nets):
        net.bank = init_from_clusters(feats[t][net.train.indices], net.train.labels, cfg.beta, cfg.normalize_memory)
        net.members = cluster_members(net.train)
        net.label_correct = majority_correct(net.train, data.ids)
    state.gate = cfg.use_csm and csm_mod.gate(state.nets[0].result.dbi, state.nets[1].result.dbi, cfg.gamma)
    row["gate"] = state.gate
    return row


def draw_batch(net: NetState, cfg: RunConfig, data: Data, gate: bool):
    """PK batch from this net's training set, mined with its mean net and memory.

    Mining statistics are always computed for the diagnostics; samples are only
    dropped when ``gate`` is open.
    """
    pos = pk_sample(net.train, cfg.p_ids, cfg.k_inst, net.rng, net.members)
    idx = net.train.indices[pos]
    labels = net.train.labels[pos]
    emb = forward(net.mean.params, data.x[idx]).emb
    kept, _, report = csm_mod.mine(emb, labels, net.bank, net.label_correct[pos])
    if gate:
        idx, labels = idx[kept], labels[kept]
    return idx, labels, report


def compute_step(params: EncoderParams, x: np.ndarray, labels: np.ndarray, bank: MemoryBank, tau: float):
    """Loss, gradient and features of one network on its peer's batch (None if empty)."""
    if len(labels) == 0:
        return None
    return loss_and_grad(params, x, labels, bank, tau)


def iteration(state: CoTeachState, cfg: RunConfig, data: Data) -> dict:
    net1, net2 = state.nets
    batches = [draw_batch(n, cfg, data, state.gate) for n in state.nets]
    # Net t trains on the peer's batch, labels and memory.
    steps = []
    for t, peer in ((0, 1), (1, 0)):
        idx, labels, _ = batches[peer]
        steps.append(compute_step(state.nets[t].params, data.x[idx], labels, state.nets[peer].bank, cfg.tau))
    out = {"report": batches[0][2] + batches[1][2], "loss": [np.nan, np.nan], "skipped": [0, 0]}
    for t, peer in ((0, 1), (1, 0)):
        net = state.nets[t]
        if steps[t] is None:
            out["skipped"][t] = 1
        else:
            loss, grad, q = steps[t]
            out["loss"][t] = loss
            net.params = sgd_step(net.params, grad, state.lr, cfg.weight_decay)
    for t, peer in ((0, 1), (1, 0)):
        if steps[t] is not None:
            state.nets[peer].bank.update_batch(batches[peer][1], steps[t][2])
    for net in (net1, net2):
        net.mean = ema_update(net.mean, net.params)
    return out


def evaluate_mean(params: EncoderParams, data: Data) -> tuple[RetrievalResult, np.ndarray]:
    emb = forward(params, data.x).emb
    q, g = data.split.query, data.split.gallery
    res = evaluate(emb[q], data.ids[q], data.cams[q], emb[g], data.ids[g], data.cams[g])
    return res, emb


def run(cfg: RunConfig, data: Data | None = None, on_epoch: Callable[[dict], None] | None = None) -> RunResult:
    cfg.validate()
    start = time.perf_counter()
    if data is None:
        data = Data.from_config(cfg)
    state = init_state(cfg, data.x.shape[1])
    rows = []
    for epoch in range(cfg.epochs):
        if epoch and epoch % cfg.decay_every == 0:
            state.lr *= cfg.lr_decay_factor
        row = epoch_setup(state, cfg, data, epoch)
        row["lr"] = state.lr
        report = csm_mod.EMPTY_REPORT
        losses = [[], []]
        skipped = [0, 0]
        n_iter = 0
        if not row["skipped"]:
            for _ in range(cfg.iterations):
                out = iteration(state, cfg, data)
                report = report + out["report"]
                for t in range(2):
                    skipped[t] += out["skipped"][t]
                    if not np.isnan(out["loss"][t]):
                        losses[t].append(out["loss"][t])
                n_iter += 1
        row.update(
            iterations=n_iter,
            consistent=report.consistent_count,
            inconsistent=report.inconsistent_count,
            inconsistent_correct=report.inconsistent_correct,
            inconsistent_incorrect=report.inconsistent_incorrect,
            skipped_steps1=skipped[0],
            skipped_steps2=skipped[1],
            loss1=float(np.mean(losses[0])) if losses[0] else "",
            loss2=float(np.mean(losses[1])) if losses[1] else "",
        )
        embs = []
        for t, net in enumerate(state.nets):
            res, emb = evaluate_mean(net.mean.params, data)
            embs.append(emb)
            row[f"mAP{t + 1}"] = res.mAP
            for k in (1, 5, 10):
                row[f"top{k}_{t + 1}"] = res.cmc[k]
        row["mean_net_similarity"] = float(np.mean(np.sum(embs[0] * embs[1], axis=1)))
        row.setdefault("gate", False)
        rows.append(row)
        if on_epoch is not None:
            on_epoch(row)

    last = rows[-1]
    best = 1 if last["mAP1"] >= last["mAP2"] else 2
    dbis = [state.nets[t].result.dbi for t in range(2)]
    dbi_choice = 2 if (dbis[1] is not None and (dbis[0] is None or dbis[1] < dbis[0])) else 1
    final = {
        "mAP": last[f"mAP{best}"],
        "top1": last[f"top1_{best}"],
        "top5": last[f"top5_{best}"],
        "top10": last[f"top10_{best}"],
        "mAP1": last["mAP1"],
        "mAP2": last["mAP2"],
    }
    return RunResult(
        rows=rows,
        best_net=best,
        best_params=state.nets[best - 1].mean.params.copy(),
        dbi_choice=dbi_choice,
        final=final,
        mean_params=(state.nets[0].mean.params.copy(), state.nets[1].mean.params.copy()),
        wall_time=time.perf_counter() - start,
    )
