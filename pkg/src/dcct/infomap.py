"""Two-level map equation for undirected weighted graphs.

Flow is the stationary random walk: node visit rate ``s_a / 2W`` and per-edge
flow ``w_ab / 2W`` in each direction, so no teleportation is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_IMPROVEMENT = 1e-10


def plogp(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out if out.ndim else float(out)


def _plogp(x: float) -> float:
    return x * math.log2(x) if x > 0 else 0.0


def codelength(weights: np.ndarray, labels: np.ndarray) -> float:
    """Map-equation description length (bits per step) of ``labels``.

    Nodes with no edges carry no flow and do not contribute; their labels are
    ignored.
    """
    w = np.asarray(weights, dtype=np.float64)
    s = w.sum(axis=1)
    total = s.sum()
    if total <= 0:
        return 0.0
    p = s / total
    labels = np.asarray(labels)
    active = s > 0
    mods = np.unique(labels[active])
    q = np.empty(len(mods))
    pm = np.empty(len(mods))
    for t, m in enumerate(mods):
        inside = active & (labels == m)
        pm[t] = p[inside].sum()
        q[t] = w[np.ix_(inside, ~inside)].sum() / total
    return float(plogp(q.sum()) - 2 * plogp(q).sum() - plogp(p).sum() + plogp(q + pm).sum())


@dataclass
class _Level:
    flow: np.ndarray  # visit rate per (super)node
    self_flow: np.ndarray  # internal flow counted both directions
    nbrs: list[np.ndarray]
    edge_flow: list[np.ndarray]  # one-direction flow to each neighbor


def _level_from_weights(w: np.ndarray, nodes: np.ndarray) -> _Level:
    total = w.sum()
    sub = w[np.ix_(nodes, nodes)] / total
    nbrs, flows = [], []
    for a in range(len(nodes)):
        nz = np.flatnonzero(sub[a])
        nbrs.append(nz)
        flows.append(sub[a, nz])
    return _Level(sub.sum(axis=1), np.zeros(len(nodes)), nbrs, flows)


def _aggregate(level: _Level, module: np.ndarray) -> _Level:
    k = int(module.max()) + 1
    flow = np.bincount(module, weights=level.flow, minlength=k)
    self_flow = np.bincount(module, weights=level.self_flow, minlength=k)
    links: list[dict[int, float]] = [dict() for _ in range(k)]
    for a, (nb, fl) in enumerate(zip(level.nbrs, level.edge_flow)):
        ma = module[a]
        for b, f in zip(module[nb], fl):
            if b == ma:
                self_flow[ma] += f
            else:
                links[ma][b] = links[ma].get(b, 0.0) + f
    nbrs = [np.array(sorted(d), dtype=np.int64) for d in links]
    flows = [np.array([d[b] for b in sorted(d)]) for d in links]
    return _Level(flow, self_flow, nbrs, flows)


class _State:
    """Module-level sums needed for O(1) codelength deltas."""

    def __init__(self, level: _Level, module: np.ndarray):
        self.level = level
        self.module = module.copy()
        n = len(module)
        self.mod_flow = np.bincount(module, weights=level.flow, minlength=n)
        self.mod_in = np.zeros(n)
        for a in range(n):
            ma = module[a]
            self.mod_in[ma] += level.self_flow[a]
            nb = level.nbrs[a]
            same = module[nb] == ma
            self.mod_in[ma] += level.edge_flow[a][same].sum()
        self.mod_size = np.bincount(module, minlength=n)
        exit_ = self.mod_flow - self.mod_in
        self.sum_exit = exit_.sum()
        self.sum_plogp_exit = plogp(exit_).sum()
        self.sum_plogp_total = plogp(exit_ + self.mod_flow).sum()

    def codelength(self, node_term: float) -> float:
        return plogp(self.sum_exit) - 2 * self.sum_plogp_exit - node_term + self.sum_plogp_total

    def _terms(self, flow, in_):
        q = flow - in_
        return q, _plogp(q), _plogp(q + flow)

    def move_delta(self, a: int, old: int, new: int, f_old: float, f_new: float):
        lv = self.level
        pa, sa = lv.flow[a], lv.self_flow[a]
        fo, io = self.mod_flow[old], self.mod_in[old]
        fn, in_ = self.mod_flow[new], self.mod_in[new]
        q_o, pl_o, pt_o = self._terms(fo, io)
        q_n, pl_n, pt_n = self._terms(fn, in_)
        q_o2, pl_o2, pt_o2 = self._terms(fo - pa, io - 2 * f_old - sa)
        q_n2, pl_n2, pt_n2 = self._terms(fn + pa, in_ + 2 * f_new + sa)
        sum_exit = self.sum_exit - q_o - q_n + q_o2 + q_n2
        d_pl = pl_o2 + pl_n2 - pl_o - pl_n
        d_pt = pt_o2 + pt_n2 - pt_o - pt_n
        delta = _plogp(sum_exit) - _plogp(self.sum_exit) - 2 * d_pl + d_pt
        return delta, (sum_exit, d_pl, d_pt, f_old, f_new)

    def apply(self, a: int, old: int, new: int, info) -> None:
        sum_exit, d_pl, d_pt, f_old, f_new = info
        lv = self.level
        self.mod_flow[old] -= lv.flow[a]
        self.mod_in[old] -= 2 * f_old + lv.self_flow[a]
        self.mod_flow[new] += lv.flow[a]
        self.mod_in[new] += 2 * f_new + lv.self_flow[a]
        self.mod_size[old] -= 1
        self.mod_size[new] += 1
        self.sum_exit = sum_exit
        self.sum_plogp_exit += d_pl
        self.sum_plogp_total += d_pt
        self.module[a] = new


def _local_moves(state: _State, order: np.ndarray, max_sweeps: int = 100) -> bool:
    lv = state.level
    moved_any = False
    for _ in range(max_sweeps):
        moved = False
        for a in order:
            old = state.module[a]
            nb = lv.nbrs[a]
            flows: dict[int, float] = {}
            for m, f in zip(state.module[nb], lv.edge_flow[a]):
                flows[m] = flows.get(m, 0.0) + f
            f_old = flows.pop(old, 0.0)
            candidates = sorted(flows.items())
            if state.mod_size[old] > 1:
                empty = np.flatnonzero(state.mod_size == 0)
                if len(empty):
                    candidates.append((int(empty[0]), 0.0))
            best, best_info, best_m = -MIN_IMPROVEMENT, None, -1
            for m, f_new in candidates:
                delta, info = state.move_delta(a, old, m, f_old, f_new)
                if delta < best:
                    best, best_info, best_m = delta, info, m
            if best_info is not None:
                state.apply(a, old, best_m, best_info)
                moved = moved_any = True
        if not moved:
            break
    return moved_any


def _compact(module: np.ndarray) -> np.ndarray:
    _, inv = np.unique(module, return_inverse=True)
    return inv.astype(np.int64)


def _core(level: _Level, init: np.ndarray, node_term: float, rng: np.random.Generator) -> np.ndarray:
    """Repeated local moving + aggregation; returns a module per node of ``level``."""
    mapping = np.arange(len(init))  # node of ``level`` -> node of current level
    cur_level, cur_init = level, init
    while True:
        state = _State(cur_level, cur_init)
        _local_moves(state, rng.permutation(len(cur_init)))
        module = _compact(state.module)
        if module.max() + 1 == len(module):
            return _compact(module[mapping])
        mapping = module[mapping]
        cur_level = _aggregate(cur_level, module)
        cur_init = np.arange(module.max() + 1)


def _optimize(level: _Level, node_term: float, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    n = len(level.flow)
    module = _core(level, np.arange(n), node_term, rng)
    best = _State(level, module).codelength(node_term)
    while True:
        # Fine-tune single nodes, then let the resulting modules merge again.
        state = _State(level, module)
        _local_moves(state, rng.permutation(n))
        tuned = _compact(state.module)
        coarse = _core(_aggregate(level, tuned), np.arange(tuned.max() + 1), node_term, rng)
        cand = _compact(coarse[tuned])
        length = _State(level, cand).codelength(node_term)
        if length < best - MIN_IMPROVEMENT:
            module, best = cand, length
        else:
            return module, best


def infomap_partition(weights: np.ndarray, trials: int | None = None, seed: int = 0) -> np.ndarray:
    """Best two-level partition over several deterministic trials.

    Returns labels per node with -1 for nodes without edges.
    """
    w = np.asarray(weights, dtype=np.float64)
    n = len(w)
    labels = np.full(n, -1, dtype=np.int64)
    active = np.flatnonzero(w.sum(axis=1) > 0)
    if len(active) == 0:
        return labels
    level = _level_from_weights(w, active)
    node_term = plogp(level.flow).sum()
    if trials is None:
        trials = 8 if len(active) <= 64 else 2
    rng = np.random.default_rng(seed)
    m = len(active)
    candidates = [np.zeros(m, dtype=np.int64), np.arange(m)]
    for _ in range(trials):
        candidates.append(_optimize(level, node_term, rng)[0])
    scores = [_State(level, c).codelength(node_term) for c in candidates]
    best = int(np.argmin(np.round(scores, 12)))
    labels[active] = _compact(candidates[best])
    return labels
