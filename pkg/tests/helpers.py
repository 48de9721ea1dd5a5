import numpy as np

from dcct.encoder import EncoderParams


def unit_rows(x):
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def random_params(rng, d_in=5, d_hidden=7, d_out=4):
    p = EncoderParams.init(d_in, d_hidden, d_out, rng)
    p.b1 = 0.1 * rng.standard_normal(d_hidden)
    p.b2 = 0.1 * rng.standard_normal(d_out)
    return p


def same_partition(a, b):
    """Equality of labelings up to renaming; -1 must match exactly."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape or not np.array_equal(a < 0, b < 0):
        return False
    fwd, bwd = {}, {}
    for x, y in zip(a[a >= 0], b[b >= 0]):
        if fwd.setdefault(x, y) != y or bwd.setdefault(y, x) != x:
            return False
    return True


def dbscan_oracle(dist, eps, min_pts):
    """Reachability by transitive closure of the core graph.

    A border point joins the cluster (among its core neighbors' clusters) whose
    smallest core index is lowest, which is the cluster discovered first by an
    ascending-index scan.
    """
    n = len(dist)
    near = [[dist[i][j] <= eps for j in range(n)] for i in range(n)]
    core = [sum(near[i]) >= min_pts for i in range(n)]
    reach = [[core[i] and core[j] and near[i][j] for j in range(n)] for i in range(n)]
    for i in range(n):
        reach[i][i] = core[i]
    for m in range(n):
        for i in range(n):
            if reach[i][m]:
                for j in range(n):
                    if reach[m][j]:
                        reach[i][j] = True
    comp_min = [min(j for j in range(n) if reach[i][j]) if core[i] else None for i in range(n)]
    labels = []
    for i in range(n):
        if core[i]:
            labels.append(comp_min[i])
        else:
            owners = [comp_min[j] for j in range(n) if core[j] and near[i][j]]
            labels.append(min(owners) if owners else -1)
    return np.array(labels)


def dbi_oracle(x, labels):
    x = [np.atleast_1d(np.asarray(v, float)) for v in x]
    groups = {}
    for v, lab in zip(x, labels):
        if lab >= 0:
            groups.setdefault(lab, []).append(v)
    keys = sorted(groups)
    cents = {k: sum(groups[k]) / len(groups[k]) for k in keys}
    scat = {k: sum(float(np.sqrt(((v - cents[k]) ** 2).sum())) for v in groups[k]) / len(groups[k]) for k in keys}
    total = 0.0
    for a in keys:
        worst = max(
            (scat[a] + scat[b]) / float(np.sqrt(((cents[a] - cents[b]) ** 2).sum())) for b in keys if b != a
        )
        total += worst
    return total / len(keys)


def set_partitions(n):
    """All restricted growth strings of length n."""
    a = [0] * n

    def rec(i, m):
        if i == n:
            yield list(a)
            return
        for v in range(m + 1):
            a[i] = v
            yield from rec(i + 1, m + 1 if v == m else m)

    if n:
        yield from rec(0, 0)


def map_equation(w, labels):
    """Two-level codelength from per-module exit and total flows."""
    w = np.asarray(w, float)
    strength = w.sum(axis=1)
    two_w = strength.sum()
    p = strength / two_w
    active = strength > 0
    labels = np.asarray(labels)
    mods = np.unique(labels[active])
    onehot = (labels[:, None] == mods[None]) & active[:, None]
    module_flow = onehot.T @ p
    internal = np.einsum("im,ij,jm->m", onehot, w, onehot) / two_w
    exits = module_flow - internal

    def plogp(v):
        v = np.asarray(v, float)
        return np.where(v > 0, v * np.log2(np.where(v > 0, v, 1.0)), 0.0).sum()

    return float(plogp(exits.sum()) - 2 * plogp(exits) - plogp(p) + plogp(exits + module_flow))


def infomap_oracle(w):
    """Exhaustive minimum over partitions of the non-isolated nodes."""
    w = np.asarray(w, float)
    active = [i for i in range(len(w)) if w[i].sum() > 0]
    best, best_labels = None, None
    for part in set_partitions(len(active)):
        labels = [-1] * len(w)
        for i, m in zip(active, part):
            labels[i] = m
        length = map_equation(w, labels)
        if best is None or length < best - 1e-12:
            best, best_labels = length, labels
    return best, np.array(best_labels)
