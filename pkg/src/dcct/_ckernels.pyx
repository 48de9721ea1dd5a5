# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


cdef Py_ssize_t _reciprocal(const i64[:, :] rank, i64 i, Py_ssize_t k, i64[:] out) noexcept nogil:
    cdef Py_ssize_t t, s, cnt = 0
    cdef i64 j
    for t in range(k + 1):
        j = rank[i, t]
        for s in range(k + 1):
            if rank[j, s] == i:
                out[cnt] = j
                cnt += 1
                break
    return cnt


def k_reciprocal_expanded(rank, Py_ssize_t k1, Py_ssize_t k_half):
    cdef const i64[:, :] r = np.ascontiguousarray(rank, dtype=np.int64)
    cdef Py_ssize_t n = r.shape[0]
    cdef i64[:] base = np.empty(k1 + 1, dtype=np.int64)
    cdef i64[:] cand = np.empty(k_half + 1, dtype=np.int64)
    cdef i64[:] mark = np.full(n, -1, dtype=np.int64)
    cdef cnp.uint8_t[:] member = np.zeros(n, dtype=np.uint8)
    cdef i64[:] picked = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t i, a, b, nb, nc, common, npick
    rows = []
    for i in range(n):
        nb = _reciprocal(r, i, k1, base)
        npick = 0
        for a in range(nb):
            mark[base[a]] = i
            if not member[base[a]]:
                member[base[a]] = 1
                picked[npick] = base[a]
                npick += 1
        for a in range(nb):
            nc = _reciprocal(r, base[a], k_half, cand)
            common = 0
            for b in range(nc):
                if mark[cand[b]] == i:
                    common += 1
            if 3 * common > 2 * nc:
                for b in range(nc):
                    if not member[cand[b]]:
                        member[cand[b]] = 1
                        picked[npick] = cand[b]
                        npick += 1
        row = np.sort(np.asarray(picked[:npick]).copy())
        for a in range(npick):
            member[picked[a]] = 0
        rows.append(row)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(x) for x in rows])
    indices = np.concatenate(rows).astype(np.int64) if rows else np.zeros(0, dtype=np.int64)
    return indptr, indices


def jaccard_sparse(indptr, indices, data, Py_ssize_t n):
    cdef const i64[:] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const i64[:] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const double[:] dv = np.ascontiguousarray(data, dtype=np.float64)
    cdef Py_ssize_t nnz = ix.shape[0]
    # Column-major copy for the inverted index.
    cdef i64[:] cp = np.zeros(n + 1, dtype=np.int64)
    cdef i64[:] crow = np.empty(nnz, dtype=np.int64)
    cdef double[:] cval = np.empty(nnz, dtype=np.float64)
    cdef i64[:] fill = np.zeros(n, dtype=np.int64)
    cdef double[:] rowsum = np.zeros(n, dtype=np.float64)
    cdef double[:] acc = np.zeros(n, dtype=np.float64)
    cdef i64[:] touched = np.empty(n, dtype=np.int64)
    cdef cnp.uint8_t[:] seen = np.zeros(n, dtype=np.uint8)
    out_arr = np.ones((n, n), dtype=np.float64)
    cdef double[:, :] out = out_arr
    cdef Py_ssize_t i, p, q, c, j, t, nt, pos
    cdef double v, w, smin
    with nogil:
        for p in range(nnz):
            cp[ix[p] + 1] += 1
        for c in range(n):
            cp[c + 1] += cp[c]
        for i in range(n):
            for p in range(ip[i], ip[i + 1]):
                c = ix[p]
                pos = cp[c] + fill[c]
                crow[pos] = i
                cval[pos] = dv[p]
                fill[c] += 1
                rowsum[i] += dv[p]
        for i in range(n):
            nt = 0
            for p in range(ip[i], ip[i + 1]):
                c = ix[p]
                v = dv[p]
                for q in range(cp[c], cp[c + 1]):
                    j = crow[q]
                    if j < i:
                        continue
                    w = cval[q]
                    if not seen[j]:
                        seen[j] = 1
                        touched[nt] = j
                        nt += 1
                    acc[j] += v if v < w else w
            for t in range(nt):
                j = touched[t]
                smin = acc[j]
                if smin > 0:
                    out[i, j] = 1.0 - smin / (rowsum[i] + rowsum[j] - smin)
                    out[j, i] = out[i, j]
                acc[j] = 0.0
                seen[j] = 0
        for i in range(n):
            out[i, i] = 0.0
    return out_arr


def dbscan_expand(indptr, indices, is_core):
    cdef const i64[:] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const i64[:] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const cnp.uint8_t[:] core = np.ascontiguousarray(is_core, dtype=np.uint8)
    cdef Py_ssize_t n = core.shape[0]
    labels_arr = np.full(n, -1, dtype=np.int64)
    cdef i64[:] labels = labels_arr
    cdef i64[:] queue = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t seed, head, tail, p, t, q
    cdef i64 cluster = 0
    with nogil:
        for seed in range(n):
            if labels[seed] != -1 or not core[seed]:
                continue
            labels[seed] = cluster
            head = 0
            tail = 0
            queue[tail] = seed
            tail += 1
            while head < tail:
                p = queue[head]
                head += 1
                for t in range(ip[p], ip[p + 1]):
                    q = ix[t]
                    if labels[q] == -1:
                        labels[q] = cluster
                        if core[q]:
                            queue[tail] = q
                            tail += 1
            cluster += 1
    return labels_arr
