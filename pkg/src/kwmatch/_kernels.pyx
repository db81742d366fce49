# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the functions in ``_kernels_py``; same signatures, same results."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


def removal_ranks(importance):
    cdef double[::1] w = np.ascontiguousarray(importance, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0]
    cdef i64[::1] order = np.arange(n, dtype=np.int64)
    cdef Py_ssize_t a, c
    cdef i64 key
    # insertion sort on (w, -position); n is a question length
    for a in range(1, n):
        key = order[a]
        c = a - 1
        while c >= 0 and (w[order[c]] > w[key] or (w[order[c]] == w[key] and order[c] < key)):
            order[c + 1] = order[c]
            c -= 1
        order[c + 1] = key
    ranks = np.empty(n, dtype=np.int64)
    cdef i64[::1] r = ranks
    for a in range(n):
        r[order[a]] = a
    return ranks


def comparable_pairs(nq, nd):
    cdef i64 q = nq, d = nd, m, n, sq, hit
    out = np.empty((q, 2), dtype=np.int64)
    cdef i64[:, ::1] o = out
    cdef Py_ssize_t k = 0
    for m in range(1, q + 1):
        sq = q - m + 1
        hit = 0
        if sq > 1:
            for n in range(1, d + 1):
                if sq * d == (d - n + 1) * q:
                    hit = n
                    break
            if hit == 0:
                for n in range(1, d + 1):
                    if (d - n + 1) * q > sq * d:
                        hit = n
        elif sq == 1:
            hit = d
        if hit:
            o[k, 0] = m
            o[k, 1] = hit
            k += 1
    return out[:k]


def lexical_features(q_ids_, q_rank_, d_ids_, d_rank_, pairs_, idf_, double avgdl,
                     double k1=1.2, double b=0.75):
    cdef i64[::1] q_ids = np.ascontiguousarray(q_ids_, dtype=np.int64)
    cdef i64[::1] q_rank = np.ascontiguousarray(q_rank_, dtype=np.int64)
    cdef i64[::1] d_ids = np.ascontiguousarray(d_ids_, dtype=np.int64)
    cdef i64[::1] d_rank = np.ascontiguousarray(d_rank_, dtype=np.int64)
    cdef i64[:, ::1] pairs = np.ascontiguousarray(np.asarray(pairs_, dtype=np.int64).reshape(-1, 2))
    cdef double[::1] idf = np.ascontiguousarray(idf_, dtype=np.float64)
    cdef Py_ssize_t nq = q_ids.shape[0], nd = d_ids.shape[0], P = pairs.shape[0]
    bm25_arr = np.zeros(P)
    jac_arr = np.zeros(P)
    cdef double[::1] bm25 = bm25_arr
    cdef double[::1] jac = jac_arr
    cap = P * nq * nd
    mp_arr = np.empty(cap, dtype=np.int64)
    mi_arr = np.empty(cap, dtype=np.int64)
    mj_arr = np.empty(cap, dtype=np.int64)
    cdef i64[::1] mp = mp_arr
    cdef i64[::1] mi = mi_arr
    cdef i64[::1] mj = mj_arr
    cdef Py_ssize_t p, i, j, k, cnt = 0
    cdef i64 m, n, tok
    cdef double s, norm, f, dl
    cdef Py_ssize_t uq, ud, inter
    cdef bint dup, found
    for p in range(P):
        m = pairs[p, 0]
        n = pairs[p, 1]
        dl = 0
        for j in range(nd):
            if d_rank[j] >= n - 1:
                dl += 1
        norm = k1 * (1.0 - b + b * dl / avgdl)
        s = 0.0
        for i in range(nq):
            if q_rank[i] < m - 1:
                continue
            tok = q_ids[i]
            f = 0
            for j in range(nd):
                if d_rank[j] >= n - 1 and d_ids[j] == tok:
                    f += 1
                    mp[cnt] = p
                    mi[cnt] = i
                    mj[cnt] = j
                    cnt += 1
            if f > 0:
                s += idf[tok] * f * (k1 + 1.0) / (f + norm)
        bm25[p] = s
        # distinct counts for Jaccard
        uq = 0
        inter = 0
        for i in range(nq):
            if q_rank[i] < m - 1:
                continue
            dup = False
            for k in range(i):
                if q_rank[k] >= m - 1 and q_ids[k] == q_ids[i]:
                    dup = True
                    break
            if dup:
                continue
            uq += 1
            found = False
            for j in range(nd):
                if d_rank[j] >= n - 1 and d_ids[j] == q_ids[i]:
                    found = True
                    break
            if found:
                inter += 1
        ud = 0
        for j in range(nd):
            if d_rank[j] < n - 1:
                continue
            dup = False
            for k in range(j):
                if d_rank[k] >= n - 1 and d_ids[k] == d_ids[j]:
                    dup = True
                    break
            if not dup:
                ud += 1
        if uq + ud - inter > 0:
            jac[p] = <double>inter / (uq + ud - inter)
    return bm25_arr, jac_arr, mp_arr[:cnt].copy(), mi_arr[:cnt].copy(), mj_arr[:cnt].copy()
