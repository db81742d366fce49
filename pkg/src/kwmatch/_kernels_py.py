"""Pure-Python kernels; the reference the compiled ``_kernels`` module must match."""

from __future__ import annotations

from collections import Counter
from functools import lru_cache

import numpy as np


def removal_ranks(importance) -> np.ndarray:
    """Position -> removal index. Lowest importance goes first; ties remove the larger position."""
    w = [float(x) for x in importance]
    order = sorted(range(len(w)), key=lambda i: (w[i], -i))
    ranks = np.empty(len(w), dtype=np.int64)
    for r, pos in enumerate(order):
        ranks[pos] = r
    return ranks


@lru_cache(maxsize=4096)
def _pairs(nq: int, nd: int) -> tuple:
    out = []
    for m in range(1, nq + 1):
        sq = nq - m + 1
        if sq > 1:
            hit = 0
            for n in range(1, nd + 1):
                if sq * nd == (nd - n + 1) * nq:
                    hit = n
                    break
            if not hit:
                # ratios fall with n: the last level still above r_m is the closest one
                for n in range(1, nd + 1):
                    if (nd - n + 1) * nq > sq * nd:
                        hit = n
            if hit:
                out.append((m, hit))
        elif sq == 1:
            out.append((m, nd))
    return tuple(out)


def comparable_pairs(nq: int, nd: int) -> np.ndarray:
    """(m, n) level pairs, 1-based, for chains of ``nq`` and ``nd`` levels."""
    pairs = _pairs(int(nq), int(nd))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def lexical_features(q_ids, q_rank, d_ids, d_rank, pairs, idf, avgdl, k1=1.2, b=0.75):
    """BM25 and Jaccard per pair plus the exact-match triples that feed wlm.

    ``*_ids`` are lexical token ids, ``*_rank`` removal ranks; level m keeps
    positions with rank >= m - 1. Returns ``(bm25, jaccard, pair, i, j)``
    where each (pair, i, j) says q position i equals d position j inside
    that pair's two levels.
    """
    n_pairs = len(pairs)
    bm25 = np.zeros(n_pairs)
    jac = np.zeros(n_pairs)
    mp, mi, mj = [], [], []
    for p in range(n_pairs):
        m, n = int(pairs[p][0]), int(pairs[p][1])
        qi = [i for i in range(len(q_ids)) if q_rank[i] >= m - 1]
        dj = [j for j in range(len(d_ids)) if d_rank[j] >= n - 1]
        tf = Counter(int(d_ids[j]) for j in dj)
        norm = k1 * (1.0 - b + b * len(dj) / avgdl)
        s = 0.0
        for i in qi:
            f = tf.get(int(q_ids[i]), 0)
            if f:
                s += idf[q_ids[i]] * f * (k1 + 1.0) / (f + norm)
        bm25[p] = s
        qs = {int(q_ids[i]) for i in qi}
        union = len(qs | tf.keys())
        jac[p] = len(qs & tf.keys()) / union if union else 0.0
        for i in qi:
            for j in dj:
                if q_ids[i] == d_ids[j]:
                    mp.append(p)
                    mi.append(i)
                    mj.append(j)
    return (
        bm25,
        jac,
        np.array(mp, dtype=np.int64),
        np.array(mi, dtype=np.int64),
        np.array(mj, dtype=np.int64),
    )
