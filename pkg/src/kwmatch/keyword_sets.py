"""Multi-level keyword sets and comparable level pairs.

A question with n keywords gets n nested levels: level 1 holds every
keyword and each next level drops the current least important one. Two
chains are matched level by level on their coverage ratio |KS_m| / |KS_1|.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .errors import EmptyQuestion


@dataclass(frozen=True)
class KeywordSetLevels:
    """Nested keyword sets for one question.

    ``levels[m - 1]`` lists the positions kept at level m (ascending).
    ``ranks[pos]`` is the removal index of a position; the survivor of the
    last level has rank n - 1.
    """

    levels: tuple[tuple[int, ...], ...]
    ranks: tuple[int, ...]
    length: int

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(len(s) / self.length for s in self.levels)

    @property
    def removal_order(self) -> tuple[int, ...]:
        order = sorted(range(self.length), key=lambda p: self.ranks[p])
        return tuple(order[:-1])

    def __len__(self):
        return len(self.levels)


@dataclass(frozen=True)
class ComparablePair:
    q_level: int
    d_level: int
    weight: float = 0.0


def _importances(scored) -> list[float]:
    return [float(getattr(s, "importance", s)) for s in scored]


def build_levels(scored: Sequence) -> KeywordSetLevels:
    """Chain from ScoredKeyword items (or bare importance values) in question order."""
    w = _importances(scored)
    if not w:
        raise EmptyQuestion("cannot build keyword sets for an empty question")
    ranks = kernels.removal_ranks(np.asarray(w, dtype=np.float64))
    n = len(w)
    levels = tuple(tuple(int(p) for p in np.flatnonzero(ranks >= m)) for m in range(n))
    return KeywordSetLevels(levels, tuple(int(r) for r in ranks), n)


def ratios(levels: KeywordSetLevels) -> list[float]:
    return list(levels.ratios)


def exact_ratios(levels: KeywordSetLevels) -> list[Fraction]:
    return [Fraction(len(s), levels.length) for s in levels.levels]


def comparable_pairs(q_levels: KeywordSetLevels, d_levels: KeywordSetLevels, limit: int | None = None
                     ) -> list[ComparablePair]:
    """Pattern-rule pairing; ``limit`` keeps only the first pairs in level order."""
    arr = kernels.comparable_pairs(len(q_levels), len(d_levels))
    if limit:
        arr = arr[:limit]
    return [ComparablePair(int(m), int(n)) for m, n in arr]


def pair_weight(pair: ComparablePair, q_levels: KeywordSetLevels, q_importance: Sequence,
                d_levels: KeywordSetLevels, d_importance: Sequence) -> float:
    """Normalized importance mass of both levels, multiplied."""
    wq = _importances(q_importance)
    wd = _importances(d_importance)
    sq = sum(wq[p] for p in q_levels.levels[pair.q_level - 1])
    sd = sum(wd[p] for p in d_levels.levels[pair.d_level - 1])
    return (sq / q_levels.length) * (sd / d_levels.length)
