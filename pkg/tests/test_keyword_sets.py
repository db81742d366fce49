from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kwmatch.errors import EmptyQuestion
from kwmatch.keyword_sets import (
    ComparablePair,
    build_levels,
    comparable_pairs,
    exact_ratios,
    pair_weight,
    ratios,
)
from kwmatch.text import segment

from support import D1_IMPORTANCE, Q, Q_IMPORTANCE

importances = st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=15)


def oracle_pairs(nq: int, nd: int):
    """Direct reading of the four pattern rules with rational ratios."""
    rq = [Fraction(nq - m + 1, nq) for m in range(1, nq + 1)]
    rd = [Fraction(nd - n + 1, nd) for n in range(1, nd + 1)]
    out = []
    for m, r in enumerate(rq, start=1):
        size = nq - m + 1
        exact = [n for n, s in enumerate(rd, start=1) if s == r]
        above = [(s, n) for n, s in enumerate(rd, start=1) if s > r]
        if size > 1 and exact:
            out.append((m, exact[0]))
        elif size > 1 and above:
            out.append((m, min(above)[1]))
        elif size == 1:
            out.append((m, nd))
    return out


def test_worked_example_removal_order():
    lv = build_levels(Q_IMPORTANCE)
    words = segment(Q)
    assert [words[p] for p in lv.removal_order] == ["the", "to", "how", "mobile", "keep", "cool"]
    assert [words[p] for p in lv.levels[-1]] == ["phone"]
    assert len(lv) == 7


def test_single_keyword():
    lv = build_levels([0.4])
    assert lv.levels == ((0,),)


def test_tie_removes_larger_position():
    lv = build_levels([0.5, 0.5])
    assert lv.levels[1] == (0,)


def test_empty_input():
    with pytest.raises(EmptyQuestion):
        build_levels([])


@given(importances)
def test_chain_nesting_and_removal_optimality(w):
    lv = build_levels(w)
    n = len(w)
    assert len(lv.levels) == n and len(lv.levels[0]) == n and len(lv.levels[-1]) == 1
    for a, b in zip(lv.levels, lv.levels[1:]):
        sa, sb = set(a), set(b)
        assert sb < sa and len(sa - sb) == 1
        removed = (sa - sb).pop()
        assert all(w[removed] <= w[p] for p in sb)


def test_ratios_worked_example():
    r = ratios(build_levels(Q_IMPORTANCE))
    assert r[0] == 1.0
    assert round(r[1], 3) == 0.857
    assert round(r[2], 3) == 0.714
    assert exact_ratios(build_levels(Q_IMPORTANCE))[1] == Fraction(6, 7)


def _pairs(nq, nd):
    return [(p.q_level, p.d_level) for p in comparable_pairs(build_levels([0.5] * nq), build_levels([0.5] * nd))]


def test_pairs_worked_example():
    assert _pairs(7, 5) == [(1, 1), (2, 1), (3, 2), (4, 3), (5, 3), (6, 4), (7, 5)]


def test_pairs_single_keyword_each():
    assert _pairs(1, 1) == [(1, 1)]


def test_pairs_equal_lengths():
    assert _pairs(4, 4) == [(1, 1), (2, 2), (3, 3), (4, 4)]


@given(st.integers(1, 40), st.integers(1, 40))
def test_pairs_match_rule_oracle(nq, nd):
    got = _pairs(nq, nd)
    assert got == oracle_pairs(nq, nd)
    assert len(got) == nq
    assert [n for _, n in got] == sorted(n for _, n in got)


def test_level_limit():
    lq, ld = build_levels([0.5] * 7), build_levels([0.5] * 5)
    assert [(p.q_level, p.d_level) for p in comparable_pairs(lq, ld, limit=2)] == [(1, 1), (2, 1)]


def test_pair_weight_worked_example():
    lq, ld = build_levels(Q_IMPORTANCE), build_levels(D1_IMPORTANCE)
    assert sum(Q_IMPORTANCE) == pytest.approx(3.0) and sum(D1_IMPORTANCE) == pytest.approx(2.1)
    w = pair_weight(ComparablePair(1, 1), lq, Q_IMPORTANCE, ld, D1_IMPORTANCE)
    assert w == pytest.approx((3.0 / 7) * (2.1 / 5))
    assert w == pytest.approx(0.18)
    single = pair_weight(ComparablePair(7, 5), lq, Q_IMPORTANCE, ld, D1_IMPORTANCE)
    assert single == pytest.approx((0.85 / 7) * (0.85 / 5))
    assert single == pytest.approx(0.02064, abs=1e-5)


def test_pair_weight_all_ones():
    lq, ld = build_levels([1.0] * 4), build_levels([1.0] * 3)
    assert pair_weight(ComparablePair(1, 1), lq, [1.0] * 4, ld, [1.0] * 3) == 1.0


@given(importances, importances)
def test_weights_in_unit_interval(wq, wd):
    lq, ld = build_levels(wq), build_levels(wd)
    for p in comparable_pairs(lq, ld):
        assert 0.0 <= pair_weight(p, lq, wq, ld, wd) <= 1.0


def test_levels_from_ranks_consistent_with_numpy_sort():
    rng = np.random.default_rng(3)
    for _ in range(200):
        w = rng.integers(0, 4, size=int(rng.integers(1, 10))).astype(float)
        lv = build_levels(w)
        order = sorted(range(len(w)), key=lambda i: (w[i], -i))
        assert list(lv.removal_order) == order[:-1]
