from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from gapforge.lp import diagonal_lp_closed_form, lp_min, solve_diagonal_lp
from gapforge.rational import INF


def test_diagonal_examples():
    assert solve_diagonal_lp([1], 0, 1) == 1
    assert solve_diagonal_lp([-1], 0, 1) == INF
    assert solve_diagonal_lp([2, 1], 0, 10) == 5
    assert solve_diagonal_lp([1], 1, -3) == 0
    assert solve_diagonal_lp([-2, -1], 0, -4) == 2
    assert solve_diagonal_lp([], 0, 0) == 0
    assert solve_diagonal_lp([], 2, 1) == INF


def _scipy_value(b, G, h):
    res = linprog(b, A_eq=G, b_eq=h, bounds=[(0, None)] * len(b), method="highs")
    if res.status == 2:
        return INF
    if res.status == 3:
        return -INF
    return res.fun


lp_data = st.integers(1, 4).flatmap(lambda d: st.tuples(
    st.lists(st.integers(-3, 3), min_size=d, max_size=d),
    st.lists(st.lists(st.integers(-3, 3), min_size=d, max_size=d), min_size=1, max_size=2),
    st.lists(st.integers(-4, 4), min_size=2, max_size=2)))


@settings(max_examples=150, deadline=None)
@given(lp_data)
def test_lp_min_matches_scipy(data):
    b, G, h = data
    h = h[: len(G)]
    got = lp_min(b, G, h).value
    want = _scipy_value(b, G, h)
    if abs(want) == INF:
        assert got == want
    else:
        assert abs(float(got) - want) < 1e-7


sigmas = st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=4), min_size=1, max_size=4)


@settings(max_examples=200, deadline=None)
@given(sigmas, st.integers(0, 2), st.fractions(min_value=-6, max_value=6, max_denominator=3))
def test_closed_form_matches_lp(sigma, s, c):
    assert diagonal_lp_closed_form(sigma, s, c) == solve_diagonal_lp(sigma, s, c)


@settings(max_examples=100, deadline=None)
@given(sigmas, st.integers(0, 2), st.fractions(min_value=-6, max_value=6, max_denominator=3))
def test_diagonal_lp_brute_force(sigma, s, c):
    # vertices of {sum sigma y - sum z = c, y, z >= 0} have one nonzero coordinate
    g = [Fraction(v) for v in sigma] + [Fraction(-1)] * s
    cost = [1] * len(sigma) + [0] * s
    cands = [cost[k] * c / gk for k, gk in enumerate(g) if gk != 0 and c / gk >= 0]
    if c == 0:
        cands.append(Fraction(0))
    want = min(cands) if cands else INF
    assert solve_diagonal_lp(sigma, s, c) == want


def test_lp_unbounded_and_empty():
    assert lp_min([-1, 0], [[1, -1]], [0]).value == -INF
    assert lp_min([1, 1], [], []).value == 0
    assert lp_min([-1], [], []).value == -INF
    assert lp_min([1], [[1], [2]], [1, 3]).value == INF
    with pytest.raises(ValueError):
        lp_min([0] * 19, [[1] * 19], [1])
