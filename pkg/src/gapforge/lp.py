"""Exact small linear programs in standard form.

    min b^T y   s.t.  G y = h,  y >= 0

solved by enumerating basic solutions over ``Fraction``.  The programs
that arise from diagonal reduced duals have a handful of variables, so
enumeration is both exact and fast.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from .rational import INF, as_rat, rref, solve_affine

__all__ = ["lp_min", "LpResult", "solve_diagonal_lp", "diagonal_lp_closed_form"]

MAX_VARS = 18


class LpResult:
    __slots__ = ("value", "y", "status")

    def __init__(self, value, y=None, status="optimal"):
        self.value, self.y, self.status = value, y, status

    def __repr__(self):
        return f"LpResult({self.status}, value={self.value})"


def _basic_solutions(G, h, d):
    """Yield nonnegative basic solutions of G y = h (G has full row rank)."""
    k = len(G)
    for S in combinations(range(d), k):
        sub = [[row[j] for j in S] for row in G]
        sol = solve_affine(sub, h, k)
        if sol is None or sol[1]:
            continue  # inconsistent or singular basis
        ys = sol[0]
        if all(v >= 0 for v in ys):
            y = [Fraction(0)] * d
            for j, v in zip(S, ys):
                y[j] = v
            yield y


def lp_min(b, G, h) -> LpResult:
    b = [as_rat(v) for v in b]
    d = len(b)
    if d > MAX_VARS:
        raise ValueError(f"exact LP limited to {MAX_VARS} variables, got {d}")
    G = [[as_rat(v) for v in r] for r in G]
    h = [as_rat(v) for v in h]
    if not G:
        # only y >= 0: bounded iff b >= 0
        if any(v < 0 for v in b):
            return LpResult(-INF, None, "unbounded")
        return LpResult(Fraction(0), [Fraction(0)] * d)
    R, piv = rref([r + [v] for r, v in zip(G, h)], d + 1)
    if d in piv:
        return LpResult(INF, None, "infeasible")
    Gr = [r[:d] for r in R]
    hr = [r[d] for r in R]
    if not Gr:
        Gr, hr = [], []
    best = None
    for y in _basic_solutions(Gr, hr, d) if Gr else [[Fraction(0)] * d]:
        val = sum((bi * yi for bi, yi in zip(b, y)), Fraction(0))
        if best is None or val < best[0]:
            best = (val, y)
    if best is None:
        return LpResult(INF, None, "infeasible")
    # recession directions: r >= 0, G r = 0, sum r = 1
    Gray = [list(r) for r in Gr] + [[Fraction(1)] * d]
    hray = [Fraction(0)] * len(Gr) + [Fraction(1)]
    R2, piv2 = rref([r + [v] for r, v in zip(Gray, hray)], d + 1)
    if d not in piv2:
        for r in _basic_solutions([row[:d] for row in R2], [row[d] for row in R2], d):
            if sum((bi * ri for bi, ri in zip(b, r)), Fraction(0)) < 0:
                return LpResult(-INF, None, "unbounded")
    return LpResult(best[0], best[1])


def solve_diagonal_lp(sigma, s: int, c2prime):
    """Optimal value of  min sum(y)  s.t.  sum sigma_i y_i - sum_j z_j = c2',  y, z >= 0."""
    sigma = [as_rat(v) for v in sigma]
    c = as_rat(c2prime)
    b = [Fraction(1)] * len(sigma) + [Fraction(0)] * s
    g = sigma + [Fraction(-1)] * s
    if not g:
        return Fraction(0) if c == 0 else INF
    return lp_min(b, [g], [c]).value


def diagonal_lp_closed_form(sigma, s: int, c2prime):
    """Case analysis of the same LP.

    For c2' < 0 with s = 0 the value is |c2'| / max|sigma_i| over the
    negative sigma_i, not 0.
    """
    sigma = [as_rat(v) for v in sigma]
    c = as_rat(c2prime)
    if c == 0:
        return Fraction(0)
    if c > 0:
        top = max(sigma, default=None)
        return c / top if top is not None and top > 0 else INF
    if s > 0:
        return Fraction(0)
    neg = [v for v in sigma if v < 0]
    if not neg:
        return INF
    return c / min(neg)
