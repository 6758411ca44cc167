"""Small exact linear-algebra toolkit over ``fractions.Fraction``.

Matrices here are plain lists of lists; the sizes involved (a few dozen
rows) make that faster than object-dtype numpy for elimination loops.
"""

from fractions import Fraction
from math import lcm
import re

from . import kernels

__all__ = [
    "as_rat", "rat_str", "INF", "is_inf", "integerize", "rref", "rank",
    "nullspace", "solve_affine", "inverse", "det", "matmul",
]

INF = float("inf")

_RAT_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def is_inf(v):
    return isinstance(v, float) and v == INF


def as_rat(x):
    """Coerce ints, Fractions, ``"p/q"`` strings, decimal strings or floats.

    Floats convert exactly (binary value), which is rarely what a caller
    wants for user data; parse strings instead when possible.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        m = _RAT_RE.match(x)
        if m:
            return Fraction(int(m.group(1)), int(m.group(2) or 1))
        return Fraction(x.strip())  # decimals, exponents
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return Fraction(int(x.numerator), int(x.denominator))
    if isinstance(x, float):
        if x != x or x in (INF, -INF):
            raise ValueError("non-finite value has no rational form")
        return Fraction(x)
    # numpy integer / float scalars
    try:
        return as_rat(x.item())
    except AttributeError:
        raise TypeError(f"cannot interpret {x!r} as a rational") from None


def rat_str(v):
    """Integer as decimal, otherwise ``p/q``; +inf as ``"inf"``."""
    if is_inf(v):
        return "inf"
    v = as_rat(v)
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def integerize(rows):
    """Scale a rational matrix by the lcm of its denominators."""
    L = 1
    for r in rows:
        for v in r:
            L = lcm(L, Fraction(v).denominator)
    return [[int(Fraction(v) * L) for v in r] for r in rows], L


def det(rows):
    if not rows:
        return Fraction(1)
    ints, L = integerize(rows)
    return Fraction(kernels.int_det(ints), L ** len(rows))


def matmul(A, B):
    Bt = list(zip(*B))
    return [[sum((a * b for a, b in zip(r, col)), Fraction(0)) for col in Bt] for r in A]


def rref(rows, ncols=None):
    """Reduced row echelon form.  Returns (R, pivot_columns)."""
    R = [[Fraction(v) for v in r] for r in rows]
    if ncols is None:
        ncols = len(R[0]) if R else 0
    piv = []
    i = 0
    for j in range(ncols):
        if i >= len(R):
            break
        k = next((k for k in range(i, len(R)) if R[k][j] != 0), None)
        if k is None:
            continue
        R[i], R[k] = R[k], R[i]
        p = R[i][j]
        if p != 1:
            R[i] = [v / p for v in R[i]]
        ri = R[i]
        for k in range(len(R)):
            if k != i and R[k][j] != 0:
                f = R[k][j]
                R[k] = [a - f * b for a, b in zip(R[k], ri)]
        piv.append(j)
        i += 1
    return R[:i], piv


def rank(rows):
    return len(rref(rows)[1])


def nullspace(rows, ncols):
    """Basis of {v : rows @ v = 0} as a list of vectors."""
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    R, piv = rref(rows, ncols)
    free = [j for j in range(ncols) if j not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, p in zip(R, piv):
            v[p] = -r[f]
        basis.append(v)
    return basis


def solve_affine(rows, rhs, ncols):
    """All solutions of rows @ v = rhs: (particular, null basis) or None."""
    if not rows:
        return [Fraction(0)] * ncols, nullspace([], ncols)
    aug = [list(r) + [Fraction(b)] for r, b in zip(rows, rhs)]
    R, piv = rref(aug, ncols + 1)
    if ncols in piv:
        return None
    x = [Fraction(0)] * ncols
    for r, p in zip(R, piv):
        x[p] = r[ncols]
    return x, nullspace([r[:ncols] for r in R], ncols)


def inverse(rows):
    n = len(rows)
    aug = [[Fraction(v) for v in r] + [Fraction(int(i == j)) for j in range(n)]
           for i, r in enumerate(rows)]
    R, piv = rref(aug, n)
    if piv != list(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return [r[n:] for r in R]
