"""Pure-Python integer kernels.

These are the reference implementations; ``_ckernels`` mirrors them in
Cython over int64 and raises ``OverflowError`` when a value leaves that
range, at which point callers fall back to this module.
"""


def int_inertia(rows):
    """Inertia of a symmetric integer matrix by fraction-free elimination.

    Pivots are taken from the diagonal only (symmetric permutations), so
    the Bareiss divisions stay exact.  Returns ``(npos, nneg, stalled)``
    where ``stalled`` means the remaining Schur complement had an all-zero
    diagonal but a nonzero off-diagonal entry, i.e. it is indefinite.
    """
    n = len(rows)
    a = [list(r) for r in rows]
    active = list(range(n))
    prev = 1
    npos = nneg = 0
    while active:
        piv = -1
        best = 0
        for k in active:
            v = a[k][k]
            if v != 0 and (piv < 0 or abs(v) < best):
                piv, best = k, abs(v)
        if piv < 0:
            for i in active:
                for j in active:
                    if a[i][j] != 0:
                        return npos, nneg, True
            break
        p = a[piv][piv]
        if (p > 0) == (prev > 0):
            npos += 1
        else:
            nneg += 1
        active.remove(piv)
        rp = a[piv]
        for ii, i in enumerate(active):
            ri = a[i]
            aip = ri[piv]
            for j in active[ii:]:
                v = (p * ri[j] - aip * rp[j]) // prev
                ri[j] = v
                a[j][i] = v
        prev = p
    return npos, nneg, False


def int_det(rows):
    """Determinant of a square integer matrix (Bareiss, row pivoting)."""
    n = len(rows)
    if n == 0:
        return 1
    a = [list(r) for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        p = a[k][k]
        rk = a[k]
        for i in range(k + 1, n):
            ri = a[i]
            aik = ri[k]
            for j in range(k + 1, n):
                ri[j] = (p * ri[j] - aik * rk[j]) // prev
        prev = p
    return sign * a[n - 1][n - 1]
