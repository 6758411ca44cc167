from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from gapforge.generators import gen_example51, gen_single, gen_small
from gapforge.symkernel import (PsdKind, SymMat, Tolerances, congruence, eig_sym, inner, psd_status,
                                rank_psd, schur_complement)
from gapforge.symkernel import NotSymmetricError, SingularTransformError


def int_sym(n, lo=-3, hi=3):
    return st.lists(st.integers(lo, hi), min_size=n * n, max_size=n * n).map(
        lambda v: np.triu(np.array(v).reshape(n, n)) + np.triu(np.array(v).reshape(n, n), 1).T)


def sympy_class(M):
    """Definiteness class from the exact characteristic polynomial.

    All roots are real, so Descartes' sign rule counts them exactly.
    """
    x = sympy.Symbol("x")
    coeffs = sympy.Matrix(M.tolist()).charpoly(x).all_coeffs()

    def changes(cs):
        s = [c for c in cs if c != 0]
        return sum(1 for a, b in zip(s, s[1:]) if a * b < 0)

    npos = changes(coeffs)
    deg = len(coeffs) - 1
    nneg = changes([c * (-1) ** (deg - i) for i, c in enumerate(coeffs)])
    signs = set()
    if npos:
        signs.add(1)
    if nneg:
        signs.add(-1)
    if npos + nneg < deg:
        signs.add(0)
    if signs == {0}:
        return PsdKind.ZERO
    if -1 in signs and 1 in signs:
        return PsdKind.INDEFINITE
    if -1 in signs:
        return PsdKind.NEGATIVE_SEMIDEFINITE
    return PsdKind.POSITIVE_DEFINITE if 0 not in signs else PsdKind.PSD_RANK_DEFICIENT


def test_inner_examples():
    E11 = SymMat.unit(3, 0)
    assert inner(E11, SymMat.identity(3)) == 1
    assert inner(SymMat([[0, 1], [1, 0]]), SymMat([[0, 2], [2, 0]])) == 4
    inst = gen_example51()
    Y = SymMat(inst.meta["dual_point"])
    assert inner(inst.A[0], Y) == 13


def test_symmetry_enforced():
    with pytest.raises(NotSymmetricError):
        SymMat([[0, 1], [2, 0]])


@settings(max_examples=50, deadline=None)
@given(int_sym(3), int_sym(3), int_sym(3), st.integers(-4, 4), st.integers(-4, 4))
def test_inner_bilinear_symmetric(a, b, c, al, be):
    A, B, C = SymMat(a), SymMat(b), SymMat(c)
    assert inner(A, B) == inner(B, A)
    assert inner(A * al + C * be, B) == al * inner(A, B) + be * inner(C, B)


def test_congruence_identity_and_singular():
    M = gen_small().A[1]
    assert congruence(M, np.eye(3, dtype=int).tolist()) == M
    with pytest.raises(SingularTransformError):
        congruence(M, [[1, 1, 0], [1, 1, 0], [0, 0, 1]])


def test_congruence_unimodular_round_trip():
    rng = np.random.default_rng(5)
    M = SymMat([[2, 1, 0], [1, 0, -1], [0, -1, 3]])
    for _ in range(10):
        T = np.eye(3, dtype=int)
        for _ in range(6):
            i, j = rng.choice(3, 2, replace=False)
            T[i] += int(rng.integers(-2, 3)) * T[j]
        Ti = sympy.Matrix(T.tolist()).inv()
        Tinv = [[Fraction(int(v.p), int(v.q)) for v in Ti.row(r)] for r in range(3)]
        assert congruence(congruence(M, T.tolist()), Tinv) == M


def _invertible(n, rng):
    while True:
        T = rng.integers(-2, 3, (n, n))
        if round(np.linalg.det(T)) != 0:
            return T


@pytest.mark.parametrize("n", range(2, 7))
def test_congruence_preserves_inertia_class(n):
    rng = np.random.default_rng(n)
    for _ in range(100):
        M = rng.integers(-2, 3, (n, n))
        M = SymMat(np.triu(M) + np.triu(M, 1).T)
        T = _invertible(n, rng)
        a, b = psd_status(M), psd_status(congruence(M, T.tolist()))
        assert a.kind == b.kind and a.rank == b.rank


def test_schur_examples():
    assert schur_complement(SymMat.identity(4), 2) == SymMat.identity(2)
    assert schur_complement(SymMat([[2, 1], [1, 1]]), 1) == SymMat([[1]])
    with pytest.raises(ValueError):
        schur_complement(SymMat([[1, 0], [0, 0]]), 1)


@settings(max_examples=60, deadline=None)
@given(int_sym(4), st.integers(1, 3))
def test_schur_consistency(g, k):
    G = SymMat(g)
    G22 = G.submatrix(range(4 - k, 4))
    if psd_status(G22).kind is not PsdKind.POSITIVE_DEFINITE:
        return
    S = schur_complement(G, k)
    assert psd_status(G).is_psd == psd_status(S).is_psd
    assert (psd_status(G).kind is PsdKind.POSITIVE_DEFINITE) == (psd_status(S).kind is PsdKind.POSITIVE_DEFINITE)


def test_schur_pd_along_ray():
    # upper block of B - x1 A1 - x2 A2 becomes pd for x1 very negative on a no-gap instance
    A1 = SymMat([[1, 0, 0], [0, 0, 0], [0, 0, 0]])
    A2 = SymMat([[0, 0, 1], [0, 1, 0], [1, 0, 1]])
    B = SymMat([[1, 0, 0], [0, 1, 0], [0, 0, 2]])
    for x1 in (-10, -100, -1000):
        Z = B - A1 * x1 - A2 * Fraction(1, 2)
        assert psd_status(Z).kind is PsdKind.POSITIVE_DEFINITE
        assert np.linalg.eigvalsh(Z.to_float().a)[0] > 0


def test_psd_status_examples():
    assert psd_status(SymMat.identity(3)).kind is PsdKind.POSITIVE_DEFINITE
    st_ = psd_status(SymMat.diag([1, 1, 0]))
    assert st_.kind is PsdKind.PSD_RANK_DEFICIENT and st_.rank == 2
    A2 = gen_small().A[1]
    assert psd_status(A2).kind is PsdKind.INDEFINITE
    # oracle: the 3x3 eigenvalues are 1 and +-1
    assert sorted(np.linalg.eigvalsh(A2.to_float().a).round(12)) == [-1, 1, 1]
    assert psd_status(SymMat.zeros(3)).kind is PsdKind.ZERO
    assert psd_status(SymMat.diag([-1, 0])).kind is PsdKind.NEGATIVE_SEMIDEFINITE


@settings(max_examples=80, deadline=None)
@given(int_sym(4, -2, 2))
def test_psd_status_matches_sympy(m):
    M = SymMat(m)
    assert psd_status(M).kind is sympy_class(m)


@settings(max_examples=80, deadline=None)
@given(int_sym(4, -3, 3))
def test_exact_float_agree(m):
    lam = np.linalg.eigvalsh(m.astype(float))
    if np.any((np.abs(lam) > 0) & (np.abs(lam) < 10 * Tolerances().psd)):
        return
    assert psd_status(SymMat(m)).kind is psd_status(SymMat(m).to_float()).kind


def test_eig_sym_examples():
    Q, lam = eig_sym(SymMat.identity(2).to_float())
    assert np.allclose(lam, [1, 1])
    _, lam = eig_sym(SymMat([[0, 1], [1, 0]]).to_float())
    assert np.allclose(lam, [1, -1])
    rng = np.random.default_rng(0)
    R, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    M = SymMat(R @ np.diag([3.0, 1.0]) @ R.T, exact=False)
    Q, lam = eig_sym(M)
    assert np.allclose(lam, [3, 1], atol=1e-10)
    assert np.linalg.norm(M.a @ Q - Q * lam) <= 1e-10


def test_rank_psd():
    assert rank_psd(SymMat.diag([1, 1, 0])) == 2
    assert rank_psd(SymMat.zeros(3)) == 0
    assert rank_psd(gen_single(5, 10, False).B) == 5
    assert rank_psd(SymMat.diag([1.0, 1.0, 0.0], exact=False)) == 2
    with pytest.raises(ValueError):
        rank_psd(gen_small().A[1])


def test_tolerance_parse():
    t = Tolerances.parse("psd=1e-6, zero=1e-5")
    assert t.psd == 1e-6 and t.zero == 1e-5 and t.rank == Tolerances().rank
    with pytest.raises(ValueError):
        Tolerances.parse("bogus=1")
