from fractions import Fraction

import numpy as np
import pytest

from gapforge.canonical2 import (AmbiguousBoundary, CanonicalForm, Inconclusive, NoGapVerdict, WitnessNotFound,
                                 attainment_report, canonicalize, exists_gap_inducing_c, gs_witness, lemma_rotate,
                                 normalize_b, recognize_pref)
from gapforge.facial import certify_gap
from gapforge.generators import gen_double, gen_single, gen_small, mess
from gapforge.rational import INF, is_inf
from gapforge.sdpmodel import AddToB, SdpInstance, apply_reform, apply_reforms
from gapforge.symkernel import SymMat, Tolerances, psd_status


def test_small_exact_form():
    form = canonicalize(gen_small(1))
    assert isinstance(form, CanonicalForm) and form.backend == "exact"
    assert (form.p, form.r, form.s) == (1, 2, 0)
    assert form.Lambda == [1] and form.Sigma == [1] and form.c2prime == 1
    assert np.asarray(form.M, dtype=float).tolist() == [[1.0]]
    assert recognize_pref(form).values() == (0, 1)


def test_normalize_b():
    inst, ops, info = normalize_b(gen_small(1))
    assert info["r"] == 2 and inst.B == gen_small(1).B
    messy, _ = mess(gen_small(1), 4)
    inst, ops, info = normalize_b(messy)
    assert info["r"] == 2
    B = inst.B.to_float().a
    assert np.abs(B - np.diag([1, 1, 0])).max() < 1e-9


def test_b_definite_rejected():
    inst = SdpInstance((SymMat.diag([1, 0]), SymMat([[0, 1], [1, 0]])), SymMat.identity(2), (0, 1))
    v = canonicalize(inst)
    assert isinstance(v, NoGapVerdict) and v.reason == "PrimalStrictlyFeasible"


@pytest.mark.parametrize("seed", range(6))
def test_messy_small(seed):
    inst, _ = mess(gen_small(10), seed, 8, 2)
    form = canonicalize(inst)
    assert isinstance(form, CanonicalForm)
    cert = recognize_pref(form)
    assert abs(float(cert.dual_value) - 10) <= 1e-6 and abs(float(cert.primal_value)) <= 1e-6
    assert form.max_residual() <= 1e-7


def _dist(X, Y):
    return float(np.abs(np.asarray(X.to_float().a) - np.asarray(Y.to_float().a)).max())


@pytest.mark.parametrize("seed", range(4))
def test_transform_soundness_and_b_preservation(seed):
    inst, _ = mess(gen_small(10), seed, 8, 2)
    form = canonicalize(inst)
    replay = apply_reforms(inst.to_float(), form.transform_log)
    can = form.instance
    assert max(_dist(a, b) for a, b in zip(replay.A, can.A)) <= 1e-7
    assert _dist(replay.B, can.B) <= 1e-7
    r = form.r
    assert _dist(can.B, SymMat.diag([1.0] * r + [0.0] * (can.n - r), exact=False)) <= 1e-7


def test_gs_witness_small():
    w = gs_witness(gen_small(1))
    assert w.coeffs == (1.0, 0.0)
    assert np.allclose(w.matrix.a, np.diag([1, 0, 0]))


def test_gs_witness_homogeneous_pencil():
    A1 = SymMat.diag([1, -1, 0])
    A2 = SymMat.diag([0, 1, 0])
    inst = SdpInstance((A1, A2), SymMat.diag([1, 1, 0]), (0, 0))
    w = gs_witness(inst, homogeneous=True)
    l1, l2 = w.coeffs
    # psd pencil elements are exactly l2 >= l1 >= 0; A1 + A2 is one of them
    assert l2 >= l1 - 1e-12 and l1 >= -1e-12
    assert w.min_eig >= -1e-12 and abs(np.linalg.norm(w.matrix.a) - 1) < 1e-12
    W = l1 * A1.to_float().a + l2 * A2.to_float().a
    assert np.allclose(W / np.linalg.norm(W), w.matrix.a)
    assert psd_status(A1 + A2).is_psd and A1 + A2 == SymMat.diag([1, 0, 0])


def test_gs_witness_strictly_feasible_toy():
    A1 = SymMat([[0, 1], [1, 0]])
    A2 = SymMat.identity(2)
    inst = SdpInstance((A1, A2), SymMat.diag([1, 0]), (0, 2))
    with pytest.raises(WitnessNotFound):
        gs_witness(inst)


@pytest.mark.parametrize("inst", [gen_small(1), mess(gen_small(3), 1)[0], gen_single(2, 10)])
def test_witness_validity(inst):
    tol = Tolerances()
    ninst, _, _ = normalize_b(inst)
    w = gs_witness(ninst)
    assert w.min_eig >= -tol.psd
    assert abs(np.linalg.norm(w.matrix.a) - 1) < 1e-9
    assert w.y0_residual <= tol.zero


def test_ambiguity_margin_is_reported():
    # a pencil whose best element has min eigenvalue -1e-7: neither clear nor far
    e = 1e-7
    A1 = SymMat(np.diag([1.0, -e * np.sqrt(2), 0.0]), exact=False)
    A2 = SymMat(np.diag([0.0, 0.0, 1.0]), exact=False)
    inst = SdpInstance((A1, A2), SymMat(np.diag([1.0, 1.0, 0.0]), exact=False), (0.0, 1.0))
    with pytest.raises(AmbiguousBoundary):
        gs_witness(inst)


def _check_rotation(G, r1, r2, T, info):
    F = T.T @ G @ T
    s = info["s"]
    n = r1 + r2
    want = np.zeros((n, n))
    want[:r1, :r1] = np.diag(info["Sigma"])
    want[r1:r1 + s, r1:r1 + s] = np.eye(s)
    want[:r1, r1 + s:] = info["W"]
    want[r1 + s:, :r1] = info["W"].T
    E = np.zeros((n, n))
    E[:r1, :r1] = np.eye(r1)
    return max(np.abs(F - want).max(), np.abs(T.T @ E @ T - E).max())


def test_lemma_rotate_trivial():
    T, info = lemma_rotate(np.zeros((3, 3)), 2, 1)
    assert np.allclose(T, np.eye(3)) and info["s"] == 0 and np.allclose(info["Sigma"], 0)
    G = np.diag([2.0, -1.0, 1.0, 1.0])
    T, info = lemma_rotate(G, 2, 2)
    assert info["s"] == 2 and np.allclose(np.abs(T), np.eye(4))
    with pytest.raises(ValueError):
        lemma_rotate(np.diag([1.0, -1.0]), 1, 1)


@pytest.mark.parametrize("r1", [1, 2, 3, 4])
@pytest.mark.parametrize("r2", [1, 2, 3, 4])
def test_lemma_rotate_random(r1, r2):
    rng = np.random.default_rng(10 * r1 + r2)
    worst = 0.0
    for k in range(100):
        n = r1 + r2
        G = rng.normal(size=(n, n))
        G = (G + G.T) / 2
        # trailing block psd, of random rank
        rank = int(rng.integers(0, r2 + 1))
        L = rng.normal(size=(r2, rank))
        G[r1:, r1:] = L @ L.T
        T, info = lemma_rotate(G, r1, r2)
        assert abs(np.linalg.det(T)) > 1e-12
        worst = max(worst, _check_rotation(G, r1, r2, T, info))
    assert worst <= 1e-8


def test_diagonal_instance_no_gap():
    A1 = SymMat.diag([1, 0, -1])
    A2 = SymMat.diag([0, 1, 1])
    inst = SdpInstance((A1, A2), SymMat.diag([1, 1, 0]), (1, 1))
    assert isinstance(canonicalize(inst), NoGapVerdict)


def test_recognize_pref_examples():
    base = canonicalize(gen_small(1))
    from dataclasses import replace
    f = replace(base, Sigma=[Fraction(-1)], c2prime=Fraction(10))
    assert recognize_pref(f).values() == (0, INF)
    f = replace(base, Sigma=[Fraction(1)], s=1, c2prime=Fraction(1))
    assert recognize_pref(f).values() == (0, 1)
    with pytest.raises(ValueError):
        recognize_pref(replace(base, c2prime=Fraction(-1)))


def test_family_forms():
    cert = recognize_pref(canonicalize(gen_single(2, 10)))
    assert cert.values() == (0, 10)
    cert = recognize_pref(canonicalize(gen_single(2, 10, True)))
    assert cert.primal_value == 0 and is_inf(cert.dual_value)
    form = canonicalize(gen_double(2))
    assert form.Sigma == [1] and form.s == 1
    assert recognize_pref(form).values() == (0, 1)
    v = canonicalize(gen_double(2, flipped=True))
    assert isinstance(v, NoGapVerdict)


def test_shifted_instance_pulls_back():
    inst = apply_reform(gen_small(10), AddToB(1, 3))
    cert = recognize_pref(canonicalize(inst))
    ref = certify_gap(inst)
    assert cert.values() == ref.values() == (30, 40)


def test_attainment():
    rep = attainment_report(gen_small(1))
    assert rep["primal_attained"] and rep["primal_value"] == "0"
    assert rep["primal_point"] == ["0", "0"]
    assert rep["dual_attained"] and rep["dual_value"] == "1"
    assert rep["dual_point_residual"] == 0 and rep["dual_point_min_eig"] >= 0
    rep = attainment_report(gen_single(2, 10, True))
    assert rep["note"] == "dual infeasible" and rep["primal_attained"]


def test_objective_identically_zero_on_feasible_set():
    # every feasible x of the canonical small form has x2 = 0
    form = canonicalize(gen_small(1))
    cert = recognize_pref(form)
    assert cert.primal_equations == [([0, 1], 0)]


def test_exists_gap_inducing_c():
    p = gen_small(1)
    ok, c = exists_gap_inducing_c(p.A[0], p.A[1], p.B)
    assert ok
    cert = certify_gap(SdpInstance(p.A, p.B, c))
    assert cert.gap > 0
    ok, _ = exists_gap_inducing_c(SymMat.diag([1, 0, -1]), SymMat.diag([0, 1, 1]), SymMat.diag([1, 1, 0]))
    assert not ok
    messy, _ = mess(p, 3)
    ok, c = exists_gap_inducing_c(messy.A[0], messy.A[1], messy.B)
    assert ok


def _rand_inst(rng):
    # B = diag(1, 1, 0) and mostly a zero corner, so the exact certifier has structure to use
    mats = []
    for _ in range(2):
        M = rng.integers(-1, 2, (3, 3))
        M = np.triu(M) + np.triu(M, 1).T
        if rng.random() < 0.8:
            M[2, 2] = 0
        mats.append(SymMat(M))
    c = tuple(int(v) for v in rng.integers(-2, 3, 2))
    return SdpInstance(tuple(mats), SymMat.diag([1, 1, 0]), c)


def test_random_consistency_with_certificate():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(100):
        inst = _rand_inst(rng)
        ref = certify_gap(inst)
        try:
            res = canonicalize(inst)
        except Exception as e:  # normalization failures are allowed, not wrong answers
            assert "Normalization" in type(e).__name__
            continue
        if not ref.conclusive or isinstance(res, Inconclusive):
            continue
        if isinstance(res, CanonicalForm):
            got = recognize_pref(res).values()
            assert float(got[0]) == pytest.approx(float(ref.primal_value), abs=1e-6)
            if is_inf(ref.dual_value):
                assert is_inf(got[1])
            else:
                assert float(got[1]) == pytest.approx(float(ref.dual_value), abs=1e-6)
        else:
            # no-gap verdict: the certified values must agree (or the primal is unbounded)
            pv, dv = ref.values()
            assert pv == dv or pv == -INF or (is_inf(pv) and is_inf(dv)) or res.reason == "PrimalUnbounded"
        checked += 1
    assert checked > 30
