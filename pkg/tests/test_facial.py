from fractions import Fraction

import numpy as np
import pytest

from gapforge.faces import AxisFace, FrStepError, face_dual_restrict, full_face, is_regularized, verify_fr_sequence
from gapforge.facial import (bounds_check, certify_gap, claim_check, minimal_cone, primal_analysis,
                             replay_certificate, singularity_degree, strictly_feasible_dual,
                             weak_infeasibility_probe)
from gapforge.generators import gen_double, gen_example51, gen_single, gen_small, mess
from gapforge.rational import INF
from gapforge.sdpmodel import SdpInstance, dual_residual
from gapforge.symkernel import PsdKind, SymMat, psd_status


# -- faces ---------------------------------------------------------------------------

def test_face_dual_restrict_examples():
    A2 = gen_small().A[1]
    R = face_dual_restrict(A2, AxisFace(3, frozenset({0})))
    assert R == SymMat.diag([1, 0]) and psd_status(R).is_psd
    assert face_dual_restrict(A2, full_face(3)) == A2
    A2d = gen_double(2).A[1]
    R = face_dual_restrict(A2d, AxisFace(5, frozenset({0, 2})))
    assert R == SymMat.diag([1, -1, 0])
    assert face_dual_restrict(A2, AxisFace(3, frozenset({0, 1, 2}))) is None


def test_verify_chain_small():
    inst = gen_small()
    chain = verify_fr_sequence([inst.A[0]], list(inst.A), require_strict=True)
    assert chain.terminal == AxisFace(3, frozenset({0}))


@pytest.mark.parametrize("m", [2, 3, 5, 7])
def test_verify_chain_single(m):
    inst = gen_single(m, 10)
    chain = verify_fr_sequence(list(inst.A[:-1]), list(inst.A), require_strict=True)
    assert chain.terminal == AxisFace(m + 1, frozenset(range(m - 1)))
    dims = chain.dims()
    assert all(b < a for a, b in zip(dims, dims[1:]))


@pytest.mark.parametrize("m", [2, 3, 4])
def test_verify_chain_double(m):
    inst = gen_double(m)
    seq = [inst.B] + list(inst.A[1:-1]) + [-inst.A[-1]]
    chain = verify_fr_sequence(seq, [inst.B] + list(inst.A), require_strict=True)
    assert chain.terminal == AxisFace(2 * m + 1, frozenset(range(2 * m)))


def test_verify_errors():
    inst = gen_small()
    with pytest.raises(FrStepError):
        verify_fr_sequence([inst.A[1]], list(inst.A))  # indefinite
    with pytest.raises(FrStepError):
        verify_fr_sequence([inst.B], list(inst.A))  # not in span
    with pytest.raises(FrStepError):
        verify_fr_sequence([inst.A[0], inst.A[0]], list(inst.A), require_strict=True)


def test_is_regularized():
    assert is_regularized(list(gen_single(5).A)) == (1, 1, 1, 1, 1)
    ex = gen_example51()
    assert is_regularized([ex.B, ex.A[0], ex.A[1]]) == (1, 1, 1)
    assert is_regularized([SymMat.diag([-1, 0, 0])]) is None


# -- certify -------------------------------------------------------------------------

def test_certify_examples():
    assert certify_gap(gen_small(1)).values() == (0, 1)
    c = certify_gap(gen_single(7, 10, True))
    assert c.values() == (0, INF) and c.weakly_infeasible_dual
    assert certify_gap(gen_double(4)).values() == (0, 1)
    assert certify_gap(gen_double(4, flipped=True)).values() == (0, 0)


def test_certify_reduced_dual_small():
    cert = certify_gap(gen_small(10))
    assert cert.reduced_dual["sigma"] == ["1"] and cert.reduced_dual["s"] == 0
    assert cert.reduced_dual["c2prime"] == "10"
    assert len(cert.elimination_trace) == 1


def test_certify_requires_exact():
    with pytest.raises(ValueError):
        certify_gap(gen_small().to_float())


def test_certify_example51_slater():
    cert = certify_gap(gen_example51())
    assert cert.values() == (0, 0) and cert.gap == 0


@pytest.mark.parametrize("inst", [gen_small(3), gen_single(4, 10), gen_single(4, 10, True), gen_double(3),
                                  gen_double(3, True), gen_example51(), mess(gen_single(3, 10), 2)[0]])
def test_replay_determinism(inst):
    cert = certify_gap(inst)
    assert replay_certificate(inst, cert) == cert.values()
    again = certify_gap(inst)
    assert again.values() == cert.values()
    assert [s.to_dict() for s in again.elimination_trace] == [s.to_dict() for s in cert.elimination_trace]


def test_certify_inconclusive_not_wrong():
    # a dense random instance: either a value or honest "inconclusive"
    rng = np.random.default_rng(1)
    for _ in range(20):
        mats = []
        for _ in range(3):
            M = rng.integers(-2, 3, (4, 4))
            mats.append(SymMat(np.triu(M) + np.triu(M, 1).T))
        inst = SdpInstance(tuple(mats[:2]), mats[2], (1, -1))
        cert = certify_gap(inst)
        if cert.conclusive and all(isinstance(v, Fraction) for v in cert.values()):
            assert cert.primal_value <= cert.dual_value


# -- cones and degrees ---------------------------------------------------------------

def test_minimal_cones():
    assert minimal_cone(gen_small(), "D").face == AxisFace(3, frozenset({0}))
    for m in (2, 3, 4):
        mc = minimal_cone(gen_double(m), "HD")
        assert mc.face == AxisFace(2 * m + 1, frozenset(range(2 * m))) and mc.confirmed
    for m in (2, 4, 6):
        mc = minimal_cone(gen_single(m), "D")
        assert mc.face == AxisFace(m + 1, frozenset(range(m - 1))) and mc.confirmed
        assert mc.witness == SymMat.diag([0] * (m - 1) + [1, 1])


def test_double_d_cone_support():
    # face supported on the 1-based indices {m, 2m, n}
    for m in (2, 3, 4):
        face = minimal_cone(gen_double(m), "D").face
        assert face.active == [m - 1, 2 * m - 1, 2 * m]


def test_singularity_degrees():
    assert singularity_degree(gen_single(6), "D", trials=100)["value"] == 5
    assert singularity_degree(gen_double(4), "HD", trials=100)["value"] == 4
    sd = singularity_degree(gen_example51(), "HD", trials=100)
    assert sd["value"] == 3 and sd["sequence"] == ["B", "A1", "A2"]


def test_singularity_degree_messy_upper_only():
    inst, _ = mess(gen_single(3), 1)
    sd = singularity_degree(inst, "D", trials=50)
    assert sd["tag"] != "theorem" or sd["value"] == 2


def test_claim_check_single():
    res = claim_check(gen_single(3), "D", trials=1000)
    assert res["ok"] and res["passed"] == res["trials"] == 1000
    assert not res["counterexamples"]


def test_claim_check_double_hd():
    res = claim_check(gen_double(2), "HD", trials=1000)
    assert res["ok"] and res["span"] == ["B", "A2"]


def test_bounds_check():
    r = bounds_check(gen_example51())
    assert r["ok"] and r["d_HD_equals_m_plus_1"] and r["dual_strictly_feasible"] and r["values"] == ["0", "0"]
    assert bounds_check(gen_single(5))["d_D_upper"] == 4
    assert bounds_check(gen_double(3))["d_HD_upper"] == 3


def test_example51_facts():
    inst = gen_example51()
    Y = SymMat(inst.meta["dual_point"])
    assert dual_residual(inst, Y) == [0, 0]
    assert psd_status(Y).kind is PsdKind.POSITIVE_DEFINITE
    assert primal_analysis(inst).forces_zero


def test_strictly_feasible_dual_none_for_gap():
    assert strictly_feasible_dual(gen_small()) is None
    Y = strictly_feasible_dual(gen_example51())
    assert Y is not None and psd_status(Y).kind is PsdKind.POSITIVE_DEFINITE


# -- probe ---------------------------------------------------------------------------

def test_probe_weakly_infeasible():
    res = weak_infeasibility_probe(gen_single(3, 10, True), 10000)
    assert res["final"] < 1e-6 and res["iterations"] <= 10000
    assert res["monotone"] and all(b <= a for a, b in zip(res["distances"], res["distances"][1:]))


def test_probe_feasible():
    assert weak_infeasibility_probe(gen_example51(), 10000)["final"] < 1e-10


def test_probe_strongly_infeasible():
    base = gen_small(10)
    inst = SdpInstance(base.A + (SymMat.identity(3),), base.B, base.c + (-1,))
    assert weak_infeasibility_probe(inst, 2000)["final"] > 0.1


def test_probe_ap_monotone():
    res = weak_infeasibility_probe(gen_single(2, 10, True), 500, method="ap")
    d = res["distances"]
    assert all(b <= a + 1e-12 for a, b in zip(d, d[1:]))
