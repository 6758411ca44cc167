"""Two-variable canonical form.

For m = 2 a positive gap is equivalent to a reformulation into the
template

    x1 * (Lam (+) 0) + x2 * A2'  <=  I_r (+) 0,   objective c2' x2,

with Lam positive diagonal (order p), A2' carrying a diagonal Sigma on
rows p..r-1, -I_s on the next s rows and a nonzero block M coupling the
first p rows to the trailing zero block of B.  ``canonicalize`` builds
that reformulation numerically, step by step, with every operation
logged as a ReformOp; when the input is exact and all logged operations
turn out to be rational the whole log is replayed in exact arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .facial import GapCertificate
from .lp import lp_min, solve_diagonal_lp
from .rational import INF, is_inf, rat_str
from .sdpmodel import (AddToB, Combine, Congruence, SdpInstance, Swap, apply_reform, b_identity_rank,
                       op_from_dict)
from .symkernel import SymMat, Tolerances, get_tolerances

__all__ = [
    "CanonicalForm", "NoGapVerdict", "Inconclusive", "WitnessNotFound", "AmbiguousBoundary", "NormalizationError",
    "normalize_b", "gs_witness", "lemma_rotate", "canonicalize", "recognize_pref",
    "attainment_report", "exists_gap_inducing_c", "Witness",
]


class WitnessNotFound(RuntimeError):
    def __init__(self, best, msg="no psd element in the constraint pencil"):
        super().__init__(f"{msg} (best min-eig {best:.3e})")
        self.best = best


class AmbiguousBoundary(RuntimeError):
    def __init__(self, best, msg="pencil min-eig too close to zero to decide"):
        super().__init__(f"{msg} (best min-eig {best:.3e})")
        self.best = best


class NormalizationError(RuntimeError):
    pass


@dataclass
class NoGapVerdict:
    reason: str
    witness: object = None
    detail: str = ""

    def to_dict(self):
        w = self.witness
        if isinstance(w, SymMat):
            w = w.to_float().a.tolist()
        elif isinstance(w, np.ndarray):
            w = w.tolist()
        return {"verdict": "no-gap", "reason": self.reason, "detail": self.detail, "witness": w}


@dataclass
class Inconclusive:
    reason: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"verdict": "inconclusive", "reason": self.reason, "diagnostics": self.diagnostics}


@dataclass
class Witness:
    matrix: SymMat
    coeffs: tuple
    min_eig: float
    y0_residual: float = 0.0


@dataclass
class CanonicalForm:
    p: int
    r: int
    s: int
    Lambda: list
    Sigma: list
    M: np.ndarray
    c2prime: object
    transform_log: list
    backend: str
    residuals: dict
    instance: SdpInstance
    offset_delta: object = 0
    x_point: tuple | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.instance.n

    def max_residual(self) -> float:
        return max([float(v) for v in self.residuals.values()] + [0.0])

    def congruence_total(self):
        """Product of all logged congruence matrices (maps canonical Y back)."""
        T = None
        for op in self.transform_log:
            if isinstance(op, Congruence):
                Tm = op.matrix()
                T = Tm if T is None else T.dot(Tm)
        if T is None:
            n = self.n
            return np.eye(n) if self.backend == "float" else np.array(
                [[Fraction(int(i == j)) for j in range(n)] for i in range(n)], dtype=object)
        return T

    def summary(self) -> dict:
        f = (lambda v: rat_str(v)) if self.backend == "exact" else float
        return {
            "p": self.p, "r": self.r, "s": self.s,
            "Lambda": [f(v) for v in self.Lambda], "Sigma": [f(v) for v in self.Sigma],
            "M_norm": float(np.linalg.norm(np.asarray(self.M, dtype=float))) if np.size(self.M) else 0.0,
            "c2prime": f(self.c2prime), "backend": self.backend,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "ops": len(self.transform_log),
        }

    def to_dict(self):
        d = self.summary()
        d["M"] = np.asarray(self.M, dtype=float).tolist()
        d["transform_log"] = [op.to_dict() for op in self.transform_log]
        return d


# -- helpers ------------------------------------------------------------------------

def _tol(tol):
    return tol or get_tolerances()


def _fl(inst):
    return inst.to_float() if inst.exact else inst


def _np(M: SymMat):
    return M.to_float().a


def _scale(inst):
    return max([1.0] + [float(np.abs(_np(a)).max()) for a in inst.A] + [float(np.abs(_np(inst.B)).max())])


def _slack(inst, x):
    Z = _np(inst.B).copy()
    for xi, Ai in zip(x, inst.A):
        Z -= xi * _np(Ai)
    return Z


def _min_eig(X):
    return float(np.linalg.eigvalsh((X + X.T) / 2)[0])


def _kernel(Z, tol):
    lam, Q = np.linalg.eigh((Z + Z.T) / 2)
    thr = tol.rank * max(1.0, float(np.abs(lam).max()))
    return Q[:, lam <= thr], Q[:, lam > thr], lam


def _is_identity(T):
    T = np.asarray(T, dtype=float)
    return T.shape[0] == T.shape[1] and np.allclose(T, np.eye(T.shape[0]), atol=0, rtol=0)


class _Log:
    def __init__(self, inst):
        self.inst = inst
        self.ops = []

    def apply(self, op):
        if isinstance(op, Congruence) and _is_identity(op.matrix()):
            return
        if isinstance(op, Combine) and op.mu == 0 and op.lam == 1:
            return
        if isinstance(op, AddToB) and op.lam == 0:
            return
        self.inst = apply_reform(self.inst, op)
        self.ops.append(op)


# -- normalize B ----------------------------------------------------------------------

def _feasible_point(inst, tol):
    from .symkernel import max_min_eig

    sc = _scale(inst)
    x0 = np.zeros(inst.m)
    if _min_eig(_slack(inst, x0)) >= -tol.psd * sc:
        return x0
    D = [-_np(a) for a in inst.A]
    t, lam = max_min_eig(_np(inst.B), D, bound=1e3)
    t = _polish(inst, np.asarray(t), sc)
    if _min_eig(_slack(inst, t)) >= -tol.psd * sc:
        return t
    raise NormalizationError(f"no feasible primal point found (best min-eig {lam:.3e})")


def _polish(inst, x, sc, small=1e-4, rounds=4):
    """Snap an approximate boundary point onto the face it nearly touches.

    Eigenvectors K of the slack with eigenvalues below ``small*sc`` are
    treated as kernel and x is corrected by least squares so that
    Z(x) K = 0 holds; the correction is kept only if it is consistent.
    """
    from fractions import Fraction

    for _ in range(rounds):
        Z = _slack(inst, x)
        lam, Q = np.linalg.eigh(Z)
        K = Q[:, lam <= small * sc]
        if K.shape[1] == 0 or lam[0] > 1e-13 * sc:
            break
        G = np.array([(_np(a) @ K).ravel() for a in inst.A]).T
        rhs = (Z @ K).ravel()
        dx, *_ = np.linalg.lstsq(G, rhs, rcond=None)
        if np.linalg.norm(G @ dx - rhs) > 1e-9 * sc:
            break
        x = x + dx
    # small rationals are common; prefer them when they are at least as good
    xr = np.array([float(Fraction(float(v)).limit_denominator(1000)) for v in x])
    if np.abs(xr - x).max() <= 1e-9 * (1 + np.abs(x).max()) and \
            _min_eig(_slack(inst, xr)) >= _min_eig(_slack(inst, x)) - 1e-15 * sc:
        x = xr
    return x


def _psd_direction_2d(G_list, tol, angles=720):
    """Direction d on the unit circle maximizing min-eig(sum d_i G_i); returns (d, value)."""
    th = np.linspace(0, 2 * np.pi, angles, endpoint=False)
    best = (None, -np.inf)
    for a in th:
        d = np.array([np.cos(a), np.sin(a)])
        X = sum(di * Gi for di, Gi in zip(d, G_list))
        v = _min_eig(X)
        if v > best[1]:
            best = (d, v)
    return best


def _max_rank_point(inst, x0, tol):
    """Move from a feasible x0 to a feasible point whose slack has maximal rank.

    If K spans the kernel of Z(x0), rank can only grow along directions d
    with -K^T (sum d_i A_i) K psd and nonzero; such a d is found on the
    circle (m = 2) or along coordinate directions, and a step half-way to
    the feasibility boundary is taken.  Repeats until no direction helps.
    """
    sc = _scale(inst)
    x = np.asarray(x0, dtype=float)
    for _ in range(inst.n + 1):
        Z = _slack(inst, x)
        K, R, _ = _kernel(Z, tol)
        if K.shape[1] == 0:
            return x, Z
        G = [-(K.T @ _np(a) @ K) for a in inst.A]
        if all(np.abs(g).max() <= tol.zero * sc for g in G):
            return x, Z
        if inst.m == 2:
            cands = _wedge_directions(G, tol, sc)
        else:
            cands = [e * s for e in np.eye(inst.m) for s in (1, -1)]
        moved = False
        robust = lambda Zm: int((np.linalg.eigvalsh(Zm) > 1e-5 * sc).sum())
        have = robust(Z)
        for d in cands:
            Gd = sum(di * gi for di, gi in zip(d, G))
            if _min_eig(Gd) < -tol.psd * sc or np.abs(Gd).max() <= tol.zero * sc:
                continue
            t = _max_step(inst, x, d, tol, sc)
            # a first-order direction can be blocked at second order; such steps
            # stay tiny and do not raise the rank at a robust threshold
            xn = x + 0.5 * t * d
            if t > 1e-4 * (1.0 + float(np.abs(x).max())) and robust(_slack(inst, xn)) > have:
                x = xn
                moved = True
                break
        if not moved:
            return x, Z
    return x, _slack(inst, x)


def _simplify_point(inst, x, sc):
    """Move coordinates of a max-rank point to 0 or nearby small rationals when
    the slack stays psd with the same robust rank (so it stays max-rank).
    Simple points give rational congruences and make exact replay possible."""
    from fractions import Fraction

    robust = lambda Zm: int((np.linalg.eigvalsh(Zm) > 1e-5 * sc).sum())
    ok = lambda y: _min_eig(_slack(inst, y)) >= -1e-12 * sc
    have = robust(_slack(inst, x))
    x = np.array(x, dtype=float)
    for j in range(len(x)):
        for v in (0.0, float(round(x[j])), float(Fraction(float(x[j])).limit_denominator(10))):
            if v == x[j]:
                break
            y = x.copy()
            y[j] = v
            if ok(y) and robust(_slack(inst, y)) == have:
                x = y
                break
    return x


def _wedge_directions(G, tol, sc, angles=720):
    th = np.linspace(0, 2 * np.pi, angles, endpoint=False)
    ok = []
    for a in th:
        d = np.array([np.cos(a), np.sin(a)])
        Gd = d[0] * G[0] + d[1] * G[1]
        if _min_eig(Gd) >= -tol.psd * sc and np.abs(Gd).max() > tol.zero * sc:
            ok.append(a)
    if not ok:
        return []
    # bisector of the psd wedge first, then the rest
    ang = np.array(ok)
    mid = np.angle(np.exp(1j * ang).mean()) if len(ang) > 1 else ang[0]
    out = [np.array([np.cos(mid), np.sin(mid)])]
    out += [np.array([np.cos(a), np.sin(a)]) for a in ang[:: max(1, len(ang) // 8)]]
    return out


def _max_step(inst, x, d, tol, sc, tmax=1e3):
    feas = lambda t: _min_eig(_slack(inst, x + t * d)) >= -1e-12 * sc
    if feas(tmax):
        return tmax
    lo, hi = 0.0, tmax
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if feas(mid):
            lo = mid
        else:
            hi = mid
    return lo


def normalize_b(inst: SdpInstance, tol: Tolerances | None = None, x_feasible=None):
    """Reformulate so that B = I_r (+) 0 is a maximum-rank slack.

    Returns (instance, ops, info) with info = {r, x, already}.
    """
    tol = _tol(tol)
    fi = _fl(inst)
    x0 = np.asarray(x_feasible, dtype=float) if x_feasible is not None else _feasible_point(fi, tol)
    x, Z = _max_rank_point(fi, x0, tol)
    x = _simplify_point(fi, x, _scale(fi))
    Z = _slack(fi, x)
    K, R, lam = _kernel(Z, tol)
    r = R.shape[1]
    rB = b_identity_rank(inst.B, 0.0)
    if rB is not None and rB == r and _min_eig(_slack(fi, np.zeros(fi.m))) >= -tol.psd * _scale(fi):
        # B itself is already a maximum-rank slack of the required form
        return inst, [], {"r": r, "x": np.zeros(inst.m), "already": True}
    log = _Log(fi)
    for j, xj in enumerate(x):
        if abs(xj) > 0:
            log.apply(AddToB(j, -float(xj)))
    Zc = _np(log.inst.B)
    lamz, Q = np.linalg.eigh(Zc)
    order = np.argsort(-lamz)
    lamz, Q = lamz[order], Q[:, order]
    thr = tol.rank * max(1.0, float(np.abs(lamz).max()))
    pos = lamz > thr
    r = int(pos.sum())
    T = Q.copy()
    T[:, :r] = Q[:, :r] / np.sqrt(lamz[:r])
    log.apply(Congruence(T))
    return log.inst, log.ops, {"r": r, "x": x, "already": False}


# -- pencil witness -------------------------------------------------------------------

def _unit_combo(inst, lam):
    W = lam[0] * _np(inst.A[0]) + lam[1] * _np(inst.A[1])
    nrm = np.linalg.norm(W)
    return W / nrm if nrm > 0 else W, nrm


def gs_witness(inst: SdpInstance, homogeneous: bool = False, angles: int = 4096,
               tol: Tolerances | None = None) -> Witness:
    """Nonzero psd element of span{A1, A2} orthogonal to the dual affine set.

    Inhomogeneous: the admissible coefficients satisfy l . c = 0 (one
    direction up to sign).  Homogeneous: the whole two-dimensional pencil
    is searched on a grid of ``angles`` points with golden-section
    refinement of the three best.  Raises WitnessNotFound when the best
    normalized min-eigenvalue is below -1e3*eps_psd and AmbiguousBoundary
    when it lies in [-1e3*eps_psd, -eps_psd).
    """
    from scipy.optimize import minimize_scalar

    tol = _tol(tol)
    if inst.m != 2:
        raise ValueError("gs_witness is for m = 2")
    fi = _fl(inst)
    Y0 = None
    if not homogeneous:
        Avec = np.array([_np(a).flatten() for a in fi.A])
        c = np.array(fi.c, dtype=float)
        y0 = np.linalg.lstsq(Avec, c, rcond=None)[0]
        Y0 = y0.reshape(fi.n, fi.n)
        cc = Avec @ y0
        if np.linalg.norm(cc) == 0:
            homogeneous = True
        else:
            d = np.array([cc[1], -cc[0]]) / np.linalg.norm(cc)
            cands = [d, -d]
    if homogeneous:
        def val(a):
            W, nrm = _unit_combo(fi, (np.cos(a), np.sin(a)))
            return _min_eig(W) if nrm > 0 else -np.inf
        th = np.linspace(0, 2 * np.pi, angles, endpoint=False)
        vals = np.array([val(a) for a in th])
        top = np.argsort(-vals)[:3]
        h = th[1] - th[0]
        cands = []
        for i in top:
            res = minimize_scalar(lambda a: -val(a), bounds=(th[i] - h, th[i] + h), method="bounded",
                                  options={"xatol": 1e-12})
            a = res.x if -res.fun >= vals[i] else th[i]
            cands.append(np.array([np.cos(a), np.sin(a)]))
    best = None
    for lam in cands:
        W, nrm = _unit_combo(fi, lam)
        if nrm == 0:
            continue
        v = _min_eig(W)
        if best is None or v > best[2]:
            best = (lam / nrm, W, v)
    if best is None:
        raise WitnessNotFound(-np.inf, "pencil is identically zero")
    lam, W, v = best
    if v < -1e3 * tol.psd:
        raise WitnessNotFound(v)
    if v < -tol.psd:
        raise AmbiguousBoundary(v)
    res = float(abs(np.sum(W * Y0))) if Y0 is not None else 0.0
    # snap coefficients that are numerically zero or integral (keeps exact replay possible)
    lam = np.array([_snap(t) for t in lam])
    return Witness(SymMat(W, exact=False), tuple(float(t) for t in lam), v, res)


def _snap(t, eps=1e-12):
    for den in (1, 2, 3, 4, 5, 6, 8, 10):
        k = round(t * den)
        if abs(t * den - k) <= eps * max(1, abs(t * den)):
            return k / den
    return t


# -- rotation lemma -------------------------------------------------------------------

def lemma_rotate(G, r1: int, r2: int, tol: Tolerances | None = None):
    """Invertible T with T^T G T = [[Sigma, 0, W], [0, I_s, 0], [W^T, 0, 0]] and
    T^T (I_r1 (+) 0) T = I_r1 (+) 0.  Returns (T, info) with info = {s, Sigma, W}.

    T = T1 T2 T3: orthonormal eigenvectors of G11 together with scaled
    eigenvectors of G22, the shear that clears the coupling V to the
    identity block, and eigenvectors of Omega - V V^T.
    """
    tol = _tol(tol)
    G = np.asarray(G.to_float().a if isinstance(G, SymMat) else G, dtype=float)
    G = (G + G.T) / 2
    n = r1 + r2
    if G.shape != (n, n):
        raise ValueError(f"G has shape {G.shape}, expected {(n, n)}")
    sc = max(1.0, float(np.abs(G).max()))
    G22 = G[r1:, r1:]
    if r2:
        lam2, Q2 = np.linalg.eigh(G22)
        if lam2[0] < -tol.psd * sc:
            raise ValueError(f"trailing block is not psd (min eig {lam2[0]:.3e})")
        order = np.argsort(-lam2)
        lam2, Q2 = lam2[order], Q2[:, order]
        s = int((lam2 > tol.rank * sc).sum())
        Q2 = Q2.copy()
        Q2[:, :s] /= np.sqrt(lam2[:s])
    else:
        s, Q2 = 0, np.zeros((0, 0))
    if r1:
        _, Q1 = np.linalg.eigh(G[:r1, :r1])
        if np.allclose(G[:r1, :r1], np.diag(np.diag(G[:r1, :r1])), atol=0):
            Q1 = np.eye(r1)
    else:
        Q1 = np.zeros((0, 0))
    T1 = _blkdiag(Q1, Q2)
    G1 = T1.T @ G @ T1
    V = G1[:r1, r1:r1 + s]
    T2 = np.eye(n)
    T2[r1:r1 + s, :r1] = -V.T
    G2 = T2.T @ G1 @ T2
    Om = G2[:r1, :r1]
    if r1 and not np.allclose(Om, np.diag(np.diag(Om)), atol=0):
        _, Q3 = np.linalg.eigh((Om + Om.T) / 2)
    else:
        Q3 = np.eye(r1)
    T3 = _blkdiag(Q3, np.eye(r2))
    T = T1 @ T2 @ T3
    F = T.T @ G @ T
    if r1 and s:
        # one refinement shear: the coupling left by rounding scales with cond(T)
        R = np.eye(n)
        R[r1:r1 + s, :r1] = -F[:r1, r1:r1 + s].T
        T = T @ R
        F = T.T @ G @ T
    info = {"s": s, "Sigma": np.diag(F[:r1, :r1]).copy(), "W": F[:r1, r1 + s:].copy()}
    return T, info


def _blkdiag(*bs):
    n = sum(b.shape[0] for b in bs)
    out = np.zeros((n, n))
    k = 0
    for b in bs:
        m = b.shape[0]
        out[k:k + m, k:k + m] = b
        k += m
    return out


# -- the pipeline ---------------------------------------------------------------------

def _indefinite_witness(S, c2):
    """Positive definite Y' with S . Y' = c2 for an indefinite S."""
    lam, Q = np.linalg.eigh(S)
    k = S.shape[0]
    Y = np.eye(k)
    need = c2 - np.trace(S)
    up, un = Q[:, -1], Q[:, 0]
    if need > 0:
        Y = Y + (need / lam[-1]) * np.outer(up, up)
    elif need < 0:
        Y = Y + (need / lam[0]) * np.outer(un, un)
    return Y


def canonicalize(inst: SdpInstance, tol: Tolerances | None = None, angles: int = 4096,
                 exact_replay: bool = True):
    """Canonical form (positive gap) or a NoGapVerdict; "inconclusive" raises AmbiguousBoundary.

    Values of the original problem are recovered from the canonical one
    by subtracting ``offset_delta`` (the AddToB shifts).
    """
    tol = _tol(tol)
    if inst.m != 2:
        raise ValueError("canonicalize handles m = 2 only")
    fi = _fl(inst)
    sc = _scale(fi)
    if all(float(v) == 0 for v in fi.c):
        return NoGapVerdict("ObjectiveZero", detail="c = 0, both values are 0 when feasible")
    dep = _dependent_constraints(fi, tol)
    if dep is not None:
        return dep
    base, ops, info = normalize_b(inst, tol)
    r, n = info["r"], inst.n
    if r >= n:
        return NoGapVerdict("PrimalStrictlyFeasible", detail="a positive definite slack exists")
    log = _Log(_fl(base))
    log.ops = list(ops)
    try:
        wit = gs_witness(log.inst, homogeneous=False, angles=angles, tol=tol)
    except WitnessNotFound as e:
        return _no_witness(inst, log.inst, tol, angles, e)
    except AmbiguousBoundary as e:
        return Inconclusive("AmbiguousBoundary", {"best_min_eig": e.best, "stage": "gs_witness"})
    l1, l2 = wit.coeffs
    # row operations: constraint 0 becomes the witness with right-hand side 0
    if l1 != 0:
        log.apply(Combine(0, l1, 1, l2))
    else:
        log.apply(Swap(0, 1))
        log.apply(Combine(0, l2, 0, 0))
    log.inst = _zero_rhs0(log.inst)
    A1 = _np(log.inst.A[0])
    off = A1.copy()
    off[:r, :r] = 0
    residuals = {"A1_outside_r_block": float(np.abs(off).max()) if off.size else 0.0}
    if residuals["A1_outside_r_block"] > 1e3 * tol.zero * sc:
        raise NormalizationError("witness has entries outside the B block: B is not a maximum-rank slack")
    # transform A1: eigenvectors of its leading r x r block
    lam1, Q1 = np.linalg.eigh(A1[:r, :r])
    order = np.argsort(-lam1)
    lam1, Q1 = lam1[order], Q1[:, order]
    p = int((lam1 > tol.rank * max(1.0, float(np.abs(lam1).max()))).sum())
    if np.allclose(A1[:r, :r], np.diag(np.diag(A1[:r, :r])), atol=0):
        perm = np.argsort(-np.diag(A1[:r, :r]), kind="stable")
        Q1 = np.eye(r)[:, perm]
    log.apply(Congruence(_blkdiag(Q1, np.eye(n - r))))
    # transform A2: make the trailing block S psd
    A2 = _np(log.inst.A[1])
    S = A2[r:, r:]
    Ssc = max(1.0, float(np.abs(A2).max()))
    ls = np.linalg.eigvalsh(S) if S.size else np.zeros(0)
    c2 = float(log.inst.c[1])
    if ls.size and ls[0] < -tol.psd * Ssc and ls[-1] > tol.psd * Ssc:
        return NoGapVerdict("SIndefinite", _indefinite_witness(S, c2),
                            "trailing block of A2' is indefinite, dual has a value-0 point")
    if ls.size and ls[-1] <= tol.psd * Ssc and ls[0] < -tol.psd * Ssc:
        log.apply(Combine(1, -1, 1, 0))
    A2 = _np(log.inst.A[1])
    T, li = lemma_rotate(A2[p:, p:], r - p, n - r, tol)
    s = li["s"]
    log.apply(Congruence(_blkdiag(np.eye(p), T)))
    log.apply(Combine(1, -1, 1, 0))
    A2 = _np(log.inst.A[1])
    zsc = max(1.0, float(np.abs(A2).max()))
    M = A2[:p, r + s:]
    W = A2[p:r, r + s:]
    mz = float(np.abs(M).max()) if M.size else 0.0
    wz = float(np.abs(W).max()) if W.size else 0.0
    if mz <= tol.zero * zsc and wz <= tol.zero * zsc:
        return NoGapVerdict("MWZeroLpEquality", detail="M = W = 0: the reduced problem is an LP pair")
    if wz > tol.zero * zsc:
        return NoGapVerdict("WNonzeroGapZero", W.copy(), "W != 0: dual value 0 by the epsilon construction")
    c2 = float(log.inst.c[1])
    if abs(c2) <= tol.zero * max(1.0, abs(float(fi.c[0])) + abs(float(fi.c[1]))):
        return NoGapVerdict("ObjectiveZero", detail="c2' = 0")
    if c2 < 0 and s > 0:
        Y = np.zeros((n, n))
        Y[r:r + s, r:r + s] = (-c2 / s) * np.eye(s)
        return NoGapVerdict("DualValueZero", Y, "s > 0 and c2' < 0: dual has a value-0 point")
    if c2 < 0:
        log.apply(Combine(1, -1, 1, 0))
    form = _extract(log.inst, log.ops, p, r, s, "float", tol, inst, info)
    if exact_replay and inst.exact:
        ex = _exact_replay(inst, log.ops, p, r, s, info)
        if ex is not None:
            return ex
    return form


def _dependent_constraints(fi, tol):
    """NoGapVerdict when A1, A2 are linearly dependent, else None."""
    V = np.array([_np(a).ravel() for a in fi.A]).T
    u, sv, vt = np.linalg.svd(V, full_matrices=True)
    if sv[-1] > tol.zero * max(1.0, sv[0]):
        return None
    lam = vt[-1]
    lc = float(np.dot(lam, np.array(fi.c, dtype=float)))
    if abs(lc) > tol.zero:
        lam = lam if lc > 0 else -lam
        return NoGapVerdict("PrimalUnbounded", lam, "lambda1 A1 + lambda2 A2 = 0 with lambda . c != 0: x = t*lambda is unbounded")
    return NoGapVerdict("OneVariable", lam, "A1, A2 linearly dependent and c consistent: one variable, no gap")


def _no_witness(orig, ninst, tol, angles, err):
    """Explain a missing witness: strictly feasible dual, or a primal recession direction."""
    from .facial import strictly_feasible_dual

    Y = strictly_feasible_dual(orig)
    if Y is not None:
        return NoGapVerdict("DualStrictlyFeasible", Y, "positive definite dual point, verified exactly")
    try:
        w = gs_witness(ninst, homogeneous=True, angles=angles, tol=tol)
    except (WitnessNotFound, AmbiguousBoundary):
        w = None
    if w is not None:
        lc = sum(l * float(c) for l, c in zip(w.coeffs, ninst.c))
        if lc < -tol.zero:
            # x = -t*lambda keeps the slack psd while the objective grows without bound
            return NoGapVerdict("PrimalUnbounded", np.array(w.coeffs),
                                "psd pencil element with lambda . c < 0: both values are +inf")
    return NoGapVerdict("PencilWitnessNotFound", None, f"{err}; dual strictly feasible by the alternative theorem")


def _zero_rhs0(inst):
    c = list(inst.c)
    if abs(c[0]) <= 1e-12 * max(1.0, abs(c[1])):
        c[0] = 0.0 if not inst.exact else Fraction(0)
    return SdpInstance(inst.A, inst.B, tuple(c), inst.meta)


def _extract(ci, ops, p, r, s, backend, tol, orig, info):
    exact = backend == "exact"
    A1, A2, B = ci.A[0].a, ci.A[1].a, ci.B.a
    n = ci.n
    absf = (lambda v: abs(v)) if exact else (lambda v: abs(float(v)))

    def blockmax(X, rows, cols, target=None):
        m = 0
        for i in rows:
            for j in cols:
                want = 0 if target is None else target(i, j)
                m = max(m, absf(X[i, j] - want))
        return m

    R = range(n)
    res = {}
    res["B_template"] = blockmax(B, R, R, lambda i, j: 1 if (i == j and i < r) else 0)
    res["A1_template"] = blockmax(A1, R, R, lambda i, j: A1[i, j] if (i == j and i < p) else 0)
    sig = range(p, r)
    ib = range(r, r + s)
    tail = range(r + s, n)
    res["Sigma_offdiag"] = blockmax(A2, sig, sig, lambda i, j: A2[i, j] if i == j else 0)
    res["Sigma_I_block"] = blockmax(A2, sig, ib)
    res["minus_I_block"] = blockmax(A2, ib, ib, lambda i, j: -1 if i == j else 0)
    res["I_tail_block"] = blockmax(A2, ib, tail)
    res["tail_block"] = blockmax(A2, tail, tail)
    res["W"] = blockmax(A2, sig, tail)
    res["c1"] = absf(ci.c[0])
    Lam = [A1[i, i] for i in range(p)]
    Sig = [A2[i, i] for i in sig]
    M = np.array([[A2[i, j] for j in tail] for i in range(p)], dtype=object if exact else float)
    if not exact:
        Lam = [float(v) for v in Lam]
        Sig = [0.0 if abs(v) <= tol.zero else float(v) for v in Sig]
    off = ci.meta.get("value_offset", 0) - orig.meta.get("value_offset", 0)
    return CanonicalForm(p, r, s, Lam, Sig, M, ci.c[1], list(ops), backend, res, ci,
                         off if exact else float(off), tuple(info["x"]),
                         {"already_normalized": info.get("already", False)})


def _rat_op(op):
    """Rational version of a logged op when every float in it is a small rational."""
    def rat(v):
        if isinstance(v, Fraction):
            return v
        f = Fraction(float(v)).limit_denominator(10 ** 6)
        if abs(float(f) - float(v)) > 1e-12 * max(1.0, abs(float(v))):
            raise ValueError
        return f

    if isinstance(op, AddToB):
        return AddToB(op.j, rat(op.lam))
    if isinstance(op, Combine):
        return Combine(op.i, rat(op.lam), op.j, rat(op.mu))
    if isinstance(op, Swap):
        return op
    if isinstance(op, Congruence):
        T = op.matrix()
        return Congruence([[rat(v) for v in row] for row in T])
    raise ValueError


def _exact_replay(inst, ops, p, r, s, info):
    try:
        rops = [_rat_op(op) for op in ops]
    except (ValueError, OverflowError):
        return None
    ci = inst
    try:
        for op in rops:
            ci = apply_reform(ci, op)
    except Exception:
        return None
    form = _extract(ci, rops, p, r, s, "exact", get_tolerances(), inst,
                    {"x": tuple(Fraction(0) for _ in range(inst.m)), "already": info.get("already", False)})
    if any(v != 0 for v in form.residuals.values()):
        return None
    if not all(v > 0 for v in form.Lambda) or not any(v != 0 for v in form.M.flat) or not form.c2prime > 0:
        return None
    # x point: the AddToB shifts
    x = [Fraction(0)] * inst.m
    for op in rops:
        if isinstance(op, AddToB):
            x[op.j] -= op.lam
    form.x_point = tuple(x)
    return form


# -- certificates from the canonical form ---------------------------------------------

def recognize_pref(form: CanonicalForm) -> GapCertificate:
    """(primal, dual) values read off the canonical form, shifted back to the input instance."""
    if not isinstance(form, CanonicalForm):
        raise TypeError("recognize_pref needs a CanonicalForm")
    exact = form.backend == "exact"
    tol = get_tolerances()
    if form.p < 1 or not all(v > 0 for v in form.Lambda):
        raise ValueError("canonical form invariant violated: Lambda must be positive")
    mnorm = float(np.abs(np.asarray(form.M, dtype=float)).max()) if np.size(form.M) else 0.0
    if mnorm <= (0 if exact else tol.zero):
        raise ValueError("canonical form invariant violated: M = 0")
    if not form.c2prime > 0:
        raise ValueError("canonical form invariant violated: c2' <= 0")
    dual = solve_diagonal_lp(form.Sigma, form.s, form.c2prime)
    if not exact and not is_inf(dual):
        dual = float(dual)
    primal = Fraction(0) if exact else 0.0
    off = form.offset_delta
    pv = primal - off
    dv = dual if is_inf(dual) else dual - off
    red = {"sigma": [rat_str(v) if exact else float(v) for v in form.Sigma], "s": form.s,
           "c2prime": rat_str(form.c2prime) if exact else float(form.c2prime)}
    eq = [([Fraction(0), Fraction(1)], Fraction(0))]
    cert = GapCertificate(pv, dv, [], red, eq, bool(is_inf(dv)), "canonical-form",
                          None, form.x_point, "canonical",
                          ["x2 = 0 in canonical coordinates since M != 0",
                           f"backend {form.backend}, max residual {form.max_residual():.3e}"])
    return cert


def attainment_report(inst: SdpInstance, form=None, tol: Tolerances | None = None) -> dict:
    """Attainment of both optimal values, verified from the canonical data."""
    form = form if form is not None else canonicalize(inst, tol)
    if not isinstance(form, CanonicalForm):
        return {"canonical": False, "verdict": form.to_dict() if hasattr(form, "to_dict") else str(form)}
    cert = recognize_pref(form)
    exact = form.backend == "exact"
    rep = {"canonical": True, "primal_value": _num(cert.primal_value), "primal_attained": True,
           "primal_point": [_num(v) for v in form.x_point] if form.x_point is not None else None}
    sig = [Fraction(v) if not exact else v for v in form.Sigma]
    b = [Fraction(1)] * len(sig) + [Fraction(0)] * form.s
    g = sig + [Fraction(-1)] * form.s
    c2 = form.c2prime if exact else Fraction(float(form.c2prime))
    res = lp_min(b, [g], [c2]) if g else None
    if res is None or res.status == "infeasible":
        rep.update(dual_value="inf", dual_feasible=False, dual_attained=None,
                   note="dual infeasible")
        return rep
    rep.update(dual_feasible=True, dual_value=_num(cert.dual_value), dual_attained=res.status == "optimal")
    # dual point: reduced solution placed on the Sigma and I_s diagonal, pulled back
    n = form.n
    Yc = np.zeros((n, n), dtype=object if exact else float)
    if exact:
        Yc[:, :] = Fraction(0)
    for k, v in enumerate(res.y[:len(sig)]):
        Yc[form.p + k, form.p + k] = v if exact else float(v)
    for k, v in enumerate(res.y[len(sig):]):
        Yc[form.r + k, form.r + k] = v if exact else float(v)
    T = form.congruence_total()
    Y = T.dot(Yc).dot(T.T) if exact else np.asarray(T, float) @ Yc @ np.asarray(T, float).T
    Ym = SymMat(Y, exact=exact)
    resid = [float(abs(sum((ai * yi) for ai, yi in zip(A.a.flat, Ym.a.flat)) - ci))
             for A, ci in zip(inst.A, inst.c)]
    rep["dual_point_residual"] = max(resid)
    rep["dual_point_min_eig"] = float(np.linalg.eigvalsh(Ym.to_float().a)[0])
    return rep


def _num(v):
    if isinstance(v, Fraction):
        return rat_str(v)
    if is_inf(v):
        return "inf"
    return float(v)


def exists_gap_inducing_c(A1: SymMat, A2: SymMat, B: SymMat, tol: Tolerances | None = None,
                          angles: int = 4096):
    """Whether some objective c gives the system a positive gap; returns (bool, c or None)."""
    tol = _tol(tol)
    probe = SdpInstance((A1, A2), B, (0.0, 0.0))
    base, _, info = normalize_b(probe, tol)
    if info["r"] >= B.n:
        return False, None
    try:
        w = gs_witness(base, homogeneous=True, angles=angles, tol=tol)
    except WitnessNotFound:
        return False, None
    l1, l2 = w.coeffs
    exact = A1.exact and A2.exact and B.exact
    for sgn in (1, -1):
        c = (-sgn * l2, sgn * l1)
        if exact:
            try:
                c = tuple(Fraction(v).limit_denominator(10 ** 6) for v in c)
            except (TypeError, ValueError):
                pass
        inst = SdpInstance((A1, A2), B, c)
        form = canonicalize(inst, tol, angles)
        if isinstance(form, Inconclusive):
            raise AmbiguousBoundary(form.diagnostics.get("best_min_eig", float("nan")))
        if isinstance(form, CanonicalForm):
            return True, c
    return False, None
