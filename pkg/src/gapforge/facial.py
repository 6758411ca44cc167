"""Exact structural gap certificates, minimal cones and singularity degrees.

The dual side runs facial reduction on the constraint span: a
combination sum(l_i A_i) whose restriction to the current face is psd and
whose right-hand side sum(l_i c_i) vanishes cuts the face down to the
kernel of that restriction.  When no stored constraint applies, the
row-reduced basis of the span is tried, then an exact search of the
"forced" coefficient subspace (see ``forced_subspace``).  What remains is
a diagonal problem solved as an exact LP.

The primal side uses the zero-diagonal argument: a diagonal entry of the
slack that vanishes identically on the current affine set of x forces
its whole row to vanish, which adds linear equations on x.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .faces import (AxisFace, FaceChain, FrSequence, FrStepError, GeneralFace, face_dual_restrict,
                    face_from_basis, full_face, is_regularized, reduce_face, restrict_basis,
                    verify_fr_sequence)
from .lp import lp_min, solve_diagonal_lp
from .rational import INF, as_rat, inverse, is_inf, nullspace, rat_str, rref, solve_affine
from .sdpmodel import SdpInstance, Slack, dual_residual, slack_at
from .symkernel import PsdKind, SymMat, congruence, max_min_eig, psd_status

__all__ = [
    "TraceStep", "GapCertificate", "PrimalAnalysis", "primal_analysis", "certify_gap",
    "replay_certificate", "solve_diagonal_lp", "face_dual_restrict", "verify_fr_sequence",
    "is_regularized", "minimal_cone", "MinimalCone", "singularity_degree", "claim_check",
    "bounds_check", "weak_infeasibility_probe", "find_pd_solution", "strictly_feasible_dual",
    "forced_subspace", "AxisFace", "GeneralFace", "FrSequence", "FaceChain", "FrStepError",
    "INCONCLUSIVE", "UnstructuredError",
]

INCONCLUSIVE = "inconclusive"


class UnstructuredError(RuntimeError):
    pass


def _fmt(v):
    if isinstance(v, str):
        return v
    if is_inf(v):
        return "inf"
    if isinstance(v, float) and v == -INF:
        return "-inf"
    return rat_str(v)


# -- data ---------------------------------------------------------------------------

@dataclass
class TraceStep:
    constraint: int | None
    coeffs: tuple
    rule: str
    zeroed: tuple = ()
    rank_before: int = 0
    rank_after: int = 0

    def to_dict(self):
        return {"constraint": self.constraint, "coeffs": [rat_str(v) for v in self.coeffs],
                "rule": self.rule, "zeroed": list(self.zeroed),
                "rank_before": self.rank_before, "rank_after": self.rank_after}


@dataclass
class PrimalAnalysis:
    value: object
    equations: list
    point: tuple | None
    zero_diagonal: tuple
    affine_dim: int
    forces_zero: bool

    def equations_str(self):
        out = []
        for co, rhs in self.equations:
            terms = [f"{rat_str(a)}*x{i + 1}" for i, a in enumerate(co) if a != 0]
            out.append(" + ".join(terms) + f" = {rat_str(rhs)}")
        return out


@dataclass
class GapCertificate:
    primal_value: object
    dual_value: object
    elimination_trace: list
    reduced_dual: dict | None
    primal_equations: list
    weakly_infeasible_dual: bool
    dual_rule: str = ""
    face: object = None
    primal_point: tuple | None = None
    coordinates: str = "as-given"
    notes: list = field(default_factory=list)

    @property
    def conclusive(self) -> bool:
        return INCONCLUSIVE not in (self.primal_value, self.dual_value)

    @property
    def gap(self):
        if not self.conclusive:
            return INCONCLUSIVE
        if is_inf(self.dual_value):
            return INF
        return self.dual_value - self.primal_value

    def zero_steps(self):
        return [s for s in self.elimination_trace if s.rule in ("psd-zero-rhs", "nsd-zero-rhs")]

    def values(self):
        return self.primal_value, self.dual_value

    def to_dict(self):
        return {
            "primal_value": _fmt(self.primal_value),
            "dual_value": _fmt(self.dual_value),
            "gap": _fmt(self.gap),
            "weakly_infeasible_dual": self.weakly_infeasible_dual,
            "dual_rule": self.dual_rule,
            "elimination_trace": [s.to_dict() for s in self.elimination_trace],
            "reduced_dual": self.reduced_dual,
            "primal_equations": [[[rat_str(a) for a in co], rat_str(r)] for co, r in self.primal_equations],
            "primal_point": None if self.primal_point is None else [rat_str(v) for v in self.primal_point],
            "face": None if self.face is None else self.face.to_dict(),
            "coordinates": self.coordinates,
            "notes": list(self.notes),
        }


# -- helpers ------------------------------------------------------------------------

def _combo(mats, coeffs):
    out = None
    for a, M in zip(coeffs, mats):
        if a == 0:
            continue
        term = M * a
        out = term if out is None else out + term
    return out if out is not None else SymMat.zeros(mats[0].n)


def _dot(u, v):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def _unit(k, i):
    return tuple(Fraction(int(j == i)) for j in range(k))


def _axis_indices(V):
    F = face_from_basis(V)
    return F


def _zeroed(V_before, V_after):
    Fb, Fa = face_from_basis(V_before), face_from_basis(V_after)
    if isinstance(Fb, AxisFace) and isinstance(Fa, AxisFace):
        return tuple(sorted(Fa.zero - Fb.zero))
    return ()


def _sym_coords(n):
    return [(i, i) for i in range(n)] + [(i, j) for i in range(n) for j in range(i + 1, n)]


def _sym_row(M: SymMat, coords):
    a = M.a
    return [a[i, j] if i == j else 2 * a[i, j] for i, j in coords]


def _sym_from(vec, coords, n, exact=True):
    W = np.full((n, n), Fraction(0), dtype=object) if exact else np.zeros((n, n))
    for v, (i, j) in zip(vec, coords):
        W[i, j] = v
        W[j, i] = v
    return SymMat._wrap(W, exact)


def _rationalize(t, den=10 ** 6):
    return [Fraction(float(v)).limit_denominator(den) for v in t]


def find_pd_solution(mats: Sequence[SymMat], rhs, bound=1e3):
    """Exact W > 0 with mats[i] . W = rhs[i], found numerically and verified exactly.

    Returns the SymMat or None.
    """
    if not mats:
        return None
    n = mats[0].n
    coords = _sym_coords(n)
    rows = [_sym_row(M, coords) for M in mats]
    sol = solve_affine(rows, [as_rat(v) for v in rhs], len(coords))
    if sol is None:
        return None
    w0, N = sol
    W0 = _sym_from(w0, coords, n)
    if psd_status(W0).kind is PsdKind.POSITIVE_DEFINITE:
        return W0
    # start from the identity's projection when it helps
    Ns = [_sym_from(v, coords, n) for v in N]
    if not Ns:
        return None
    M0 = W0.to_float().a
    D = [x.to_float().a for x in Ns]
    G = np.array([x.flatten() for x in D]).T
    tI, *_ = np.linalg.lstsq(G, (np.eye(n) - M0).flatten(), rcond=None)
    t, lam = max_min_eig(M0, D, bound=bound, x0=np.clip(tI, -bound, bound), stop_at=1e-3)
    if lam <= 0:
        return None
    for den in (10 ** 3, 10 ** 6, 10 ** 9):
        tr = _rationalize(t, den)
        W = W0
        for a, Nk in zip(tr, Ns):
            if a != 0:
                W = W + Nk * a
        if psd_status(W).kind is PsdKind.POSITIVE_DEFINITE:
            return W
    return None


def strictly_feasible_dual(inst: SdpInstance):
    """A positive definite Y with A_i . Y = c_i, verified exactly, or None."""
    return find_pd_solution(list(inst.A), list(inst.c))


# -- primal side --------------------------------------------------------------------

def primal_analysis(inst: SdpInstance) -> PrimalAnalysis:
    m, n = inst.m, inst.n
    A, B, c = inst.A, inst.B, inst.c
    eqs = []
    zero = []
    x0, N = [Fraction(0)] * m, [list(_unit(m, i)) for i in range(m)]
    infeasible = False
    changed = True
    while changed and not infeasible:
        changed = False
        for d in range(n):
            if d in zero:
                continue
            a = [Ai.a[d, d] for Ai in A]
            const = B.a[d, d] - _dot(a, x0)
            if any(_dot(a, v) != 0 for v in N):
                continue
            if const < 0:
                infeasible = True
                break
            if const != 0:
                continue
            zero.append(d)
            for j in range(n):
                co = [Ai.a[j, d] for Ai in A]
                if any(v != 0 for v in co) or B.a[j, d] != 0:
                    eqs.append((co, B.a[j, d]))
            sol = solve_affine([e[0] for e in eqs], [e[1] for e in eqs], m)
            if sol is None:
                infeasible = True
                break
            x0, N = sol
            changed = True
    if eqs:
        R, piv = rref([list(co) + [r] for co, r in eqs], m + 1)
        equations = [(r[:m], r[m]) for r in R]
    else:
        equations = []
    if infeasible:
        return PrimalAnalysis(-INF, equations, None, tuple(zero), -1, False)
    forces_zero = not N and all(v == 0 for v in x0)
    if any(_dot(c, v) != 0 for v in N):
        return PrimalAnalysis(INCONCLUSIVE, equations, None, tuple(zero), len(N), forces_zero)
    value = _dot(c, x0)
    point = _feasible_point(inst, x0, N, zero)
    if point is None:
        return PrimalAnalysis(INCONCLUSIVE, equations, None, tuple(zero), len(N), forces_zero)
    return PrimalAnalysis(value, equations, tuple(point), tuple(zero), len(N), forces_zero)


def _feasible_point(inst, x0, N, zero):
    m = inst.m
    cands = []
    z = [Fraction(0)] * m
    if not N:
        cands.append(x0)
    else:
        # 0 lies in the affine set iff x0 is in span(N)
        sol = solve_affine([list(r) for r in zip(*N)], [-v for v in x0], len(N))
        if sol is not None:
            cands.append(z)
        cands.append(x0)
    for x in cands:
        if slack_at(inst, x).feasible:
            return x
    if not N:
        return None
    keep = [i for i in range(inst.n) if i not in zero]
    Z0 = inst.B - _combo(inst.A, x0)
    dirs = [-_combo(inst.A, v) for v in N]
    M0 = Z0.submatrix(keep).to_float().a
    D = [d.submatrix(keep).to_float().a for d in dirs]
    t, lam = max_min_eig(M0, D, bound=1e3, stop_at=1e-2)
    if lam < -1e-9:
        return None
    for den in (10 ** 2, 10 ** 4, 10 ** 6, 10 ** 9):
        tr = _rationalize(t, den)
        x = [x0[i] + sum((a * v[i] for a, v in zip(tr, N)), Fraction(0)) for i in range(m)]
        if slack_at(inst, x).feasible:
            return x
    return None


# -- dual elimination ---------------------------------------------------------------

def forced_subspace(mats, rhs, V):
    """Coefficient subspace that can contain psd restrictions with zero rhs.

    Starting from {l : l . rhs = 0}, any diagonal entry of
    V^T (sum l_i M_i) V that vanishes identically on the current subspace
    forces its row to vanish as well (a psd matrix with a zero diagonal
    entry has a zero row).  Iterates to a fixpoint; returns a basis of
    the final subspace.  Every psd combination with zero rhs lies in it.
    """
    k = len(mats)
    Rs = [restrict_basis(M, V) for M in mats]
    d = Rs[0].n if Rs else 0
    eq = []
    if rhs is not None and any(v != 0 for v in rhs):
        eq.append(list(rhs))
    basis = nullspace(eq, k)
    done = set()
    changed = True
    while changed and basis:
        changed = False
        for p in range(d):
            if p in done:
                continue
            diag = [R.a[p, p] for R in Rs]
            if any(_dot(diag, b) != 0 for b in basis):
                continue
            done.add(p)
            for q in range(d):
                row = [R.a[p, q] for R in Rs]
                if any(v != 0 for v in row):
                    eq.append(row)
            basis = nullspace(eq, k)
            changed = True
            break
    return basis, Rs


def _search_forced(mats, rhs, V):
    """Exact psd element of the forced subspace with a nonzero restriction, or None."""
    basis, Rs = forced_subspace(mats, rhs, V)
    if not basis:
        return None
    cands = []
    for b in basis:
        cands += [b, [-v for v in b]]
    if len(basis) > 1:
        s = [sum(col, Fraction(0)) for col in zip(*basis)]
        cands += [s, [-v for v in s]]
    for co in cands:
        R = _combo(Rs, co)
        if not R.is_zero() and psd_status(R).is_psd:
            return tuple(co)
    if len(basis) > 1:
        co = _lp_psd_direction(Rs, basis)
        if co is not None:
            return co
    return None


def _lp_psd_direction(Rs, basis):
    """Numeric search for a psd member of the pencil over ``basis``; verified exactly."""
    d = Rs[0].n
    B = [_combo(Rs, b).to_float().a for b in basis]
    best = None
    rng = np.random.default_rng(0)
    for _ in range(8):
        x0 = rng.normal(size=len(B))
        x0 /= np.linalg.norm(x0)
        t, lam = max_min_eig(np.zeros((d, d)), B, bound=1.0, x0=x0)
        if np.linalg.norm(t) > 1e-6 and (best is None or lam > best[1]):
            best = (t, lam)
    if best is None or best[1] < -1e-9:
        return None
    for den in (10, 10 ** 3, 10 ** 6):
        tr = _rationalize(best[0], den)
        co = [sum((a * b[i] for a, b in zip(tr, basis)), Fraction(0)) for i in range(len(basis[0]))]
        R = _combo(Rs, co)
        if not R.is_zero() and psd_status(R).is_psd:
            return tuple(co)
    return None


@dataclass
class _Elim:
    V: np.ndarray
    trace: list
    status: str  # "open" or "infeasible"
    members: list  # (coeffs, sign) of reducing steps


def _eliminate(mats, rhs, order=None, use_fallbacks=True) -> _Elim:
    k = len(mats)
    n = mats[0].n
    V = full_face(n).basis()
    trace, members = [], []
    order = list(range(k)) if order is None else list(order)

    def try_coeffs(co, idx):
        nonlocal V
        if V.shape[1] == 0:
            r = _dot(co, rhs)
            if r != 0:
                trace.append(TraceStep(idx, tuple(co), "zero-restriction-nonzero-rhs", (), 0, 0))
                return "infeasible"
            return None
        M = _combo(mats, co)
        R = restrict_basis(M, V)
        r = _dot(co, rhs)
        rb = V.shape[1]
        if R.is_zero():
            if r != 0:
                trace.append(TraceStep(idx, tuple(co), "zero-restriction-nonzero-rhs", (), rb, rb))
                return "infeasible"
            return None
        st = psd_status(R)
        if st.is_psd:
            if r == 0:
                Vn = reduce_face(V, R)
                trace.append(TraceStep(idx, tuple(co), "psd-zero-rhs", _zeroed(V, Vn), rb, Vn.shape[1]))
                members.append((tuple(co), 1))
                V = Vn
                return "reduced"
            if r < 0:
                trace.append(TraceStep(idx, tuple(co), "psd-negative-rhs", (), rb, rb))
                return "infeasible"
        elif st.is_nsd:
            if r == 0:
                Vn = reduce_face(V, -R)
                neg = tuple(-v for v in co)
                trace.append(TraceStep(idx, neg, "nsd-zero-rhs", _zeroed(V, Vn), rb, Vn.shape[1]))
                members.append((neg, -1))
                V = Vn
                return "reduced"
            if r > 0:
                trace.append(TraceStep(idx, tuple(co), "nsd-positive-rhs", (), rb, rb))
                return "infeasible"
        return None

    while True:
        progress = False
        for i in order:
            res = try_coeffs(_unit(k, i), i)
            if res == "infeasible":
                return _Elim(V, trace, "infeasible", members)
            progress |= res == "reduced"
        if progress:
            continue
        if not use_fallbacks or V.shape[1] == 0:
            break
        # row-reduced basis of the constraint span (invariant under row operations)
        R, piv = rref([list(co) for co in _span_rows(mats, rhs, k)], k)
        for row in R:
            res = try_coeffs(tuple(row), None)
            if res == "infeasible":
                return _Elim(V, trace, "infeasible", members)
            progress |= res == "reduced"
        if progress:
            continue
        co = _search_forced(mats, rhs, V)
        if co is None:
            break
        res = try_coeffs(co, None)
        if res == "infeasible":
            return _Elim(V, trace, "infeasible", members)
        if res != "reduced":
            break
    return _Elim(V, trace, "open", members)


def _span_rows(mats, rhs, k):
    """Coefficient vectors of the rref basis of the augmented constraint rows.

    Row-reduces [svec(M_i) | rhs_i] and expresses each reduced row back
    as a combination of the original constraints.
    """
    n = mats[0].n
    coords = [(i, i) for i in range(n)] + [(i, j) for i in range(n) for j in range(i + 1, n)]
    cols = len(coords) + 1
    aug = [[M.a[i, j] for i, j in coords] + [rhs[t]] + [Fraction(int(s == t)) for s in range(k)]
           for t, M in enumerate(mats)]
    R, piv = rref(aug, cols)
    return [r[cols:] for r in R]


def _ldl_congruence(M: SymMat):
    """Exact P with P^T M P diagonal (symmetric elimination with pairing)."""
    n = M.n
    A = [[Fraction(v) for v in r] for r in M.a]
    P = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]

    def col_op(dst, src, f):  # column dst += f * column src, applied congruently
        for r in range(n):
            A[r][dst] += f * A[r][src]
        for cidx in range(n):
            A[dst][cidx] += f * A[src][cidx]
        for r in range(n):
            P[r][dst] += f * P[r][src]

    for k in range(n):
        if A[k][k] == 0:
            j = next((j for j in range(k + 1, n) if A[j][j] != 0), None)
            if j is not None:
                A[k], A[j] = A[j], A[k]
                for r in A:
                    r[k], r[j] = r[j], r[k]
                for r in P:
                    r[k], r[j] = r[j], r[k]
            else:
                j = next((j for j in range(k + 1, n) if A[k][j] != 0), None)
                if j is None:
                    continue
                col_op(k, j, Fraction(1))
        p = A[k][k]
        if p == 0:
            continue
        for j in range(k + 1, n):
            if A[k][j] != 0:
                col_op(j, k, -A[k][j] / p)
    return np.array(P, dtype=object)


def _terminal(mats, rhs, B, V):
    """Solve the restricted problem on face V when it is diagonalizable.

    Returns (value, reduced_dual, status) with status in
    {"optimal", "infeasible", "unbounded", "inconclusive"}.
    """
    k = len(mats)
    if V.shape[1] == 0:
        if any(v != 0 for v in rhs):
            return INF, None, "infeasible"
        return Fraction(0), {"sigma": [], "s": 0, "c2prime": "0"}, "optimal"
    Rs = [restrict_basis(M, V) for M in mats]
    Rb = restrict_basis(B, V)
    live = []
    for R, r in zip(Rs, rhs):
        if R.is_zero():
            if r != 0:
                return INF, None, "infeasible"
            continue
        live.append((R, r))
    d = V.shape[1]
    stacked = [list(row) for R, _ in live for row in R.a] + [list(row) for row in Rb.a]
    Rr, piv = rref(stacked, d)
    if not Rr:
        return Fraction(0), {"sigma": [], "s": 0, "c2prime": "0"}, "optimal"
    U = np.array(Rr, dtype=object).T  # columns span the joint range
    Ls = [restrict_basis(R, U) for R, _ in live]
    Lb = restrict_basis(Rb, U)
    h = [r for _, r in live]
    mats_u = Ls + [Lb]
    if not all(M.is_diagonal() for M in mats_u):
        P = None
        for M in mats_u:
            Pc = _ldl_congruence(M)
            if all(congruence(X, Pc, check=False).is_diagonal() for X in mats_u):
                P = Pc
                break
        if P is None:
            return INCONCLUSIVE, None, "inconclusive"
        Ls = [congruence(X, P, check=False) for X in Ls]
        Lb = congruence(Lb, P, check=False)
    b = Lb.diagonal()
    G = [L.diagonal() for L in Ls]
    res = lp_min(b, G, h)
    reduced = _reduced_summary(b, G, h)
    return res.value, reduced, res.status


def _reduced_summary(b, G, h):
    if len(G) != 1:
        return {"objective": [rat_str(v) for v in b], "constraints": [[rat_str(v) for v in g] for g in G],
                "rhs": [rat_str(v) for v in h]}
    g, c = G[0], h[0]
    sigma, s, extra = [], 0, 0
    template = True
    for bd, gd in zip(b, g):
        if bd > 0:
            sigma.append(gd / bd)
        elif bd == 0:
            if gd < 0:
                s += 1
            elif gd > 0:
                extra += 1
        else:
            template = False
    out = {"sigma": [rat_str(v) for v in sigma], "s": s, "c2prime": rat_str(c)}
    if extra or not template:
        out["template"] = False
        out["objective"] = [rat_str(v) for v in b]
        out["constraint"] = [rat_str(v) for v in g]
    return out


def _recorded_congruence(inst: SdpInstance):
    """Product of all exact congruence transforms recorded in the reform log."""
    T = None
    for op in inst.meta.get("reform_log", []):
        if op.get("op") != "Congruence":
            continue
        try:
            M = [[as_rat(v) for v in r] for r in op["T"]]
        except (TypeError, ValueError):
            return None
        Mo = np.array(M, dtype=object)
        T = Mo if T is None else T.dot(Mo)
    if T is None:
        return None
    n = T.shape[0]
    if all(T[i, j] == int(i == j) for i in range(n) for j in range(n)):
        return None
    return T


def undo_congruences(inst: SdpInstance):
    T = _recorded_congruence(inst)
    if T is None:
        return None
    Ti = np.array(inverse(T.tolist()), dtype=object)
    A = tuple(congruence(a, Ti, check=False) for a in inst.A)
    B = congruence(inst.B, Ti, check=False)
    meta = dict(inst.meta)
    meta["reform_log"] = list(meta.get("reform_log", [])) + [
        {"op": "Congruence", "T": [[rat_str(v) for v in r] for r in Ti]}]
    return SdpInstance(A, B, inst.c, meta)


def certify_gap(inst: SdpInstance, order=None, allow_unmess: bool = True) -> GapCertificate:
    """Exact (primal, dual) optimal values from structural arguments.

    Values are those of the instance as given (after any AddToB shifts);
    subtract ``inst.meta['value_offset']`` to compare with the original.
    Unrecognized structure yields "inconclusive", never a guessed value.
    """
    if not inst.exact:
        raise ValueError("certify_gap needs an exact (rational) instance")
    pa = primal_analysis(inst)
    el = _eliminate(list(inst.A), list(inst.c), order)
    notes = []
    reduced = None
    if el.status == "infeasible":
        dual_value, rule = INF, "infeasible:" + el.trace[-1].rule
        _, reduced, _ = _terminal(list(inst.A), list(inst.c), inst.B, el.V) if el.V.shape[1] else (None, None, None)
    else:
        dual_value, reduced, st = _terminal(list(inst.A), list(inst.c), inst.B, el.V)
        rule = {"optimal": "reduced-lp", "infeasible": "reduced-lp-infeasible",
                "unbounded": "reduced-lp-unbounded"}.get(st, INCONCLUSIVE)
    face = face_from_basis(el.V)
    if dual_value == INCONCLUSIVE and pa.value not in (INCONCLUSIVE,) and not is_inf(pa.value) and pa.value != -INF:
        Y = strictly_feasible_dual(inst)
        if Y is not None:
            dual_value, rule = pa.value, "slater"
            notes.append("dual strictly feasible (exact positive definite point), so no gap")
    cert = GapCertificate(pa.value, dual_value, el.trace, reduced, pa.equations,
                          False, rule, face, pa.point, "as-given", notes)
    if not cert.conclusive and allow_unmess:
        base = undo_congruences(inst)
        if base is not None:
            alt = certify_gap(base, order, allow_unmess=False)
            if alt.conclusive:
                alt.coordinates = "unmessed"
                alt.notes.append("certified after undoing the recorded congruence transforms")
                cert = alt
    pv, dv = cert.primal_value, cert.dual_value
    cert.weakly_infeasible_dual = (is_inf(dv) and isinstance(pv, Fraction))
    if isinstance(pv, Fraction) and isinstance(dv, Fraction) and pv > dv:
        raise AssertionError(f"weak duality violated: {pv} > {dv}")
    return cert


def replay_certificate(inst: SdpInstance, cert: GapCertificate):
    """Re-derive the values by replaying the elimination trace step by step."""
    if cert.coordinates == "unmessed":
        inst = undo_congruences(inst)
    mats, rhs = list(inst.A), list(inst.c)
    V = full_face(inst.n).basis()
    infeasible = False
    for step in cert.elimination_trace:
        co = [as_rat(v) for v in step.coeffs]
        M = _combo(mats, co)
        r = _dot(co, rhs)
        R = restrict_basis(M, V) if V.shape[1] else None
        if step.rule in ("psd-zero-rhs", "nsd-zero-rhs"):
            if R is None or r != 0 or not psd_status(R).is_psd or R.is_zero():
                raise AssertionError(f"trace step {step} does not replay")
            V = reduce_face(V, R)
        elif step.rule == "psd-negative-rhs":
            assert R is not None and psd_status(R).is_psd and r < 0
            infeasible = True
        elif step.rule == "nsd-positive-rhs":
            assert R is not None and psd_status(R).is_nsd and r > 0
            infeasible = True
        elif step.rule == "zero-restriction-nonzero-rhs":
            assert (R is None or R.is_zero()) and r != 0
            infeasible = True
        else:
            raise AssertionError(f"unknown rule {step.rule}")
    pa = primal_analysis(inst)
    if infeasible:
        dual = INF
    elif cert.dual_rule == "slater":
        dual = pa.value if strictly_feasible_dual(inst) is not None else INCONCLUSIVE
    else:
        dual, _, _ = _terminal(mats, rhs, inst.B, V)
    return pa.value, dual


# -- minimal cones and singularity degree -------------------------------------------

@dataclass
class MinimalCone:
    face: object
    sequence: FrSequence
    chain: FaceChain
    witness: SymMat | None
    confirmed: bool
    feasible: bool
    which: str

    def __iter__(self):
        yield self.face
        yield self.sequence

    def to_dict(self):
        return {"which": self.which, "face": self.face.to_dict(), "face_text": self.face.describe(),
                "sequence": self.sequence.to_dict(), "length": len(self.sequence),
                "minimality_confirmed": self.confirmed, "feasible": self.feasible}


def _system(inst, which):
    w = which.upper() if isinstance(which, str) else which
    if w in ("D", "DUALD", "DUAL"):
        mats, rhs = list(inst.A), list(inst.c)
        labels = [f"A{i + 1}" for i in range(inst.m)]
        return "D", mats, rhs, labels
    if w in ("HD", "HOMOGENEOUSHD", "HOMOGENEOUS"):
        mats = [inst.B] + list(inst.A)
        rhs = [Fraction(0)] * (inst.m + 1)
        labels = ["B"] + [f"A{i + 1}" for i in range(inst.m)]
        return "HD", mats, rhs, labels
    raise ValueError(f"which must be D or HD, got {which!r}")


def _label(co, labels):
    nz = [(a, l) for a, l in zip(co, labels) if a != 0]
    if len(nz) == 1:
        a, l = nz[0]
        if a == 1:
            return l
        if a == -1:
            return "-" + l
        return f"{rat_str(a)}*{l}"
    return " + ".join(f"{rat_str(a)}*{l}" for a, l in nz)


def minimal_cone(inst: SdpInstance, which="D") -> MinimalCone:
    """Terminal face of the elimination chain for (D) or (HD), with a
    maximum-rank feasible point confirming minimality when one is found."""
    if not inst.exact:
        raise ValueError("minimal_cone needs an exact instance")
    tag, mats, rhs, labels = _system(inst, which)
    el = _eliminate(mats, rhs)
    seq_mats = [_combo(mats, co) for co, _ in el.members]
    seq_labels = [_label(co, labels) for co, _ in el.members]
    if seq_mats:
        span = mats if tag == "HD" else [_combo(mats, v) for v in nullspace([list(rhs)], len(mats))] \
            if any(v != 0 for v in rhs) else mats
        chain = verify_fr_sequence(seq_mats, span, require_strict=True, labels=seq_labels)
        chain.sequence.coeffs = [co for co, _ in el.members]
    else:
        chain = FaceChain([full_face(inst.n)], FrSequence([], [], [], True, ()))
    face = face_from_basis(el.V)
    if el.status == "infeasible":
        return MinimalCone(face, chain.sequence, chain, None, False, False, tag)
    if not _same_face(chain.terminal, face):
        raise AssertionError("face chain does not reproduce the elimination face")
    witness, confirmed = None, False
    d = el.V.shape[1]
    if d == 0:
        confirmed = all(v == 0 for v in rhs)
        witness = SymMat.zeros(inst.n)
    else:
        Rs = [restrict_basis(M, el.V) for M in mats]
        W = _face_point(Rs, rhs, d)
        if W is not None:
            Y = SymMat._wrap(el.V.dot(W.a).dot(el.V.T), True)
            if all(v == 0 for v in (np.array(dual_residual_generic(mats, Y)) - np.array(rhs, dtype=object))):
                witness, confirmed = Y, True
    if not confirmed and tag == "D":
        # unresolved restricted system: keep the chain but flag the face
        pass
    return MinimalCone(face, chain.sequence, chain, witness, confirmed, True, tag)


def dual_residual_generic(mats, Y):
    from .symkernel import inner
    return [inner(M, Y) for M in mats]


def _same_face(F1, F2):
    if isinstance(F1, AxisFace) and isinstance(F2, AxisFace):
        return F1.n == F2.n and F1.zero == F2.zero
    return F1.r == F2.r and F1.contains_face(F2) and F2.contains_face(F1)


def _face_point(Rs, rhs, d):
    """Positive definite W (order d) with R_i . W = rhs_i."""
    live = [(R, r) for R, r in zip(Rs, rhs) if not R.is_zero() or r != 0]
    if not live:
        return SymMat.identity(d)
    # diagonal systems: try the LP for a strictly positive diagonal first
    if all(R.is_diagonal() for R, _ in live):
        W = _positive_diagonal_solution([R.diagonal() for R, _ in live], [r for _, r in live], d)
        if W is not None:
            return W
    return find_pd_solution([R for R, _ in live], [r for _, r in live])


def _positive_diagonal_solution(G, h, d):
    from scipy.optimize import linprog

    Gf = np.array([[float(v) for v in g] for g in G])
    hf = np.array([float(v) for v in h])
    # maximize t s.t. G y = h, y_i - t >= 0, t <= 1
    cvec = np.zeros(d + 1)
    cvec[-1] = -1
    A_eq = np.hstack([Gf, np.zeros((len(G), 1))])
    A_ub = np.hstack([-np.eye(d), np.ones((d, 1))])
    res = linprog(cvec, A_ub=A_ub, b_ub=np.zeros(d), A_eq=A_eq, b_eq=hf,
                  bounds=[(None, None)] * d + [(None, 1.0)], method="highs")
    if res.status != 0 or res.x[-1] <= 1e-9:
        return None
    # exact projection onto G y = h along the null space, then check positivity
    sol = solve_affine([list(g) for g in G], list(h), d)
    if sol is None:
        return None
    y0, N = sol
    y_num = res.x[:d]
    for den in (10 ** 3, 10 ** 6, 10 ** 9):
        if N:
            Nf = np.array([[float(v) for v in b] for b in N]).T
            t, *_ = np.linalg.lstsq(Nf, y_num - np.array([float(v) for v in y0]), rcond=None)
            tr = _rationalize(t, den)
            y = [y0[i] + sum((a * b[i] for a, b in zip(tr, N)), Fraction(0)) for i in range(d)]
        else:
            y = list(y0)
        if all(v > 0 for v in y):
            return SymMat.diag(y)
    return None


_THEOREM = {
    # family -> which -> function of m giving the singularity degree
    "small": {"D": lambda m: 1},
    "single-finite": {"D": lambda m: m - 1},
    "double": {"D": lambda m: m - 1, "HD": lambda m: m},
    "example51": {"HD": lambda m: 3},
}


def _recognized_family(inst):
    from . import generators as gen

    fam = inst.meta.get("family")
    m = inst.meta.get("m_param")
    try:
        if fam == "small":
            ref = gen.gen_small(inst.meta.get("scale", 1))
        elif fam == "single-finite":
            ref = gen.gen_single(m, inst.meta.get("scale", 1), False)
        elif fam == "single-inf":
            ref = gen.gen_single(m, inst.meta.get("scale", 1), True)
        elif fam == "double":
            ref = gen.gen_double(m)
        elif fam == "example51":
            ref = gen.gen_example51()
        else:
            return None
    except (TypeError, ValueError):
        return None
    if ref.same_data(inst):
        return fam
    return None


def singularity_degree(inst: SdpInstance, which="D", trials: int = 1000, rng_seed: int = 0) -> dict:
    """Singularity degree of (D) or (HD).

    tag "exact": length <= 1 with a confirmed minimal face, or length 0
    with a strictly feasible point.  tag "theorem": a recognized clean
    family whose chain length matches the known value and whose
    claim_check passes.  Otherwise tag "upper" (sequence length bound).
    """
    mc = minimal_cone(inst, which)
    k = len(mc.sequence)
    out = {"which": mc.which, "sequence_length": k, "sequence": mc.sequence.labels,
           "terminal_face": mc.face.describe(), "minimality_confirmed": mc.confirmed,
           "regularized": list(mc.sequence.regularized) if mc.sequence.regularized is not None else None,
           "lower_bound_check": None}
    if not mc.feasible:
        out.update(value=None, tag="undefined", note="system infeasible; singularity degree is not defined")
        return out
    fam = _recognized_family(inst)
    thm = _THEOREM.get(fam, {}).get(mc.which) if fam else None
    if thm is not None:
        want = thm(inst.m)
        cc = claim_check(inst, which, trials=trials, rng_seed=rng_seed, cone=mc) if trials else None
        out["lower_bound_check"] = cc
        ok = mc.confirmed and k == want and (cc is None or cc["ok"])
        if ok:
            out.update(value=k, tag="theorem")
            return out
        out["note"] = f"expected {want} from the family result, chain gives {k}"
    if mc.confirmed and k <= 1:
        out.update(value=k, tag="exact")
        return out
    if mc.confirmed and (out["lower_bound_check"] or {}).get("symbolic_unique"):
        out.update(value=k, tag="exact")
        return out
    out.update(value=k, tag="upper")
    return out


# spans in which the family results state uniqueness of strict sequences
# (indices into the HD list [B, A1, ..., Am] or the D list [A1, ..., Am])
_CLAIM_SPAN = {
    ("double", "HD"): lambda m: [0] + list(range(2, m + 1)),
}


def claim_check(inst: SdpInstance, which="D", trials: int = 1000, rng_seed: int = 0, cone=None,
                span=None) -> dict:
    """Falsification-style check that the facial reduction chain is forced.

    Sequences are drawn from the linear span of the constraint matrices
    (for D: A_1..A_m; for HD: B, A_1..A_m, or the sub-span given by
    ``span`` / the family result).  At every step the exact forced
    subspace L_i is computed and a symbolic check asserts that the
    restrictions over L_i span only the chain's member, so every strict
    step reaches the same face.  Then ``trials`` random strict sequences
    are sampled with integer coefficients in [-5, 5]; each psd draw must
    lie in L_i and reproduce the chain's next face, and draws outside L_i
    must be non-psd (exact test, float min-eigenvalue cross-check).
    """
    mc = cone or minimal_cone(inst, which)
    tag, allm, _, labels = _system(inst, which)
    if span is None:
        fam = _recognized_family(inst)
        f = _CLAIM_SPAN.get((fam, tag))
        span = f(inst.m) if f else list(range(len(allm)))
    mats = [allm[i] for i in span]
    k = len(mats)
    faces = mc.chain.faces
    steps = len(mc.sequence)
    rng = random.Random(rng_seed)
    adm = [list(_unit(k, i)) for i in range(k)]
    symbolic = []
    forced = []
    Vs = [f.basis() for f in faces]
    from .rational import rank as _rank
    for i in range(steps):
        basis, Rs = forced_subspace(mats, None, Vs[i])
        basis = [_integral(b) for b in basis]
        imgs = [_combo(Rs, b) for b in basis]
        member = restrict_basis(mc.sequence.matrices[i], Vs[i])
        nz = [_flat(x) for x in imgs if not x.is_zero()]
        img_rank = _rank(nz) if nz else 0
        uniq = img_rank == 1 and _rank(nz + [_flat(member)]) == 1
        symbolic.append({"step": i + 1, "forced_dim": len(basis), "image_rank": img_rank, "unique": uniq})
        forced.append((basis, Rs))
    counter = []
    stats = {"psd_draws": 0, "nonpsd_draws": 0, "float_agree": 0, "float_disagree": 0}
    passed = 0
    for t in range(trials):
        ok = True
        for i in range(steps):
            basis, Rs = forced[i]
            target = faces[i + 1]
            for attempt in range(12):
                pool = basis if (attempt % 2 == 0 and basis) else adm
                co = _rand_combo(pool, k, rng)
                if co is None:
                    continue
                R = _combo(Rs, co)
                if R.is_zero():
                    continue
                st = psd_status(R)
                if st.is_nsd and not st.is_psd:
                    R, co = -R, [-v for v in co]
                    st = psd_status(R)
                if st.is_psd:
                    stats["psd_draws"] += 1
                    if not _in_span(co, basis):
                        counter.append({"trial": t, "step": i + 1, "coeffs": [rat_str(v) for v in co],
                                        "issue": "psd outside forced subspace"})
                        ok = False
                        break
                    Vn = reduce_face(Vs[i], R)
                    if not _same_face(face_from_basis(Vn), target):
                        counter.append({"trial": t, "step": i + 1, "coeffs": [rat_str(v) for v in co],
                                        "issue": "strict step reaches a different face"})
                        ok = False
                    break
                stats["nonpsd_draws"] += 1
                lam = np.linalg.eigvalsh(R.to_float().a)
                if lam[0] < 0 and lam[-1] > 0:
                    stats["float_agree"] += 1
                else:
                    stats["float_disagree"] += 1
            if not ok:
                break
        passed += ok
    sym_ok = all(s["unique"] for s in symbolic)
    return {"which": tag, "span": [labels[i] for i in span], "trials": trials, "passed": passed,
            "steps": steps, "symbolic": symbolic, "symbolic_unique": sym_ok, **stats,
            "counterexamples": counter[:10],
            "ok": passed == trials and sym_ok and stats["float_disagree"] == 0}


def _integral(v):
    from math import lcm
    L = 1
    for x in v:
        L = lcm(L, Fraction(x).denominator)
    return [Fraction(x) * L for x in v]


def _flat(M: SymMat):
    return list(M.a.flat)


def _rand_combo(pool, k, rng):
    if not pool:
        return None
    for _ in range(20):
        w = [rng.randint(-5, 5) for _ in pool]
        if any(w):
            co = [sum((a * b[i] for a, b in zip(w, pool)), Fraction(0)) for i in range(k)]
            if any(co):
                return co
    return None


def _in_span(co, basis):
    if not basis:
        return all(v == 0 for v in co)
    sol = solve_affine([list(r) for r in zip(*basis)], list(co), len(basis))
    return sol is not None


# -- bounds ---------------------------------------------------------------------------

def bounds_check(inst: SdpInstance, trials: int = 200) -> dict:
    """Check d(D) <= m and d(HD) <= m+1 on the found sequences; on the
    d(HD) = m+1 path also check that x = 0 is the only primal point, that
    (D) is strictly feasible and that both values are 0."""
    m = inst.m
    rep = {"m": m, "violations": []}
    mcD = minimal_cone(inst, "D")
    mcH = minimal_cone(inst, "HD")
    rep["d_D_upper"] = len(mcD.sequence) if mcD.feasible else None
    rep["d_HD_upper"] = len(mcH.sequence)
    if mcD.feasible and len(mcD.sequence) > m:
        rep["violations"].append(f"d(D) sequence length {len(mcD.sequence)} > m = {m}")
    if len(mcH.sequence) > m + 1:
        rep["violations"].append(f"d(HD) sequence length {len(mcH.sequence)} > m+1 = {m + 1}")
    if len(mcH.sequence) == m + 1:
        cc = claim_check(inst, "HD", trials=trials, cone=mcH)
        established = mcH.confirmed and cc["symbolic_unique"] and cc["ok"]
        rep["d_HD_equals_m_plus_1"] = established
        if established:
            pa = primal_analysis(inst)
            Y = _meta_dual_point(inst) or strictly_feasible_dual(inst)
            cert = certify_gap(inst)
            rep["primal_forces_zero"] = pa.forces_zero
            rep["dual_strictly_feasible"] = Y is not None
            rep["dual_point"] = None if Y is None else [[rat_str(v) for v in r] for r in Y.a]
            rep["values"] = [_fmt(cert.primal_value), _fmt(cert.dual_value)]
            if not pa.forces_zero:
                rep["violations"].append("d(HD) = m+1 but x = 0 is not the only feasible point")
            if Y is None:
                rep["violations"].append("d(HD) = m+1 but no strictly feasible dual point found")
            if not (cert.primal_value == 0 and cert.dual_value == 0):
                rep["violations"].append("d(HD) = m+1 but values are not both 0")
    rep["ok"] = not rep["violations"]
    return rep


def _meta_dual_point(inst):
    pt = inst.meta.get("dual_point")
    if pt is None:
        return None
    try:
        Y = SymMat([[as_rat(v) for v in r] for r in pt])
    except (TypeError, ValueError):
        return None
    if Y.n != inst.n or any(v != 0 for v in dual_residual(inst, Y)):
        return None
    return Y if psd_status(Y).kind is PsdKind.POSITIVE_DEFINITE else None


# -- weak infeasibility probe --------------------------------------------------------

def weak_infeasibility_probe(inst: SdpInstance, max_iters: int = 10000, tol: float = 1e-14,
                             method: str = "newton") -> dict:
    """Distance from the dual affine set {Y : A_i . Y = c_i} to the psd cone, per iteration.

    method="ap": alternating projections (least-squares projection onto
    the affine set, eigenvalue clipping onto the cone); the recorded
    value is the distance of the affine iterate to the cone.

    method="newton" (default): the same distance is driven down by a
    damped Newton method on f(Y) = dist(Y, psd)^2 / 2 over the affine
    set, using the generalized Hessian of the clipped spectrum and
    Jacobi scaling.  Weakly infeasible systems approach the cone only at
    infinity, where alternating projections slow to a crawl
    (distance ~ k^(-1/4) on the small single-family instances) while the
    Newton steps grow the iterate geometrically.  Steps are accepted only
    when f decreases, so the trace is monotone in both modes.
    """
    from scipy.linalg import null_space

    n = inst.n
    iu = np.triu_indices(n)
    w = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    A = np.array([a.to_float().a[iu] * w for a in inst.A])
    c = np.array([float(v) for v in inst.c])

    def mat(v):
        X = np.zeros((n, n))
        X[iu] = v / w
        return X + np.triu(X, 1).T

    def dist_of(X):
        if not np.all(np.isfinite(X)):
            return np.inf
        lam = np.linalg.eigvalsh(X)
        return float(np.linalg.norm(np.minimum(lam, 0)))

    y0 = np.linalg.lstsq(A, c, rcond=None)[0]
    affine_gap = float(np.linalg.norm(A @ y0 - c))
    N = null_space(A)
    if method == "ap":
        trace = _ap_trace(mat, y0, N, dist_of, max_iters, tol)
    elif method == "newton":
        trace = _newton_trace(mat, y0, N, max_iters, tol)
    else:
        raise ValueError(f"unknown probe method {method!r}")
    return {"distances": trace, "final": trace[-1], "iterations": len(trace) - 1, "method": method,
            "affine_residual": affine_gap,
            "monotone": all(b <= a * (1 + 1e-12) + 1e-300 for a, b in zip(trace, trace[1:]))}


def _ap_trace(mat, y0, N, dist_of, max_iters, tol):
    n = mat(y0).shape[0]
    iu = np.triu_indices(n)
    w = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    Y = mat(y0)
    trace = [dist_of(Y)]
    for _ in range(max_iters):
        if trace[-1] <= tol:
            break
        lam, Q = np.linalg.eigh(Y)
        P = (Q * np.maximum(lam, 0)) @ Q.T
        v = P[iu] * w
        # orthogonal projection back onto y0 + range(N)
        Y = mat(y0 + N @ (N.T @ (v - y0)))
        trace.append(dist_of(Y))
    return trace


def _newton_trace(mat, y0, N, max_iters, tol):
    k = N.shape[1]
    Ds = np.array([mat(N[:, j]) for j in range(k)])

    def evaluate(t, second=True):
        X = mat(y0 + N @ t)
        if not np.all(np.isfinite(X)):
            return np.inf, None, None
        lam, Q = np.linalg.eigh(X)
        neg = np.minimum(lam, 0)
        f = 0.5 * float(neg @ neg)
        if not second:
            return f, None, None
        g = np.einsum("kij,ij->k", Ds, (Q * neg) @ Q.T)
        L1, L2 = np.meshgrid(lam, lam, indexing="ij")
        N1, N2 = np.meshgrid(neg, neg, indexing="ij")
        den = L1 - L2
        same = np.abs(den) <= 1e-14 * max(1.0, float(np.abs(lam).max()))
        # divided differences of min(., 0); the derivative on ties
        G = np.where(same, (np.minimum(L1, L2) < 0).astype(float), (N1 - N2) / np.where(same, 1.0, den))
        Dt = np.einsum("ai,kab,bj->kij", Q, Ds, Q)
        H = np.einsum("kij,ij,lij->kl", Dt, G, Dt)
        return f, g, H

    t = np.zeros(k)
    f, g, H = evaluate(t)
    trace = [np.sqrt(2 * f)]
    if k == 0:
        return trace
    mu = 1e-3
    for _ in range(max_iters):
        if trace[-1] <= tol:
            break
        d = np.sqrt(np.maximum(np.diag(H), 1e-300))
        Hs = H / np.outer(d, d)
        while True:
            try:
                step = np.linalg.solve(Hs + mu * np.eye(k), -g / d) / d
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                fn = evaluate(t + step, False)[0]
                if fn < f:
                    t = t + step
                    mu = max(mu / 3, 1e-300)
                    break
            mu *= 4
            if mu > 1e300:
                return trace
        f, g, H = evaluate(t)
        trace.append(np.sqrt(2 * f))
    return trace
