"""Primal/dual SDP pair and its gap-preserving reformulations.

    (P)  sup c^T x   s.t.  sum_i x_i A_i <= B
    (D)  inf B . Y   s.t.  A_i . Y = c_i,  Y >= 0
    (HD)              A_i . Y = 0,  B . Y = 0,  Y >= 0

Indices in this API are 0-based.  ``AddToB`` shifts both optimal values
by ``lam * c_j``; the cumulative shift is kept in ``meta["value_offset"]``
so certificates can be compared with the unreformulated problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .rational import as_rat, is_inf, rat_str
from .symkernel import SymMat, as_square, congruence, inner, is_exact_array, psd_status, _check_invertible

__all__ = [
    "SdpInstance", "AddToB", "Swap", "Combine", "Congruence", "ReformOp", "Slack",
    "slack_at", "apply_reform", "apply_reforms", "dual_residual", "hd_constraints",
    "b_identity_rank", "InvalidReformError", "op_from_dict",
]


class InvalidReformError(ValueError):
    pass


def _scalar(v, exact):
    if exact:
        return as_rat(v)
    return float(v)


def b_identity_rank(B: SymMat, tol: float = 0.0):
    """r if B == I_r (+) 0 (up to tol for float B), else None."""
    n = B.n
    a = B.a
    r = 0
    while r < n and (a[r, r] == 1 if B.exact else abs(a[r, r] - 1) <= tol):
        r += 1
    I = np.zeros((n, n))
    I[:r, :r] = np.eye(r)
    if B.exact:
        ok = all(a[i, j] == I[i, j] for i in range(n) for j in range(n))
    else:
        ok = bool(np.max(np.abs(B.a - I)) <= tol)
    return r if ok else None


@dataclass(frozen=True, eq=False)
class SdpInstance:
    A: tuple
    B: SymMat
    c: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        A = tuple(self.A)
        if not A:
            raise ValueError("need at least one constraint matrix")
        n = self.B.n
        if n < 2:
            raise ValueError("order n must be at least 2")
        for i, Ai in enumerate(A):
            if not isinstance(Ai, SymMat):
                raise TypeError(f"A[{i}] is not a SymMat")
            if Ai.n != n:
                raise ValueError(f"A[{i}] has order {Ai.n}, B has order {n}")
        if len(self.c) != len(A):
            raise ValueError(f"len(c) = {len(self.c)} but m = {len(A)}")
        exact = self.B.exact and all(Ai.exact for Ai in A) and all(
            not isinstance(v, float) and not isinstance(v, np.floating) for v in self.c)
        if exact:
            c = tuple(as_rat(v) for v in self.c)
        else:
            c = tuple(float(v) for v in self.c)
            A = tuple(Ai.to_float() for Ai in A)
            object.__setattr__(self, "B", self.B.to_float())
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)
        meta = dict(self.meta)
        meta.setdefault("name", "")
        meta.setdefault("assumption11_holds", False)
        meta.setdefault("value_offset", Fraction(0) if exact else 0.0)
        meta.setdefault("reform_log", [])
        if meta["assumption11_holds"] and b_identity_rank(self.B, 1e-12) is None:
            raise ValueError("assumption11_holds set but B is not I_r (+) 0")
        object.__setattr__(self, "meta", meta)

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return self.B.n

    @property
    def exact(self) -> bool:
        return self.B.exact

    @property
    def name(self) -> str:
        return self.meta.get("name", "")

    def with_meta(self, **kw) -> "SdpInstance":
        meta = dict(self.meta)
        meta.update(kw)
        return SdpInstance(self.A, self.B, self.c, meta)

    def to_float(self) -> "SdpInstance":
        if not self.exact:
            return self
        meta = dict(self.meta)
        meta["value_offset"] = float(meta.get("value_offset", 0))
        return SdpInstance(tuple(a.to_float() for a in self.A), self.B.to_float(),
                           tuple(float(v) for v in self.c), meta)

    def same_data(self, other: "SdpInstance") -> bool:
        """Entrywise equality of (A, B, c); metadata ignored."""
        return (self.m == other.m and self.n == other.n and self.B == other.B
                and all(a == b for a, b in zip(self.A, other.A))
                and all(x == y for x, y in zip(self.c, other.c)))

    def __repr__(self):
        return f"SdpInstance(name={self.name!r}, m={self.m}, n={self.n}, exact={self.exact})"


# -- reformulation operations ------------------------------------------------------

@dataclass(frozen=True)
class AddToB:
    """B <- B + lam * A_j."""
    j: int
    lam: Any

    def to_dict(self):
        return {"op": "AddToB", "j": self.j, "lam": _num_str(self.lam)}


@dataclass(frozen=True)
class Swap:
    i: int
    j: int

    def to_dict(self):
        return {"op": "Swap", "i": self.i, "j": self.j}


@dataclass(frozen=True)
class Combine:
    """(A_i, c_i) <- lam (A_i, c_i) + mu (A_j, c_j)."""
    i: int
    lam: Any
    j: int
    mu: Any = 0

    def to_dict(self):
        return {"op": "Combine", "i": self.i, "lam": _num_str(self.lam), "j": self.j, "mu": _num_str(self.mu)}


@dataclass(frozen=True, eq=False)
class Congruence:
    """All matrices M <- T^T M T.  A dual solution Y' maps back as T Y' T^T."""
    T: Any

    def matrix(self):
        return as_square(self.T)

    def to_dict(self):
        T = self.matrix()
        if T.dtype == object:
            return {"op": "Congruence", "T": [[rat_str(v) for v in r] for r in T]}
        return {"op": "Congruence", "T": T.tolist()}


ReformOp = AddToB | Swap | Combine | Congruence


def _num_str(v):
    if isinstance(v, (float, np.floating)):
        return float(v)
    return rat_str(v)


def _num_load(v):
    return float(v) if isinstance(v, float) else as_rat(v)


def op_from_dict(d) -> ReformOp:
    kind = d["op"]
    if kind == "AddToB":
        return AddToB(int(d["j"]), _num_load(d["lam"]))
    if kind == "Swap":
        return Swap(int(d["i"]), int(d["j"]))
    if kind == "Combine":
        return Combine(int(d["i"]), _num_load(d["lam"]), int(d["j"]), _num_load(d["mu"]))
    if kind == "Congruence":
        T = d["T"]
        if T and isinstance(T[0][0], float):
            return Congruence(np.array(T, dtype=float))
        return Congruence([[as_rat(v) for v in r] for r in T])
    raise ValueError(f"unknown reformulation op {kind!r}")


def _check_index(k, m, what):
    if not (isinstance(k, (int, np.integer)) and 0 <= k < m):
        raise InvalidReformError(f"{what} index {k!r} out of range 0..{m - 1}")


def apply_reform(inst: SdpInstance, op: ReformOp) -> SdpInstance:
    m = inst.m
    A, B, c = list(inst.A), inst.B, list(inst.c)
    meta = dict(inst.meta)
    offset = meta.get("value_offset", 0)
    ex = inst.exact
    if isinstance(op, AddToB):
        _check_index(op.j, m, "AddToB")
        lam = _scalar(op.lam, ex and not isinstance(op.lam, float))
        if lam == 0:
            raise InvalidReformError("AddToB needs lam != 0")
        B = B + A[op.j] * lam
        offset = offset + lam * c[op.j]
    elif isinstance(op, Swap):
        _check_index(op.i, m, "Swap")
        _check_index(op.j, m, "Swap")
        if op.i == op.j:
            raise InvalidReformError("Swap needs i != j")
        A[op.i], A[op.j] = A[op.j], A[op.i]
        c[op.i], c[op.j] = c[op.j], c[op.i]
    elif isinstance(op, Combine):
        _check_index(op.i, m, "Combine")
        _check_index(op.j, m, "Combine")
        lam = _scalar(op.lam, ex and not isinstance(op.lam, float))
        mu = _scalar(op.mu, ex and not isinstance(op.mu, float))
        if lam == 0:
            raise InvalidReformError("Combine needs lam != 0")
        if op.i == op.j and mu != 0:
            raise InvalidReformError("Combine with i == j needs mu == 0")
        Ai, Aj = A[op.i], A[op.j]
        A[op.i] = Ai * lam + Aj * mu if mu != 0 else Ai * lam
        c[op.i] = lam * c[op.i] + mu * c[op.j]
    elif isinstance(op, Congruence):
        T = op.matrix()
        _check_invertible(T if T.dtype == object else np.asarray(T, float), T.dtype == object)
        A = [congruence(a, T, check=False) for a in A]
        B = congruence(B, T, check=False)
    else:
        raise InvalidReformError(f"not a reformulation op: {op!r}")
    meta["value_offset"] = offset
    meta["reform_log"] = list(meta.get("reform_log", [])) + [op.to_dict()]
    if meta.get("assumption11_holds"):
        meta["assumption11_holds"] = b_identity_rank(B, 1e-12) is not None
    return SdpInstance(tuple(A), B, tuple(c), meta)


def apply_reforms(inst: SdpInstance, ops: Sequence[ReformOp]) -> SdpInstance:
    for op in ops:
        inst = apply_reform(inst, op)
    return inst


# -- slack, residuals --------------------------------------------------------------

@dataclass(frozen=True)
class Slack:
    x: tuple
    Z: SymMat
    feasible: bool
    status: Any


def slack_at(inst: SdpInstance, x) -> Slack:
    if len(x) != inst.m:
        raise ValueError(f"len(x) = {len(x)} but m = {inst.m}")
    exact = inst.exact and is_exact_array(np.array(list(x), dtype=object).reshape(1, -1))
    xs = tuple(as_rat(v) if exact else float(v) for v in x)
    Z = inst.B if exact else inst.B.to_float()
    for xi, Ai in zip(xs, inst.A):
        if xi != 0:
            Z = Z - Ai * xi
    st = psd_status(Z)
    return Slack(xs, Z, st.is_psd, st)


def dual_residual(inst: SdpInstance, Y: SymMat) -> list:
    if Y.n != inst.n:
        raise ValueError(f"Y has order {Y.n}, instance has order {inst.n}")
    return [inner(Ai, Y) - ci for Ai, ci in zip(inst.A, inst.c)]


def hd_constraints(inst: SdpInstance) -> list:
    return list(inst.A) + [inst.B]


def shift_value(v, offset):
    """Value of the unreformulated problem given a reformulated one."""
    if is_inf(v) or isinstance(v, str):
        return v
    return v - offset
