"""Symmetric matrices over exact rationals or binary64.

``SymMat`` is immutable.  Exact matrices hold ``Fraction`` entries in an
object array, float matrices a float64 array; both are symmetric by
construction.  Definiteness of exact matrices is decided by fraction-free
symmetric elimination (see ``kernels.int_inertia``), never by eigenvalues.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction

import numpy as np

from . import kernels
from .rational import as_rat, det as _det_exact, integerize, inverse as _inv_exact

__all__ = [
    "Tolerances", "get_tolerances", "set_tolerances", "SymMat", "PsdKind", "PsdStatus",
    "inner", "congruence", "schur_complement", "psd_status", "eig_sym", "rank_psd",
    "inertia", "as_square", "is_exact_array", "NotSymmetricError", "SingularTransformError",
    "max_min_eig",
]


class NotSymmetricError(ValueError):
    pass


class SingularTransformError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    psd: float = 1e-9
    eig: float = 1e-10
    rank: float = 1e-8
    zero: float = 1e-7

    @classmethod
    def parse(cls, text, base=None):
        """Parse ``"psd=1e-9,zero=1e-6"`` style overrides."""
        base = base or cls()
        kw = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, sep, val = part.partition("=")
            key = key.strip()
            if not sep or key not in ("psd", "eig", "rank", "zero"):
                raise ValueError(f"bad tolerance entry {part!r}")
            kw[key] = float(val)
        return replace(base, **kw)

    @classmethod
    def from_env(cls):
        text = os.environ.get("GAPFORGE_TOLERANCES", "")
        return cls.parse(text) if text else cls()


_TOL = Tolerances.from_env()


def get_tolerances() -> Tolerances:
    return _TOL


def set_tolerances(tol: Tolerances) -> Tolerances:
    """Replace the process-wide defaults; returns the previous value."""
    global _TOL
    old, _TOL = _TOL, tol
    return old


def _exact_entry(v):
    return isinstance(v, (int, Fraction, str, np.integer)) and not isinstance(v, bool)


def is_exact_array(a) -> bool:
    a = np.asarray(a, dtype=object) if not isinstance(a, np.ndarray) else a
    if a.dtype.kind in "iu":
        return True
    if a.dtype != object:
        return False
    return all(_exact_entry(v) for v in a.flat)


def as_square(T, exact=None):
    """Square matrix as exact object array or float array."""
    if isinstance(T, SymMat):
        return T.a
    a = np.array(T, dtype=object)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if exact is None:
        exact = is_exact_array(a)
    if exact:
        return np.vectorize(as_rat, otypes=[object])(a) if a.size else a
    return np.array(T, dtype=float)


class SymMat:
    """Dense symmetric matrix.

    ``SymMat(entries)`` picks the exact backend when every entry is an int,
    Fraction or rational string, else float.  Exact input must be exactly
    symmetric; float input must be symmetric to ~1e-12 relative and is
    then symmetrized.
    """

    __slots__ = ("_a", "exact")

    def __init__(self, entries, exact: bool | None = None):
        if isinstance(entries, SymMat):
            a = entries._a
            if exact is None or exact == entries.exact:
                self._a, self.exact = a, entries.exact
                return
            entries = a
        raw = np.array(entries, dtype=object)
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1] or raw.shape[0] < 1:
            raise ValueError(f"need a non-empty square array, got shape {raw.shape}")
        if exact is None:
            exact = is_exact_array(raw)
        n = raw.shape[0]
        if exact:
            a = np.empty((n, n), dtype=object)
            for i in range(n):
                for j in range(n):
                    a[i, j] = as_rat(raw[i, j])
            for i in range(n):
                for j in range(i + 1, n):
                    if a[i, j] != a[j, i]:
                        raise NotSymmetricError(f"entry ({i},{j}) = {a[i, j]} but ({j},{i}) = {a[j, i]}")
        else:
            a = np.array(raw, dtype=float)
            scale = max(1.0, float(np.max(np.abs(a))))
            bad = np.abs(a - a.T) > 1e-12 * scale
            if bad.any():
                i, j = map(int, np.argwhere(bad)[0])
                raise NotSymmetricError(f"entry ({i},{j}) = {a[i, j]} but ({j},{i}) = {a[j, i]}")
            a = (a + a.T) / 2
        a.flags.writeable = False
        self._a = a
        self.exact = bool(exact)

    @classmethod
    def _wrap(cls, a, exact):
        obj = cls.__new__(cls)
        a = np.array(a, dtype=object if exact else float)
        a.flags.writeable = False
        obj._a = a
        obj.exact = exact
        return obj

    # -- constructors -------------------------------------------------------------
    @classmethod
    def zeros(cls, n, exact=True):
        return cls._wrap(np.full((n, n), Fraction(0), dtype=object) if exact else np.zeros((n, n)), exact)

    @classmethod
    def identity(cls, n, exact=True):
        return cls.diag([1] * n, exact)

    @classmethod
    def diag(cls, values, exact=True):
        n = len(values)
        if exact:
            a = np.full((n, n), Fraction(0), dtype=object)
            for i, v in enumerate(values):
                a[i, i] = as_rat(v)
        else:
            a = np.diag(np.asarray(values, dtype=float))
        return cls._wrap(a, exact)

    @classmethod
    def unit(cls, n, i, j=None, exact=True):
        """E_i (j None) or E_ij = e_i e_j^T + e_j e_i^T; 0-based indices."""
        a = np.full((n, n), Fraction(0), dtype=object)
        j = i if j is None else j
        a[i, j] = a[j, i] = Fraction(1)
        return cls._wrap(a, True) if exact else cls._wrap(a.astype(float), False)

    @classmethod
    def block_diag(cls, *mats):
        exact = all(m.exact for m in mats)
        n = sum(m.n for m in mats)
        a = np.full((n, n), Fraction(0), dtype=object) if exact else np.zeros((n, n))
        k = 0
        for m in mats:
            a[k:k + m.n, k:k + m.n] = m._a if exact else m.to_float()._a
            k += m.n
        return cls._wrap(a, exact)

    # -- basic protocol -------------------------------------------------------------
    @property
    def n(self) -> int:
        return self._a.shape[0]

    order = n

    @property
    def a(self) -> np.ndarray:
        return self._a

    def __getitem__(self, idx):
        return self._a[idx]

    def __repr__(self):
        kind = "exact" if self.exact else "float"
        if self.exact:
            rows = [[str(v) for v in r] for r in self._a]
        else:
            rows = [[f"{v:.6g}" for v in r] for r in self._a]
        return f"SymMat[{kind}]({rows})"

    def __eq__(self, other):
        if not isinstance(other, SymMat) or other.n != self.n:
            return NotImplemented if not isinstance(other, SymMat) else False
        if self.exact and other.exact:
            return bool(np.all(self._a == other._a))
        return bool(np.array_equal(self.to_float()._a, other.to_float()._a))

    def __hash__(self):
        return hash((self.exact, tuple(self._a.flat))) if self.exact else hash(self._a.tobytes())

    def _coerce(self, other):
        if not isinstance(other, SymMat):
            return NotImplemented
        if other.n != self.n:
            raise ValueError(f"order mismatch: {self.n} vs {other.n}")
        if self.exact and other.exact:
            return self._a, other._a, True
        return self.to_float()._a, other.to_float()._a, False

    def __add__(self, other):
        r = self._coerce(other)
        if r is NotImplemented:
            return r
        return SymMat._wrap(r[0] + r[1], r[2])

    def __sub__(self, other):
        r = self._coerce(other)
        if r is NotImplemented:
            return r
        return SymMat._wrap(r[0] - r[1], r[2])

    def __neg__(self):
        return SymMat._wrap(-self._a, self.exact)

    def __mul__(self, s):
        if isinstance(s, SymMat):
            return NotImplemented
        if self.exact and _exact_entry(s):
            return SymMat._wrap(self._a * as_rat(s), True)
        return SymMat._wrap(self.to_float()._a * float(s), False)

    __rmul__ = __mul__

    def to_float(self) -> "SymMat":
        if not self.exact:
            return self
        return SymMat._wrap(self._a.astype(float), False)

    def to_exact(self, max_denominator: int | None = None) -> "SymMat":
        """Exact copy; float entries convert exactly or via limit_denominator."""
        if self.exact:
            return self
        if max_denominator is None:
            conv = [[Fraction(float(v)) for v in r] for r in self._a]
        else:
            conv = [[Fraction(float(v)).limit_denominator(max_denominator) for v in r] for r in self._a]
        return SymMat(conv, exact=True)

    def submatrix(self, idx) -> "SymMat":
        idx = list(idx)
        return SymMat._wrap(self._a[np.ix_(idx, idx)], self.exact)

    def tolist(self):
        return self._a.tolist()

    def is_zero(self, tol: float = 0.0) -> bool:
        if self.exact:
            return all(v == 0 for v in self._a.flat)
        return bool(np.max(np.abs(self._a), initial=0.0) <= tol)

    def is_diagonal(self, tol: float = 0.0) -> bool:
        off = self._a.copy()
        for i in range(self.n):
            off[i, i] = 0
        if self.exact:
            return all(v == 0 for v in off.flat)
        return bool(np.max(np.abs(off), initial=0.0) <= tol)

    def diagonal(self):
        return [self._a[i, i] for i in range(self.n)]

    def trace(self):
        return sum(self.diagonal(), Fraction(0) if self.exact else 0.0)

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_float()._a))


# ---------------------------------------------------------------------------
def inner(A: SymMat, B: SymMat):
    """Trace inner product A . B."""
    if A.n != B.n:
        raise ValueError(f"order mismatch: {A.n} vs {B.n}")
    if A.exact and B.exact:
        return sum((x * y for x, y in zip(A.a.flat, B.a.flat)), Fraction(0))
    return float(np.sum(A.to_float().a * B.to_float().a))


def _check_invertible(T, exact):
    if exact:
        if _det_exact(T.tolist()) == 0:
            raise SingularTransformError("transform is singular")
    else:
        s = np.linalg.svd(T, compute_uv=False)
        if s.size and s[-1] <= 1e-13 * max(1.0, s[0]):
            raise SingularTransformError("transform is numerically singular")


def congruence(M: SymMat, T, check: bool = True) -> SymMat:
    """T^T M T."""
    exact_T = is_exact_array(T.a if isinstance(T, SymMat) else T)
    Ta = as_square(T, exact=exact_T)
    if Ta.shape[0] != M.n:
        raise ValueError(f"transform order {Ta.shape[0]} does not match matrix order {M.n}")
    exact = M.exact and exact_T
    if check:
        _check_invertible(Ta if exact_T else np.asarray(Ta, dtype=float), exact_T)
    if exact:
        R = Ta.T.dot(M.a).dot(Ta)
        return SymMat._wrap(R, True)
    Tf = np.asarray(Ta, dtype=float)
    R = Tf.T @ M.to_float().a @ Tf
    return SymMat._wrap((R + R.T) / 2, False)


def schur_complement(G: SymMat, k: int) -> SymMat:
    """G11 - G12 G22^{-1} G12^T with G22 the trailing k x k block."""
    n = G.n
    if not 0 < k < n:
        raise ValueError("trailing block order must be in 1..n-1")
    G22 = G.submatrix(range(n - k, n))
    if psd_status(G22).kind is not PsdKind.POSITIVE_DEFINITE:
        raise ValueError("trailing block is not positive definite")
    G11 = G.a[: n - k, : n - k]
    G12 = G.a[: n - k, n - k:]
    if G.exact:
        inv = np.array(_inv_exact(G22.tolist()), dtype=object)
        return SymMat._wrap(G11 - G12.dot(inv).dot(G12.T), True)
    S = G11 - G12 @ np.linalg.solve(G22.a, G12.T)
    return SymMat._wrap((S + S.T) / 2, False)


class PsdKind(Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    PSD_RANK_DEFICIENT = "PsdRankDeficient"
    INDEFINITE = "Indefinite"
    NEGATIVE_SEMIDEFINITE = "NegativeSemidefinite"
    ZERO = "Zero"


@dataclass(frozen=True)
class PsdStatus:
    kind: PsdKind
    rank: int | None = None

    @property
    def is_psd(self) -> bool:
        return self.kind in (PsdKind.POSITIVE_DEFINITE, PsdKind.PSD_RANK_DEFICIENT, PsdKind.ZERO)

    @property
    def is_nsd(self) -> bool:
        return self.kind in (PsdKind.NEGATIVE_SEMIDEFINITE, PsdKind.ZERO)

    def __str__(self):
        if self.kind is PsdKind.PSD_RANK_DEFICIENT:
            return f"PsdRankDeficient({self.rank})"
        return self.kind.value


def inertia(M: SymMat, tol: Tolerances | None = None):
    """(npos, nneg, nzero).  Exact inertia for exact input.

    When elimination stalls on a zero diagonal with nonzero off-diagonal
    entries the remainder is indefinite but its exact split is not
    computed; it is then reported as one positive and one negative
    direction more than already found, with the rest counted as zero.
    """
    if M.exact:
        ints, _ = integerize(M.tolist())
        npos, nneg, stalled = kernels.int_inertia(ints)
        if stalled:
            npos += 1
            nneg += 1
        return npos, nneg, M.n - npos - nneg
    tol = tol or _TOL
    lam = np.linalg.eigvalsh(M.a)
    thr = tol.psd * max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    npos = int(np.sum(lam > thr))
    nneg = int(np.sum(lam < -thr))
    return npos, nneg, M.n - npos - nneg


def psd_status(M: SymMat, tol: Tolerances | None = None) -> PsdStatus:
    npos, nneg, _ = inertia(M, tol)
    if npos == 0 and nneg == 0:
        return PsdStatus(PsdKind.ZERO, 0)
    if nneg == 0:
        if npos == M.n:
            return PsdStatus(PsdKind.POSITIVE_DEFINITE, npos)
        return PsdStatus(PsdKind.PSD_RANK_DEFICIENT, npos)
    if npos == 0:
        return PsdStatus(PsdKind.NEGATIVE_SEMIDEFINITE, nneg)
    return PsdStatus(PsdKind.INDEFINITE)


def eig_sym(M: SymMat, tol: Tolerances | None = None):
    """Eigenpairs (Q, lam) with lam descending; residual checked against eps_eig."""
    tol = tol or _TOL
    A = M.to_float().a
    try:
        lam, Q = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:  # LAPACK did not converge
        raise ArithmeticError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(lam)[::-1]
    lam, Q = lam[order], Q[:, order]
    res = np.linalg.norm(A @ Q - Q * lam)
    if res > tol.eig * max(1.0, float(np.max(np.abs(lam), initial=0.0))):
        raise ArithmeticError(f"eigen residual {res:.3e} above tolerance")
    return Q, lam


def rank_psd(M: SymMat, tol: Tolerances | None = None) -> int:
    st = psd_status(M, tol)
    if not st.is_psd:
        raise ValueError(f"matrix is not psd ({st})")
    if M.exact:
        return st.rank
    tol = tol or _TOL
    lam = np.linalg.eigvalsh(M.a)
    top = float(lam[-1])
    if top <= 0:
        return 0
    return int(np.sum(lam > tol.rank * top))


def max_min_eig(M0, dirs, bound=1e3, beta0=10.0, rounds=6, x0=None, stop_at=None):
    """Approximately maximize lambda_min(M0 + sum_k t_k D_k) over |t_k| <= bound.

    Uses the smooth concave surrogate -log(tr exp(-beta Y))/beta, which
    under-estimates lambda_min by at most log(n)/beta, with beta doubled
    between L-BFGS rounds.  Returns (t, lambda_min).
    """
    from scipy.optimize import minimize

    M0 = np.asarray(M0, dtype=float)
    D = np.array([np.asarray(d, dtype=float) for d in dirs]).reshape(len(dirs), *M0.shape)
    k = len(D)
    t = np.zeros(k) if x0 is None else np.asarray(x0, dtype=float)

    def lam_min(t):
        Y = M0 + np.tensordot(t, D, axes=1) if k else M0
        return float(np.linalg.eigvalsh(Y)[0])

    if k == 0:
        return t, lam_min(t)
    beta = beta0
    for _ in range(rounds):
        def f(t, beta=beta):
            Y = M0 + np.tensordot(t, D, axes=1)
            lam, Q = np.linalg.eigh(Y)
            z = -beta * (lam - lam[0])
            w = np.exp(z)
            s = w.sum()
            val = lam[0] - np.log(s) / beta
            W = (Q * (w / s)) @ Q.T
            grad = np.einsum("kij,ij->k", D, W)
            return -val, -grad
        res = minimize(f, t, jac=True, method="L-BFGS-B", bounds=[(-bound, bound)] * k)
        t = res.x
        if stop_at is not None and lam_min(t) > stop_at:
            break
        beta *= 4
    return t, lam_min(t)
