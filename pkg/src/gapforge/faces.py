"""Faces of the psd cone and facial-reduction sequence checks.

A face is stored through a basis V (n x r) of its range: the face is
{V S V^T : S psd of order r}.  When V selects coordinate axes it is an
``AxisFace``.  Bases are exact (Fraction) whenever the data are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .rational import as_rat, nullspace, rank, solve_affine
from .symkernel import PsdKind, SymMat, psd_status, eig_sym

__all__ = [
    "AxisFace", "GeneralFace", "full_face", "face_from_basis", "face_dual_restrict",
    "restrict_basis", "FrStepError", "FrSequence", "FaceChain", "verify_fr_sequence",
    "is_regularized", "reduce_face", "sym_vec", "span_coefficients",
]


class FrStepError(ValueError):
    pass


@dataclass(frozen=True)
class AxisFace:
    n: int
    zero: frozenset = frozenset()

    @property
    def r(self) -> int:
        return self.n - len(self.zero)

    @property
    def active(self):
        return [i for i in range(self.n) if i not in self.zero]

    def basis(self):
        V = np.full((self.n, self.r), Fraction(0), dtype=object)
        for k, i in enumerate(self.active):
            V[i, k] = Fraction(1)
        return V

    def describe(self) -> str:
        z = sorted(self.zero)
        if z == list(range(len(z))):
            return f"0_{len(z)} (+) S^{self.r}_+" if z else f"S^{self.n}_+"
        return f"zero rows/cols {z}, free block S^{self.r}_+"

    def contains_face(self, other) -> bool:
        if isinstance(other, AxisFace):
            return self.zero <= other.zero
        return _range_contains(self.basis(), other.V)

    def to_dict(self):
        return {"kind": "axis", "n": self.n, "r": self.r, "zero": sorted(self.zero)}


@dataclass(frozen=True, eq=False)
class GeneralFace:
    n: int
    V: np.ndarray  # n x r

    @property
    def r(self) -> int:
        return self.V.shape[1]

    def basis(self):
        return self.V

    @property
    def T(self):
        """Invertible T with the face equal to T (S^r_+ (+) 0) T^T."""
        V = self.V
        cols = [list(V[:, k]) for k in range(self.r)]
        exact = V.dtype == object
        for i in range(self.n):
            if len(cols) == self.n:
                break
            e = [Fraction(int(i == j)) if exact else float(i == j) for j in range(self.n)]
            trial = cols + [e]
            if exact:
                ok = rank(trial) == len(trial)
            else:
                ok = np.linalg.matrix_rank(np.array(trial, dtype=float)) == len(trial)
            if ok:
                cols = trial
        return np.array(cols, dtype=object if exact else float).T

    def describe(self) -> str:
        return f"general face of rank {self.r} in S^{self.n}_+"

    def contains_face(self, other) -> bool:
        return _range_contains(self.V, other.basis())

    def to_dict(self):
        V = self.V
        if V.dtype == object:
            rows = [[str(v) for v in r] for r in V]
        else:
            rows = V.tolist()
        return {"kind": "general", "n": self.n, "r": self.r, "V": rows}


def _range_contains(V, W) -> bool:
    if W.shape[1] == 0:
        return True
    if V.dtype == object and W.dtype == object:
        return rank([list(r) for r in np.hstack([V, W])]) == rank([list(r) for r in V]) if V.shape[1] else False
    Vf, Wf = np.asarray(V, float), np.asarray(W, float)
    return np.linalg.matrix_rank(np.hstack([Vf, Wf]), tol=1e-9) == np.linalg.matrix_rank(Vf, tol=1e-9)


def full_face(n) -> AxisFace:
    return AxisFace(n, frozenset())


def face_from_basis(V):
    """AxisFace when V is (a column permutation of) a coordinate selection."""
    n, r = V.shape
    sel = []
    for k in range(r):
        nz = [i for i in range(n) if V[i, k] != 0]
        if len(nz) != 1:
            return GeneralFace(n, V)
        sel.append(nz[0])
    if len(set(sel)) != r:
        return GeneralFace(n, V)
    return AxisFace(n, frozenset(set(range(n)) - set(sel)))


def restrict_basis(M: SymMat, V) -> SymMat:
    """V^T M V."""
    if M.exact and V.dtype == object:
        return SymMat._wrap(V.T.dot(M.a).dot(V), True)
    Vf = np.asarray(V, dtype=float)
    R = Vf.T @ M.to_float().a @ Vf
    return SymMat._wrap((R + R.T) / 2, False)


def face_dual_restrict(M: SymMat, F) -> SymMat | None:
    """M restricted to the face: M in F* iff psd, M in F-perp iff zero.

    Returns None for the zero-dimensional face.
    """
    if isinstance(F, AxisFace):
        if F.r == 0:
            return None
        return M.submatrix(F.active)
    if F.r == 0:
        return None
    return restrict_basis(M, F.V)


def reduce_face(V, R: SymMat, tol=None):
    """Basis of the new face V * ker(R) for R = V^T y V psd."""
    if R.exact and V.dtype == object:
        if R.is_diagonal():
            keep = [k for k in range(R.n) if R.a[k, k] == 0]
            return V[:, keep] if keep else np.zeros((V.shape[0], 0), dtype=object)
        N = nullspace(R.tolist(), R.n)
        if not N:
            return np.zeros((V.shape[0], 0), dtype=object)
        K = np.array(N, dtype=object).T
        return V.dot(K)
    Q, lam = eig_sym(R.to_float(), tol)
    thr = 1e-8 * max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    K = Q[:, np.abs(lam) <= thr]
    return np.asarray(V, dtype=float) @ K


def sym_vec(M: SymMat):
    """Upper-triangle coordinates (diagonal first) as a list."""
    n = M.n
    a = M.a
    out = [a[i, i] for i in range(n)]
    out += [a[i, j] for i in range(n) for j in range(i + 1, n)]
    return out


def span_coefficients(M: SymMat, basis: Sequence[SymMat]):
    """Exact coefficients of M in span(basis), or None."""
    cols = [sym_vec(b) for b in basis]
    rows = [list(r) for r in zip(*cols)] if cols else []
    target = sym_vec(M)
    if not rows:
        return [] if all(v == 0 for v in target) else None
    sol = solve_affine(rows, target, len(basis))
    return None if sol is None else sol[0]


# ---------------------------------------------------------------------------

@dataclass
class FrSequence:
    matrices: list
    labels: list = field(default_factory=list)
    coeffs: list = field(default_factory=list)
    strict: bool = False
    regularized: tuple | None = None

    def __len__(self):
        return len(self.matrices)

    def to_dict(self):
        return {"labels": self.labels, "strict": self.strict,
                "regularized": list(self.regularized) if self.regularized else None,
                "coeffs": [[str(v) for v in c] for c in self.coeffs]}


@dataclass
class FaceChain:
    faces: list
    sequence: FrSequence

    @property
    def terminal(self):
        return self.faces[-1]

    def dims(self):
        return [f.r * (f.r + 1) // 2 for f in self.faces]


def verify_fr_sequence(seq, span_basis, require_strict: bool = False, labels=None) -> FaceChain:
    """Check y_i in F*_{i-1} and y_i in span(span_basis); build the chain.

    Faces are exact when data are exact (kernels computed over Q even
    for non-diagonal restrictions); float data use eigenvectors.
    """
    mats = list(seq.matrices if isinstance(seq, FrSequence) else seq)
    labels = labels or (seq.labels if isinstance(seq, FrSequence) and seq.labels else [f"y{i + 1}" for i in range(len(mats))])
    if not mats:
        raise FrStepError("empty sequence")
    n = mats[0].n
    coeffs = []
    for i, y in enumerate(mats):
        co = span_coefficients(y, span_basis)
        if co is None:
            raise FrStepError(f"member {i} ({labels[i]}) is not in the span of the given basis")
        coeffs.append(co)
    exact = all(y.exact for y in mats)
    V = full_face(n).basis() if exact else np.eye(n)
    faces = [full_face(n)]
    for i, y in enumerate(mats):
        if V.shape[1] == 0:
            R = None
        else:
            R = restrict_basis(y, V)
        if R is None or R.is_zero():
            if require_strict:
                raise FrStepError(f"member {i} ({labels[i]}) is in the orthogonal complement of the current face (not strict)")
            faces.append(faces[-1])
            continue
        st = psd_status(R)
        if not st.is_psd:
            raise FrStepError(f"member {i} ({labels[i]}) restricted to the current face is {st}, not psd")
        V = reduce_face(V, R)
        faces.append(face_from_basis(V))
    fs = FrSequence(mats, list(labels), coeffs, strict=require_strict, regularized=is_regularized(mats))
    return FaceChain(faces, fs)


def is_regularized(seq):
    """Block sizes (r_1, ..., r_k) when every member fits the regularized template, else None.

    Member i must read I_{r_i} (+) 0 on the trailing block that starts
    after r_1 + ... + r_{i-1} rows; everything touching earlier rows is free.
    """
    mats = list(seq.matrices if isinstance(seq, FrSequence) else seq)
    if not mats:
        return ()
    n = mats[0].n
    start = 0
    sizes = []
    for M in mats:
        if start >= n:
            if not M.exact:
                return None
            sizes.append(0)
            continue
        tail = M.a[start:, start:]
        k = n - start
        r = 0
        while r < k and tail[r, r] == 1:
            r += 1
        for i in range(k):
            for j in range(k):
                want = 1 if (i == j and i < r) else 0
                if tail[i, j] != want:
                    return None
        sizes.append(r)
        start += r
    return tuple(sizes)
