"""Instance files, SeDuMi/SDPA text export and certificate reports.

JSON layout (version 1)::

    {"version": 1, "name": ..., "m": m, "n": n,
     "A": [n x n arrays], "B": n x n array, "c": [m scalars], "meta": {...}}

Exact scalars are strings ("3", "-1/2"); float instances use JSON numbers.
Fractions inside meta are tagged as {"$rat": "p/q"} so that a load
returns the same objects that were saved.
"""

from __future__ import annotations

import json
import re
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

import numpy as np

from .rational import INF, as_rat, is_inf, rat_str
from .sdpmodel import SdpInstance
from .symkernel import SymMat

__all__ = [
    "FORMAT_VERSION", "InstanceFormatError", "PrecisionError", "dumps", "loads", "save", "load",
    "value_str", "export_sedumi", "import_sedumi", "export_sdpa", "report_dict", "to_jsonable",
]

FORMAT_VERSION = 1
DECIMAL_CAP = 40  # digits allowed in an exported terminating decimal


class InstanceFormatError(ValueError):
    pass


class PrecisionError(ValueError):
    pass


def value_str(v) -> str:
    if isinstance(v, str):
        return v
    if is_inf(v):
        return "inf"
    if isinstance(v, float) and v == -INF:
        return "-inf"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return rat_str(as_rat(v))


# -- JSON --------------------------------------------------------------------------

def to_jsonable(obj):
    """Recursively convert meta/report objects to JSON-compatible values."""
    if isinstance(obj, Fraction):
        return {"$rat": rat_str(obj)}
    if isinstance(obj, float):
        if is_inf(obj):
            return {"$rat": "inf"}
        if obj == -INF:
            return {"$rat": "-inf"}
        return obj
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.floating):
        return to_jsonable(float(obj))
    if isinstance(obj, SymMat):
        return {"$sym": [[to_jsonable(v) for v in row] for row in obj.a]}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()] if obj.dtype != object else [to_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _from_jsonable(obj):
    if isinstance(obj, dict):
        if set(obj) == {"$rat"}:
            s = obj["$rat"]
            return INF if s == "inf" else (-INF if s == "-inf" else as_rat(s))
        if set(obj) == {"$sym"}:
            return SymMat([[_from_jsonable(v) for v in row] for row in obj["$sym"]])
        return {k: _from_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_from_jsonable(v) for v in obj]
    return obj


def _scalar_out(v, exact):
    return rat_str(v) if exact else float(v)


def _matrix_out(M: SymMat, exact):
    return [[_scalar_out(v, exact) for v in row] for row in M.a]


def dumps(inst: SdpInstance) -> str:
    ex = inst.exact
    doc = {
        "version": FORMAT_VERSION,
        "name": inst.name,
        "m": inst.m,
        "n": inst.n,
        "A": [_matrix_out(a, ex) for a in inst.A],
        "B": _matrix_out(inst.B, ex),
        "c": [_scalar_out(v, ex) for v in inst.c],
        "meta": to_jsonable(inst.meta),
    }
    return _compact(json.dumps(doc, indent=1)) + "\n"


_FLAT_LIST = re.compile(r"\[[^\[\]{}]*\]")


def _compact(text: str) -> str:
    """Put every innermost list (matrix rows, vectors) on a single line."""
    return _FLAT_LIST.sub(lambda mt: json.dumps(json.loads(mt.group(0))), text)


def _scalar_in(v, where):
    if isinstance(v, bool) or v is None:
        raise InstanceFormatError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, int):
        return Fraction(v), True
    if isinstance(v, float):
        return v, False
    if isinstance(v, str):
        try:
            return as_rat(v), True
        except (ValueError, ZeroDivisionError) as e:
            raise InstanceFormatError(f"{where}: bad rational {v!r} ({e})") from None
    raise InstanceFormatError(f"{where}: expected a number, got {type(v).__name__}")


def _matrix_in(rows, n, label):
    if not isinstance(rows, list) or len(rows) != n:
        raise InstanceFormatError(f"{label}: expected {n} rows")
    out, exact = [], True
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise InstanceFormatError(f"{label}: row {i} must have {n} entries")
        vals = []
        for j, v in enumerate(row):
            x, e = _scalar_in(v, f"{label}[{i}][{j}]")
            exact &= e
            vals.append(x)
        out.append(vals)
    for i in range(n):
        for j in range(i + 1, n):
            if out[i][j] != out[j][i]:
                raise InstanceFormatError(
                    f"{label} is not symmetric: entry ({i},{j}) = {rows[i][j]!r} but ({j},{i}) = {rows[j][i]!r}")
    return out, exact


def loads(text: str, source: str = "<string>") -> SdpInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{source}: top level must be an object")
    ver = doc.get("version")
    if ver != FORMAT_VERSION:
        raise InstanceFormatError(f"{source}: unsupported version {ver!r} (expected {FORMAT_VERSION})")
    for key in ("m", "n", "A", "B", "c"):
        if key not in doc:
            raise InstanceFormatError(f"{source}: missing field {key!r}")
    m, n = doc["m"], doc["n"]
    if not (isinstance(m, int) and isinstance(n, int) and m >= 1 and n >= 2):
        raise InstanceFormatError(f"{source}: bad dimensions m={m!r}, n={n!r}")
    if not isinstance(doc["A"], list) or len(doc["A"]) != m:
        raise InstanceFormatError(f"{source}: A must list {m} matrices")
    if not isinstance(doc["c"], list) or len(doc["c"]) != m:
        raise InstanceFormatError(f"{source}: c must have {m} entries")
    exact = True
    A = []
    for k, rows in enumerate(doc["A"]):
        M, e = _matrix_in(rows, n, f"A[{k}]")
        exact &= e
        A.append(M)
    B, e = _matrix_in(doc["B"], n, "B")
    exact &= e
    c = []
    for k, v in enumerate(doc["c"]):
        x, e = _scalar_in(v, f"c[{k}]")
        exact &= e
        c.append(x)
    if not exact:
        A = [[[float(v) for v in r] for r in M] for M in A]
        B = [[float(v) for v in r] for r in B]
        c = [float(v) for v in c]
    meta = _from_jsonable(doc.get("meta", {}))
    if not isinstance(meta, dict):
        raise InstanceFormatError(f"{source}: meta must be an object")
    meta.setdefault("name", doc.get("name", ""))
    if "known_gap" in meta and isinstance(meta["known_gap"], list):
        meta["known_gap"] = tuple(meta["known_gap"])
    try:
        return SdpInstance(tuple(SymMat(M, exact=exact) for M in A), SymMat(B, exact=exact), tuple(c), meta)
    except (ValueError, TypeError) as e:
        raise InstanceFormatError(f"{source}: {e}") from None


def save(inst: SdpInstance, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps(inst))
    return p


def load(path) -> SdpInstance:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise InstanceFormatError(f"{p}: {e.strerror or e}") from None
    return loads(text, str(p))


# -- decimal text ---------------------------------------------------------------------

def _decimal(v) -> str:
    """Exact decimal text for a rational with terminating expansion."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    q = as_rat(v)
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    k2 = k5 = 0
    while d % 2 == 0:
        d //= 2
        k2 += 1
    while d % 5 == 0:
        d //= 5
        k5 += 1
    if d != 1:
        raise PrecisionError(f"{rat_str(q)} has no terminating decimal expansion")
    places = max(k2, k5)
    with localcontext() as ctx:
        ctx.prec = len(str(abs(q.numerator))) + places + 5
        text = str(Decimal(q.numerator) / Decimal(q.denominator))
    if len(text.replace("-", "").replace(".", "")) > DECIMAL_CAP:
        raise PrecisionError(f"{rat_str(q)} needs more than {DECIMAL_CAP} digits")
    if "E" in text or "e" in text:
        text = format(Decimal(q.numerator) / Decimal(q.denominator), "f")
    return text


def _parse_decimal(tok: str):
    try:
        return Fraction(tok)
    except ValueError:
        raise InstanceFormatError(f"bad number {tok!r}") from None


# -- SeDuMi ----------------------------------------------------------------------------

_SEDUMI_LOADER = """\
function [A, b, c, K] = load_sedumi(dirname)
%% Read the plain-text SeDuMi triple written by gapforge.
%% A.txt holds 1-based (row, col, value) triplets; its last line fixes the size.
%% Columns of A are column-major vectorizations of the n x n constraint matrices.
T = load(fullfile(dirname, 'A.txt'));
A = sparse(T(:,1), T(:,2), T(:,3), T(end,1), T(end,2));
b = load(fullfile(dirname, 'b.txt'));
c = load(fullfile(dirname, 'c.txt'));
K.s = load(fullfile(dirname, 'K.txt'));
end
"""


def export_sedumi(inst: SdpInstance, path) -> Path:
    """Write A.txt, b.txt, c.txt, K.txt and load_sedumi.m into directory ``path``.

    Row i of A is vec(A_i) in column-major order, b is the objective c of
    the primal and c is vec(B); K.s = [n].
    """
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    n, m = inst.n, inst.m
    lines = []
    for i, Ai in enumerate(inst.A):
        a = Ai.a
        for col in range(n):
            for row in range(n):
                v = a[row, col]
                if v != 0:
                    lines.append(f"{i + 1} {col * n + row + 1} {_decimal(v)}")
    lines.append(f"{m} {n * n} 0")
    (d / "A.txt").write_text("\n".join(lines) + "\n")
    (d / "b.txt").write_text("\n".join(_decimal(v) for v in inst.c) + "\n")
    B = inst.B.a
    (d / "c.txt").write_text("\n".join(_decimal(B[row, col]) for col in range(n) for row in range(n)) + "\n")
    (d / "K.txt").write_text(f"{n}\n")
    (d / "load_sedumi.m").write_text(_SEDUMI_LOADER)
    return d


def import_sedumi(path, name: str = "") -> SdpInstance:
    d = Path(path)
    try:
        n = int((d / "K.txt").read_text().split()[0])
        trip = [ln.split() for ln in (d / "A.txt").read_text().splitlines() if ln.strip()]
        b = [_parse_decimal(t) for t in (d / "b.txt").read_text().split()]
        cv = [_parse_decimal(t) for t in (d / "c.txt").read_text().split()]
    except OSError as e:
        raise InstanceFormatError(f"{d}: {e.strerror or e}") from None
    m, nn = int(trip[-1][0]), int(trip[-1][1])
    if nn != n * n or len(b) != m or len(cv) != n * n:
        raise InstanceFormatError(f"{d}: inconsistent dimensions (m={m}, columns={nn}, n={n})")
    # decimal text parses to exact rationals, so the reimported instance is exact
    exact = True
    A = [[[Fraction(0)] * n for _ in range(n)] for _ in range(m)]
    for t in trip[:-1]:
        i, k, v = int(t[0]) - 1, int(t[1]) - 1, _parse_decimal(t[2])
        col, row = divmod(k, n)
        A[i][row][col] = v
    B = [[cv[col * n + row] for col in range(n)] for row in range(n)]
    mats = []
    for i, M in enumerate(A):
        for r in range(n):
            for s in range(r + 1, n):
                if M[r][s] != M[s][r]:
                    raise InstanceFormatError(f"{d}: A[{i}] is not symmetric at ({r},{s})")
        mats.append(SymMat(M, exact=exact))
    return SdpInstance(tuple(mats), SymMat(B, exact=exact), tuple(b), {"name": name or d.name})


# -- SDPA ------------------------------------------------------------------------------

def export_sdpa(inst: SdpInstance, path) -> Path:
    """SDPA sparse format (.dat-s) with F0 = -B and F_i = A_i.

    The SDPA primal  min c.x'  s.t.  sum x'_i F_i - F0 psd  is the given
    problem under x' = -x, so its optimal value is the negated sup.
    """
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    n = inst.n
    out = [f'"{inst.name or "gapforge instance"}: F0 = -B, Fi = Ai, x = -x_sdpa"',
           str(inst.m), "1", str(n), " ".join(_decimal(v) for v in inst.c)]
    mats = [-inst.B] + list(inst.A)
    for k, M in enumerate(mats):
        a = M.a
        for i in range(n):
            for j in range(i, n):
                if a[i, j] != 0:
                    out.append(f"{k} 1 {i + 1} {j + 1} {_decimal(a[i, j])}")
    p.write_text("\n".join(out) + "\n")
    return p


# -- reports -----------------------------------------------------------------------------

def report_dict(cert=None, form=None, **extra) -> dict:
    """Machine-readable report for a GapCertificate and/or canonical result."""
    rep = {}
    if cert is not None:
        rep["certificate"] = to_jsonable(cert.to_dict() if hasattr(cert, "to_dict") else cert)
    if form is not None:
        rep["canonical"] = to_jsonable(form.to_dict() if hasattr(form, "to_dict") else form)
    for k, v in extra.items():
        rep[k] = to_jsonable(v)
    return rep
