"""Pathological instance families, integer messing, the benchmark library
and the perturbed dual.

All family constructors take 1-based mathematical indices internally
(E_i, E_ij as in the usual notation) and build 0-based arrays.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .rational import INF, as_rat, det, inverse
from .sdpmodel import SdpInstance, b_identity_rank
from .symkernel import SymMat, congruence

__all__ = [
    "FAMILIES", "gen_small", "gen_single", "gen_double", "gen_example51", "EXAMPLE51_Y",
    "MessTransform", "mess", "unmess", "build_library", "perturb_dual", "generate",
]

FAMILIES = ("small", "single-finite", "single-inf", "double", "example51")


def _E(n, i, j=None):
    """E_i or E_ij with 1-based indices."""
    return SymMat.unit(n, i - 1, None if j is None else j - 1)


def _B(n, r):
    return SymMat.diag([1] * r + [0] * (n - r))


def _zero(n):
    return SymMat.zeros(n)


def _meta(name, family, known, **kw):
    meta = {"name": name, "family": family, "known_gap": known, "assumption11_holds": True}
    meta.update(kw)
    return meta


def gen_small(scale=1) -> SdpInstance:
    scale = as_rat(scale)
    if scale <= 0:
        raise ValueError("scale must be positive")
    A1 = _E(3, 1)
    A2 = _E(3, 2) + _E(3, 1, 3)
    return SdpInstance((A1, A2), _B(3, 2), (0, scale),
                       _meta("small", "small", (Fraction(0), scale), scale=scale, m_param=2))


def gen_single(m: int, scale=1, infinite: bool = False) -> SdpInstance:
    if m < 2:
        raise ValueError("single family needs m >= 2")
    scale = as_rat(scale)
    if scale <= 0:
        raise ValueError("scale must be positive")
    n = m + 1
    A = [_E(n, 1)]
    for i in range(2, m + 1):
        if infinite and i == m:
            A.append(-_E(n, i) + _E(n, i - 1, n))
        else:
            A.append(_E(n, i) + _E(n, i - 1, n))
    c = [0] * m
    c[-1] = scale
    fam = "single-inf" if infinite else "single-finite"
    known = (Fraction(0), INF if infinite else scale)
    name = f"gap_single_{'inf' if infinite else 'finite'}_clean_{m}"
    return SdpInstance(tuple(A), _B(n, m), tuple(c), _meta(name, fam, known, scale=scale, m_param=m))


def gen_double(m: int, flipped: bool = False) -> SdpInstance:
    """Double-sequence family; ``flipped`` uses +E_{2m} in A_m (zero-gap control)."""
    if m < 2:
        raise ValueError("double family needs m >= 2")
    n = 2 * m + 1
    A = [_E(n, 1) + _E(n, m + 1)]
    for i in range(2, m):
        A.append(_E(n, i) + _E(n, m + i) + _E(n, i - 1, n) + _E(n, m + i - 1, n))
    sgn = 1 if flipped else -1
    A.append(_E(n, m) + _E(n, 2 * m) * sgn + _E(n, m - 1, n) + _E(n, 2 * m - 1, n))
    c = [0] * m
    c[-1] = 1
    known = (Fraction(0), Fraction(0) if flipped else Fraction(1))
    name = f"gap_double{'_flipped' if flipped else ''}_clean_{m}"
    return SdpInstance(tuple(A), _B(n, m + 1), tuple(c),
                       _meta(name, "double-flipped" if flipped else "double", known, scale=Fraction(1), m_param=m))


EXAMPLE51_Y = ((1, 0, 2, 1), (0, 1, 0, -2), (2, 0, 5, 0), (1, -2, 0, 25))


def gen_example51() -> SdpInstance:
    A1 = SymMat([[0, 0, 2, 2], [0, 1, 0, 0], [2, 0, 0, 0], [2, 0, 0, 0]])
    A2 = SymMat([[0, 0, 0, 0], [0, 0, 0, 2], [0, 0, 1, 0], [0, 2, 0, 0]])
    B = _B(4, 1)
    return SdpInstance((A1, A2), B, (13, -3),
                       _meta("example51", "example51", (Fraction(0), Fraction(0)),
                             dual_point=[list(r) for r in EXAMPLE51_Y], m_param=2))


def generate(family: str, m: int | None = None, scale=1) -> SdpInstance:
    if family == "small":
        return gen_small(scale)
    if family == "single-finite":
        return gen_single(m, scale, False)
    if family == "single-inf":
        return gen_single(m, scale, True)
    if family == "double":
        return gen_double(m)
    if family == "double-flipped":
        return gen_double(m, flipped=True)
    if family == "example51":
        return gen_example51()
    raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


# -- messing -----------------------------------------------------------------------

@dataclass
class MessTransform:
    T: list
    log: list = field(default_factory=list)
    seed: int | None = None

    def det(self):
        return det(self.T)

    def to_dict(self):
        return {"T": [[int(v) for v in r] for r in self.T], "log": self.log, "seed": self.seed}


def _random_unimodular(n, seed, num_ops, bound):
    rng = np.random.default_rng(seed)
    T = np.eye(n, dtype=np.int64)
    log = []
    attempts = 0
    while len(log) < num_ops and attempts < 50 * max(num_ops, 1):
        attempts += 1
        kind = rng.choice(["add", "add", "add", "swap", "neg"])
        i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
        if kind == "add":
            k = int(rng.integers(-bound, bound + 1))
            if k == 0:
                continue
            U = T.copy()
            U[:, j] += k * T[:, i]  # T <- T (I + k e_i e_j^T)
            if np.max(np.abs(U)) > bound:
                continue
            T = U
            log.append({"op": "add", "src": i, "dst": j, "k": k})
        elif kind == "swap":
            T[:, [i, j]] = T[:, [j, i]]
            log.append({"op": "swap", "i": i, "j": j})
        else:
            T[:, i] = -T[:, i]
            log.append({"op": "neg", "i": i})
    return [[int(v) for v in r] for r in T], log


def mess(inst: SdpInstance, seed: int = 0, num_ops: int | None = None, entry_bound: int = 2):
    """Congruence by a random integer unimodular T; returns (instance, MessTransform)."""
    if entry_bound < 1:
        raise ValueError("entry_bound must be >= 1")
    n = inst.n
    num_ops = 3 * n if num_ops is None else num_ops
    if num_ops < 0:
        raise ValueError("num_ops must be >= 0")
    T, log = _random_unimodular(n, seed, num_ops, entry_bound)
    mt = MessTransform(T, log, seed)
    d = mt.det()
    if d not in (1, -1):  # cannot happen for products of elementary matrices
        raise ArithmeticError(f"messing transform has det {d}")
    Tm = np.array([[Fraction(v) for v in r] for r in T], dtype=object)
    A = tuple(congruence(a, Tm, check=False) for a in inst.A)
    B = congruence(inst.B, Tm, check=False)
    meta = dict(inst.meta)
    name = meta.get("name", "")
    meta["name"] = name.replace("_clean_", "_messy_") if "_clean_" in name else (name + "_messy" if name else "messy")
    meta["mess"] = {"seed": seed, "num_ops": num_ops, "entry_bound": entry_bound, "T": mt.to_dict()["T"], "log": log}
    meta["reform_log"] = list(meta.get("reform_log", [])) + [{"op": "Congruence", "T": [[str(v) for v in r] for r in T]}]
    meta["assumption11_holds"] = bool(meta.get("assumption11_holds")) and b_identity_rank(B) is not None
    return SdpInstance(A, B, inst.c, meta), mt


def unmess(inst: SdpInstance, T=None) -> SdpInstance:
    """Undo a messing congruence (T from the argument or inst.meta['mess'])."""
    if T is None:
        T = inst.meta["mess"]["T"]
    if isinstance(T, MessTransform):
        T = T.T
    Ti = np.array(inverse([[Fraction(v) for v in r] for r in T]), dtype=object)
    A = tuple(congruence(a, Ti, check=False) for a in inst.A)
    B = congruence(inst.B, Ti, check=False)
    meta = dict(inst.meta)
    meta.pop("mess", None)
    meta["reform_log"] = list(meta.get("reform_log", [])) + [
        {"op": "Congruence", "T": [[str(v) for v in r] for r in Ti]}]
    meta["name"] = meta.get("name", "").replace("_messy_", "_clean_")
    meta["assumption11_holds"] = b_identity_rank(B) is not None
    return SdpInstance(A, B, inst.c, meta)


# -- library -----------------------------------------------------------------------

def _library_specs(ms, doubles):
    specs = []
    for kind in ("finite", "inf"):
        for m in ms:
            for messy in (False, True):
                specs.append(("single", kind, m, messy))
    if doubles:
        for m in ms:
            for messy in (False, True):
                specs.append(("double", None, m, messy))
    return specs


def _build_one(out, spec, seed_base, scale):
    from . import io as gio

    fam, kind, m, messy = spec
    if fam == "single":
        inst = gen_single(m, scale, infinite=(kind == "inf"))
    else:
        inst = gen_double(m)
    seed = None
    if messy:
        seed = seed_base + 1000 * (fam == "double") + 100 * (kind == "inf") + m
        inst, _ = mess(inst, seed)
    name = inst.name
    gio.save(inst, out / f"{name}.json")
    gio.export_sedumi(inst, out / "sedumi" / name)
    kg = inst.meta["known_gap"]
    return {"name": name, "m": inst.m, "n": inst.n,
            "known_gap": [gio.value_str(kg[0]), gio.value_str(kg[1])],
            "mess_seed": seed, "json": f"{name}.json", "sedumi": f"sedumi/{name}"}


def build_library(out_dir, ms=range(2, 12), scale=10, doubles=False, seed_base=20240, workers=None):
    """Write the benchmark library (JSON + SeDuMi text) and manifest.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    specs = _library_specs(list(ms), doubles)
    workers = workers or min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        entries = list(ex.map(lambda s: _build_one(out, s, seed_base, scale), specs))
    manifest = {"count": len(entries), "instances": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return manifest


# -- perturbed dual ----------------------------------------------------------------

def perturb_dual(inst: SdpInstance, eps, sign: int = -1) -> SdpInstance:
    """Fold Y <- Y - sign*eps*I into the dual: c_i' = c_i + sign*eps*tr(A_i).

    ``sign=-1`` is the substitution A_i . (Y + eps I) = c_i.  For a
    messed positive-gap instance this makes the dual infeasible (a psd
    A_i with c_i = 0 gets a negative right-hand side); ``sign=+1``
    shifts the other way and yields a strictly feasible dual.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    exact = inst.exact and not isinstance(eps, float)
    eps = as_rat(eps) if exact else float(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    c = tuple(ci + sign * eps * Ai.trace() for ci, Ai in zip(inst.c, inst.A))
    meta = dict(inst.meta)
    meta["perturb"] = {"eps": eps, "sign": sign}
    meta.pop("known_gap", None)
    return SdpInstance(inst.A, inst.B, c, meta)
