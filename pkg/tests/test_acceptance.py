"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in
the terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import random
import tempfile
import time
from pathlib import Path

import numpy as np

from gapforge import io as gio
from gapforge.canonical2 import CanonicalForm, canonicalize, recognize_pref
from gapforge.facial import (bounds_check, certify_gap, claim_check, minimal_cone, primal_analysis,
                             singularity_degree, weak_infeasibility_probe)
from gapforge.faces import AxisFace, is_regularized, verify_fr_sequence
from gapforge.generators import (build_library, gen_double, gen_example51, gen_single, gen_small, mess)
from gapforge.rational import INF, is_inf
from gapforge.sdpmodel import AddToB, Combine, Congruence, Swap, apply_reform, dual_residual, shift_value, slack_at
from gapforge.symkernel import PsdKind, SymMat, psd_status

RESULTS = []


class Criterion:
    def __init__(self, num, title):
        self.num, self.title = num, title
        self.failures = []
        self.notes = []

    def check(self, ok, msg):
        if not ok:
            self.failures.append(msg)
        return ok

    def note(self, msg):
        self.notes.append(msg)

    def finish(self):
        ok = not self.failures
        detail = "; ".join(self.failures[:3] if not ok else self.notes)
        line = f"AC{self.num:<2d} {'PASS' if ok else 'FAIL'}  {self.title}" + (f"  [{detail}]" if detail else "")
        print(line)
        RESULTS.append(line)
        assert ok, line


def timed(f, *a, **kw):
    t = time.perf_counter()
    out = f(*a, **kw)
    return out, time.perf_counter() - t


def test_ac01_small_exact_gap():
    c = Criterion(1, "exact gap on the small instance")
    certify_gap(gen_small(1))  # warm caches/imports before timing
    for scale, want in ((1, (0, 1)), (10, (0, 10))):
        cert, dt = timed(certify_gap, gen_small(scale))
        c.check(cert.values() == want, f"scale {scale}: got {cert.values()}")
        c.check(dt < 0.1, f"scale {scale}: {dt:.3f} s")
        c.note(f"scale {scale}: {dt * 1e3:.1f} ms")
    c.finish()


def test_ac02_single_finite():
    c = Criterion(2, "single finite family m = 2..11")
    worst = 0.0
    for m in range(2, 12):
        cert, dt = timed(certify_gap, gen_single(m, 10))
        worst = max(worst, dt)
        c.check(cert.values() == (0, 10), f"m={m}: {cert.values()}")
        c.check(len(cert.elimination_trace) == m - 1, f"m={m}: trace length {len(cert.elimination_trace)}")
        c.check(dt < 1.0, f"m={m}: {dt:.2f} s")
    c.note(f"slowest {worst:.3f} s")
    c.finish()


def test_ac03_single_infinite_and_probe():
    c = Criterion(3, "single infinite family and the distance probe")
    for m in range(2, 12):
        inst = gen_single(m, 10, True)
        cert = certify_gap(inst)
        c.check(cert.primal_value == 0 and is_inf(cert.dual_value), f"m={m}: {cert.values()}")
        c.check(cert.weakly_infeasible_dual, f"m={m}: weak-infeasibility flag unset")
        pa = primal_analysis(inst)
        c.check(slack_at(inst, pa.point).feasible and not is_inf(pa.value), f"m={m}: primal not feasible/finite")
    finals = []
    for m in range(2, 7):
        res = weak_infeasibility_probe(gen_single(m, 10, True), 10000)
        finals.append(res["final"])
        c.check(res["final"] < 1e-6 and res["iterations"] <= 10000, f"probe m={m}: {res['final']:.2e}")
        c.check(res["monotone"], f"probe m={m}: trace not monotone")
    c.note("probe finals " + ", ".join(f"{v:.1e}" for v in finals))
    c.finish()


def test_ac04_double_family():
    c = Criterion(4, "double family m = 2..8 and the flipped control")
    for m in range(2, 9):
        cert = certify_gap(gen_double(m))
        c.check(cert.values() == (0, 1), f"m={m}: {cert.values()}")
        ctl = certify_gap(gen_double(m, flipped=True))
        c.check(ctl.conclusive and ctl.primal_value == ctl.dual_value, f"flipped m={m}: {ctl.values()}")
    c.finish()


def test_ac05_singularity_degrees():
    c = Criterion(5, "singularity degrees of the single and double families")
    for m in range(2, 12):
        inst = gen_single(m)
        seq = list(inst.A[:m - 1])
        chain = verify_fr_sequence(seq, list(inst.A), require_strict=True)
        c.check(chain.terminal == AxisFace(m + 1, frozenset(range(m - 1))), f"single m={m}: face {chain.terminal}")
        c.check(is_regularized(seq) == (1,) * (m - 1), f"single m={m}: not regularized")
        sd = singularity_degree(inst, "D", trials=100)
        c.check(sd["value"] == m - 1, f"single m={m}: d(D) = {sd['value']}")
        if m + 1 <= 7:
            cc = claim_check(inst, "D", trials=1000)
            c.check(cc["ok"] and cc["passed"] == 1000, f"single m={m}: claim_check {cc['passed']}/1000")
    for m in range(2, 9):
        inst = gen_double(m)
        seq = [inst.B] + list(inst.A[1:-1]) + [-inst.A[-1]]
        chain = verify_fr_sequence(seq, [inst.B] + list(inst.A), require_strict=True)
        c.check(chain.terminal == AxisFace(2 * m + 1, frozenset(range(2 * m))), f"double m={m}: {chain.terminal}")
        mc = minimal_cone(inst, "HD")
        c.check(mc.face == chain.terminal, f"double m={m}: minimal cone mismatch")
        sd = singularity_degree(inst, "HD", trials=100)
        c.check(sd["value"] == m, f"double m={m}: d(HD) = {sd['value']}")
        if m <= 3:
            cc = claim_check(inst, "HD", trials=1000)
            c.check(cc["ok"] and cc["passed"] == 1000, f"double m={m}: claim_check {cc['passed']}/1000")
    c.finish()


def test_ac06_example51():
    c = Criterion(6, "the d(HD) = m+1 instance")
    inst = gen_example51()
    c.check(inst.c == (13, -3), f"c = {inst.c}")
    Y = SymMat(inst.meta["dual_point"])
    c.check(dual_residual(inst, Y) == [0, 0], "dual residual nonzero")
    c.check(psd_status(Y).kind is PsdKind.POSITIVE_DEFINITE, "Y not positive definite")
    pa = primal_analysis(inst)
    c.check(pa.forces_zero and pa.value == 0, "primal equations do not force x = 0")
    bc = bounds_check(inst)
    c.check(bc["ok"] and bc["d_HD_equals_m_plus_1"] and bc["values"] == ["0", "0"], f"bounds_check {bc}")
    c.check(singularity_degree(inst, "HD", trials=200)["value"] == 3, "d(HD) != 3")
    c.finish()


def test_ac07_canonicalizer():
    c = Criterion(7, "canonical form of the messed small instance")
    form = canonicalize(gen_small(1))
    c.check(isinstance(form, CanonicalForm) and form.Sigma == [1] and form.s == 0, "small: Sigma/s not recovered")
    worst_val = worst_res = worst_t = 0.0
    for seed in range(20):
        inst, _ = mess(gen_small(10), seed, 8, 2)
        form, dt = timed(canonicalize, inst)
        if not c.check(isinstance(form, CanonicalForm), f"seed {seed}: {form}"):
            continue
        dv = recognize_pref(form).dual_value
        err = abs(float(dv) - 10) if not is_inf(dv) else float("inf")
        worst_val, worst_res, worst_t = max(worst_val, err), max(worst_res, form.max_residual()), max(worst_t, dt)
        c.check(err <= 1e-6, f"seed {seed}: dual {dv}")
        c.check(form.max_residual() <= 1e-7, f"seed {seed}: residual {form.max_residual():.2e}")
        c.check(dt < 2.0, f"seed {seed}: {dt:.2f} s")
    c.note(f"max |dual-10| {worst_val:.1e}, max residual {worst_res:.1e}, slowest {worst_t:.2f} s")
    c.finish()


def _random_ops(rng, inst, k=4):
    m, n = inst.m, inst.n
    ops = []
    for _ in range(k):
        kind = rng.choice(["swap", "combine", "addtob", "congruence"])
        if kind == "swap" and m > 1:
            i, j = rng.sample(range(m), 2)
            ops.append(Swap(i, j))
        elif kind == "combine":
            i = rng.randrange(m)
            j = rng.randrange(m)
            lam = rng.choice([1, -1, 2, -2, 3])
            mu = 0 if i == j else rng.randint(-2, 2)
            ops.append(Combine(i, lam, j, mu))
        elif kind == "addtob":
            ops.append(AddToB(rng.randrange(m), rng.choice([1, -1, 2])))
        else:
            T = [[int(a == b) for b in range(n)] for a in range(n)]
            for _ in range(3):
                a, b = rng.sample(range(n), 2)
                k2 = rng.choice([1, -1])
                for r in range(n):
                    T[r][b] += k2 * T[r][a]
            ops.append(Congruence(T))
    return ops


def test_ac08_reformulation_invariance():
    c = Criterion(8, "certified values invariant under reformulation")
    rng = random.Random(8)
    family = [gen_small(10), gen_example51()]
    for m in range(2, 7):
        family += [gen_single(m, 10), gen_single(m, 10, True), gen_double(m), gen_double(m, True)]
    checked = 0
    for inst in family:
        base = certify_gap(inst).values()
        for _ in range(10):
            new = inst
            for op in _random_ops(rng, inst):
                new = apply_reform(new, op)
            cert = certify_gap(new)
            off = new.meta["value_offset"]
            got = (shift_value(cert.primal_value, off), shift_value(cert.dual_value, off))
            c.check(got == base, f"{inst.name}: {base} -> {got}")
            checked += 1
    c.note(f"{checked} reformulated instances")
    c.finish()


def test_ac09_bounds():
    c = Criterion(9, "d(D) <= m and d(HD) <= m+1 on all generated instances")
    insts = [gen_small(1), gen_small(10), gen_example51()]
    for m in range(2, 12):
        for inst in (gen_single(m, 10), gen_single(m, 10, True), gen_double(m), gen_double(m, True)):
            insts += [inst, mess(inst, 100 + m)[0]]
    for inst in insts:
        bc = bounds_check(inst)
        c.check(bc["ok"], f"{inst.name}: {bc.get('violations')}")
    c.note(f"{len(insts)} instances")
    c.finish()


def _sedumi_rows(d):
    rows = [ln.split() for ln in (d / "A.txt").read_text().splitlines() if ln.strip()]
    return int(rows[-1][0]), int(rows[-1][1])


def test_ac10_io():
    c = Criterion(10, "library build, JSON round trip, SeDuMi export")
    with tempfile.TemporaryDirectory() as tmp:
        man, dt = timed(build_library, tmp)
        c.check(man["count"] == 40, f"{man['count']} instances")
        c.check(dt < 10, f"build took {dt:.1f} s")
        for e in man["instances"]:
            p = Path(tmp) / e["json"]
            text = p.read_text()
            inst = gio.loads(text)
            c.check(gio.dumps(inst) == text, f"{e['name']}: JSON round trip differs")
            d = Path(tmp) / e["sedumi"]
            rows, cols = _sedumi_rows(d)
            c.check((rows, cols) == (inst.m, inst.n ** 2), f"{e['name']}: A is {rows} x {cols}")
            c.check(gio.import_sedumi(d).same_data(inst), f"{e['name']}: SeDuMi reimport differs")
        c.note(f"built in {dt:.2f} s")
    c.finish()


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_ac"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
