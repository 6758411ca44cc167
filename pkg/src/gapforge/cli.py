"""Command-line interface.

Exit codes: 0 success, 1 usage or I/O error, 2 inconclusive,
3 invariant or bound violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as gio
from .rational import as_rat, is_inf

EXIT_OK, EXIT_USAGE, EXIT_INCONCLUSIVE, EXIT_VIOLATION = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _vs(v):
    return gio.value_str(v)


def _load(path):
    return gio.load(path)


# -- subcommands ------------------------------------------------------------------

def cmd_generate(args):
    from .generators import generate, mess

    scale = as_rat(args.scale) if args.scale is not None else None
    if args.family in ("single-finite", "single-inf", "double") and args.m is None:
        raise _UsageError(f"--m is required for family {args.family}")
    kw = {} if scale is None else {"scale": scale}
    inst = generate(args.family, args.m, **kw)
    if args.mess_seed is not None:
        inst, _ = mess(inst, args.mess_seed, args.mess_ops, args.mess_bound)
    gio.save(inst, args.out)
    print(f"wrote {args.out}: {inst.name} (m={inst.m}, n={inst.n})")
    return EXIT_OK


def cmd_certify(args):
    from .facial import certify_gap

    inst = _load(args.path)
    try:
        cert = certify_gap(inst)
    except AssertionError as e:
        print(f"invariant violated: {e}", file=sys.stderr)
        return EXIT_VIOLATION
    if args.json:
        print(json.dumps(gio.report_dict(cert, instance=inst.name), indent=1))
    else:
        print(f"instance: {inst.name or args.path} (m={inst.m}, n={inst.n})")
        print(f"primal value: {_vs(cert.primal_value)}")
        if is_inf(cert.dual_value):
            kind = "weakly infeasible" if cert.weakly_infeasible_dual else "infeasible"
            print(f"dual infeasible ({kind}); gap = +inf")
        else:
            print(f"dual value: {_vs(cert.dual_value)}")
            print(f"gap: {_vs(cert.gap)}")
        print(f"rule: {cert.dual_rule}; elimination steps: {len(cert.elimination_trace)}; "
              f"coordinates: {cert.coordinates}")
    return EXIT_OK if cert.conclusive else EXIT_INCONCLUSIVE


def cmd_canonicalize(args):
    from dataclasses import replace

    from .canonical2 import (CanonicalForm, Inconclusive, NormalizationError, canonicalize,
                             recognize_pref)
    from .symkernel import get_tolerances

    inst = _load(args.path)
    tol = get_tolerances()
    if args.tol_psd is not None:
        tol = replace(tol, psd=args.tol_psd)
    if args.tol_zero is not None:
        tol = replace(tol, zero=args.tol_zero)
    try:
        res = canonicalize(inst, tol, angles=args.angles)
    except NormalizationError as e:
        print(f"inconclusive: {e}")
        return EXIT_INCONCLUSIVE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if isinstance(res, Inconclusive):
        print(f"inconclusive: {res.reason} {res.diagnostics}")
        return EXIT_INCONCLUSIVE
    if not isinstance(res, CanonicalForm):
        print(f"no gap: {res.reason} ({res.detail})")
        return EXIT_OK
    cert = recognize_pref(res)
    summ = res.summary()
    print(f"canonical form ({summ['backend']}): p={res.p}, r={res.r}, s={res.s}")
    print(f"Lambda = {summ['Lambda']}")
    print(f"Sigma = {summ['Sigma']}")
    print(f"M-norm = {summ['M_norm']:.6g}")
    print(f"c2' = {summ['c2prime']}")
    print(f"values: primal {_vs(cert.primal_value)}, dual {_vs(cert.dual_value)}; gap = "
          f"{'+inf' if is_inf(cert.dual_value) else _vs(cert.dual_value - cert.primal_value)}")
    worst = res.max_residual()
    print(f"max template residual: {worst:.3e}")
    if worst > tol.zero:
        print("template residuals exceed the zero tolerance", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_singdeg(args):
    from .facial import singularity_degree

    inst = _load(args.path)
    res = singularity_degree(inst, args.which, trials=args.trials)
    seq = res.get("sequence") or []
    print(f"d({args.which}) = {res['value']} [{res['tag']}]")
    if seq:
        print(f"sequence: ({', '.join(seq)})")
    if res.get("terminal_face"):
        print(f"terminal face: {res['terminal_face']}")
    if res["value"] is None:
        return EXIT_INCONCLUSIVE
    cap = inst.m + (1 if args.which == "HD" else 0)
    if res["value"] > cap:
        print(f"bound violated: d({args.which}) > {cap}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_claimcheck(args):
    from .facial import claim_check

    inst = _load(args.path)
    res = claim_check(inst, args.which, trials=args.trials, rng_seed=args.seed)
    print(f"claim ({res['which']}) over lin{{{', '.join(res['span'])}}}: {res['passed']}/{res['trials']} trials, "
          f"{res['steps']} steps, symbolic uniqueness: {res['symbolic_unique']}")
    if res["counterexamples"]:
        print(f"counterexamples: {res['counterexamples'][:3]}")
    return EXIT_OK if res["ok"] else EXIT_VIOLATION


def cmd_probe(args):
    from .facial import weak_infeasibility_probe

    inst = _load(args.path)
    res = weak_infeasibility_probe(inst, args.iters, method=args.method)
    tr = res["distances"]
    marks = sorted({0, len(tr) // 4, len(tr) // 2, 3 * len(tr) // 4, len(tr) - 1})
    for k in marks:
        print(f"iter {k:6d}  distance {tr[k]:.3e}")
    print(f"final distance {res['final']:.3e} after {res['iterations']} iterations "
          f"({res['method']}, monotone={res['monotone']})")
    return EXIT_OK


def cmd_export(args):
    inst = _load(args.path)
    stem = Path(args.path).with_suffix("")
    if args.format == "json":
        if args.out:
            gio.save(inst, args.out)
        else:
            sys.stdout.write(gio.dumps(inst))
        return EXIT_OK
    try:
        if args.format == "sedumi":
            out = gio.export_sedumi(inst, args.out or f"{stem}_sedumi")
        else:
            out = gio.export_sdpa(inst, args.out or f"{stem}.dat-s")
    except gio.PrecisionError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {out}")
    return EXIT_OK


def cmd_library(args):
    from .generators import build_library

    man = build_library(args.out, doubles=args.doubles)
    print(f"wrote {man['count']} instances to {args.out}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="gapforge", description="Positive-duality-gap SDP instances and certificates.")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)

    g = sub.add_parser("generate", help="write a family instance as JSON")
    g.add_argument("--family", required=True,
                   choices=["small", "single-finite", "single-inf", "double", "double-flipped", "example51"])
    g.add_argument("--m", type=int)
    g.add_argument("--scale", default=None, help="objective scale (rational, e.g. 10 or 1/2)")
    g.add_argument("--mess-seed", type=int)
    g.add_argument("--mess-ops", type=int)
    g.add_argument("--mess-bound", type=int, default=2)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("certify", help="exact optimal values of both sides")
    c.add_argument("path")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_certify)

    k = sub.add_parser("canonicalize", help="two-variable canonical form")
    k.add_argument("path")
    k.add_argument("--tol-psd", type=float)
    k.add_argument("--tol-zero", type=float)
    k.add_argument("--angles", type=int, default=4096)
    k.set_defaults(func=cmd_canonicalize)

    s = sub.add_parser("singdeg", help="singularity degree of the dual or homogeneous dual")
    s.add_argument("path")
    s.add_argument("--which", choices=["D", "HD"], default="D")
    s.add_argument("--trials", type=int, default=200)
    s.set_defaults(func=cmd_singdeg)

    cc = sub.add_parser("claimcheck", help="sample the uniqueness claims behind the singularity degrees")
    cc.add_argument("path")
    cc.add_argument("--which", choices=["D", "HD"], default="D")
    cc.add_argument("--trials", type=int, default=1000)
    cc.add_argument("--seed", type=int, default=0)
    cc.set_defaults(func=cmd_claimcheck)

    pr = sub.add_parser("probe", help="distance of the dual affine set to the psd cone")
    pr.add_argument("path")
    pr.add_argument("--iters", type=int, default=10000)
    pr.add_argument("--method", choices=["newton", "ap"], default="newton")
    pr.set_defaults(func=cmd_probe)

    e = sub.add_parser("export", help="export to SeDuMi text, SDPA sparse or JSON")
    e.add_argument("path")
    e.add_argument("--format", choices=["sedumi", "sdpa", "json"], required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_export)

    lb = sub.add_parser("library", help="build the 40-instance library")
    lb.add_argument("--out", required=True)
    lb.add_argument("--doubles", action="store_true", help="also emit the double family")
    lb.set_defaults(func=cmd_library)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.cmd is None:
            raise _UsageError(parser.format_usage().strip())
        return args.func(args)
    except _UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except gio.InstanceFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
