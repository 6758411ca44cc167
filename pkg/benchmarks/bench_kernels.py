"""Compare the Cython and pure-Python integer kernels.

    python3 benchmarks/bench_kernels.py [--reps 200]

Both backends are imported directly, so one run times both; results
are checked to agree before timing.
"""

import argparse
import timeit

import numpy as np

from gapforge import _pykernels

try:
    from gapforge import _ckernels
except ImportError:
    _ckernels = None


def _cases(rng, n, count=20):
    out = []
    for _ in range(count):
        G = rng.integers(-2, 3, (n, n))
        S = G @ G.T  # psd of full rank (generically)
        if n > 2:
            S[-1, :] = S[0, :]
            S[:, -1] = S[:, 0]  # force a kernel
        out.append([[int(v) for v in row] for row in S])
    return out


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=200)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the Python kernels are available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':12s} {'n':>3s} {'python us':>11s} {'cython us':>11s} {'speedup':>8s}")
    for n in (4, 6, 8, 10):
        base = _cases(rng, n)
        for name in ("int_inertia", "int_det"):
            py = getattr(_pykernels, name)
            cases = list(base)
            if _ckernels is not None:
                cy = getattr(_ckernels, name)
                ok = []
                for rows in cases:
                    try:
                        assert py(rows) == cy(rows), (name, rows)
                        ok.append(rows)
                    except OverflowError:
                        pass  # the dispatcher routes these to Python
                skipped = len(cases) - len(ok)
                cases = ok
            t_py = timeit.timeit(lambda: [py(r) for r in cases], number=args.reps) / (args.reps * len(cases))
            if _ckernels is None:
                print(f"{name:12s} {n:3d} {t_py * 1e6:11.2f} {'-':>11s} {'-':>8s}")
                continue
            t_cy = timeit.timeit(lambda: [cy(r) for r in cases], number=args.reps) / (args.reps * len(cases))
            note = f"  ({skipped} overflow cases skipped)" if skipped else ""
            print(f"{name:12s} {n:3d} {t_py * 1e6:11.2f} {t_cy * 1e6:11.2f} {t_py / t_cy:7.1f}x{note}")


if __name__ == "__main__":
    main()
