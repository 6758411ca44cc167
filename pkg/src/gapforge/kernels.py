"""Backend selection for the integer kernels.

The Cython build is used when it imports; set ``GAPFORGE_PURE_PYTHON=1``
to force the pure-Python fallback.  Inputs too large for int64 are routed
to the Python version transparently.
"""

import os

from . import _pykernels

BACKEND = "python"
_c = None
if os.environ.get("GAPFORGE_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _c
        BACKEND = "cython"
    except ImportError:
        _c = None

# entries above this can overflow int64 in the first elimination step
_SAFE = 1 << 30


def _small(rows):
    for r in rows:
        for v in r:
            if v > _SAFE or v < -_SAFE:
                return False
    return True


def int_inertia(rows):
    if _c is not None and _small(rows):
        try:
            return _c.int_inertia(rows)
        except OverflowError:
            pass
    return _pykernels.int_inertia(rows)


def int_det(rows):
    if _c is not None and _small(rows):
        try:
            return _c.int_det(rows)
        except OverflowError:
            pass
    return _pykernels.int_det(rows)
