"""Kernel backend selection.

The compiled extension is used when it imports; set ``CBIOU_BACKEND=python``
to force the pure-Python fallback. :func:`use` switches at runtime (the
benchmark does this to compare the two).
"""

import logging
import os

import numpy as np

from . import _pykernels

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels

kernels = _pykernels
name = "python"


def use(backend):
    """Select the kernel backend by name: ``"compiled"`` or ``"python"``."""
    global kernels, name
    if backend not in BACKENDS:
        raise ValueError(f"backend {backend!r} unavailable; have {sorted(BACKENDS)}")
    kernels = BACKENDS[backend]
    name = backend


def _initial():
    requested = os.environ.get("CBIOU_BACKEND", "").strip().lower()
    if requested:
        return requested
    return "compiled" if _ckernels is not None else "python"


use(_initial())
if name == "python" and _ckernels is None:
    log.debug("compiled kernels unavailable; using pure-Python fallback")


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def pairwise_scores(a, b, kind, scale=0.0):
    return kernels.pairwise_scores(_f64(a).reshape(-1, 4), _f64(b).reshape(-1, 4), kind, float(scale))


def solve_assignment(score):
    return kernels.solve_assignment(_f64(score))


def average_linkage(dist, cut):
    # kernel mutates its input
    return kernels.average_linkage(np.array(dist, dtype=np.float64, order="C"), float(cut))
