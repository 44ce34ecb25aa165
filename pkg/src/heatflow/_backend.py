"""Kernel backend selection.

The compiled ``_ckernels`` module is used when it imports; otherwise the
numpy fallback.  Set ``HEATFLOW_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _pykernels

kernels = _pykernels
if os.environ.get("HEATFLOW_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as kernels  # noqa: F811
    except ImportError:
        kernels = _pykernels

BACKEND = kernels.NAME


def get(name=None):
    """Return a kernel module by name ('cython', 'numpy') or the active one."""
    if name is None:
        return kernels
    if name == "numpy":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


THREADS = 1


def set_threads(n):
    """Cap the worker threads used by :func:`coulomb_sum` (1 = serial)."""
    global THREADS
    THREADS = max(1, int(n))


def coulomb_sum(targets, sources, skip):
    """Active-backend coulomb_sum, split over targets when THREADS > 1.

    Each target is summed in the same fixed order either way, so the result
    does not depend on the thread count.
    """
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    skip = np.ascontiguousarray(skip, dtype=np.int64)
    if THREADS == 1 or len(targets) < 256 or kernels is _pykernels:
        return kernels.coulomb_sum(targets, sources, skip)
    from concurrent.futures import ThreadPoolExecutor

    parts = np.array_split(np.arange(len(targets)), THREADS)
    with ThreadPoolExecutor(THREADS) as ex:
        outs = ex.map(lambda ix: kernels.coulomb_sum(targets[ix], sources, skip[ix]), parts)
        return np.concatenate(list(outs))
