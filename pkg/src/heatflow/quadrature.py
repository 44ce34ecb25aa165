"""Quadrature rules: vectorised adaptive Gauss-Kronrod (7/15) and Gauss-Hermite."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import PrecisionLoss

_EPS = np.finfo(float).eps
MAX_PANELS = 1 << 16

# 15-point Kronrod nodes on [-1, 1] (nonnegative half) with the embedded
# 7-point Gauss weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
WG = np.zeros(15)
WG[1:7:2] = _WG[:3]
WG[7] = _WG[3]
WG[9:15:2] = _WG[2::-1]


def _gk_panels(f, a, b):
    """Kronrod estimate and |K - G| for each panel [a_i, b_i]."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * NODES[None, :]
    fx = np.asarray(f(x.ravel())).reshape(x.shape)
    k = h * (fx @ WK)
    g = h * (fx @ WG)
    noise = 50.0 * _EPS * h * (np.abs(fx) @ WK)
    return k, np.abs(k - g), noise


def gk_adaptive(f, a, b, abs_tol=1e-12, rel_tol=1e-12, max_refinements=60, breakpoints=(), initial=8):
    """Integrate a vectorised f over [a, b] by panel-bisecting GK15.

    ``f`` takes a 1-D float array and returns a (real or complex) array.
    Every panel whose error estimate exceeds its length share of the budget
    is split, unless its error is already at the rounding floor of its own
    absolute integral.  The whole integral also stops once its error is at
    the rounding floor of int |f| (an absolute tolerance below that cannot
    be met when f cancels, e.g. next to a zero of the integral).  Rounds are
    capped by ``max_refinements`` and the live panel count by MAX_PANELS.
    Returns (value, error_estimate).  Panel sums are accumulated in a fixed
    left to right order so results do not depend on evaluation batching.
    """
    edges = np.unique(np.concatenate([[a, b], [p for p in breakpoints if a < p < b]]))
    parts = [np.linspace(lo, hi, initial + 1) for lo, hi in zip(edges[:-1], edges[1:])]
    grid = np.unique(np.concatenate(parts))
    pa, pb = grid[:-1], grid[1:]
    done_val, done_err, done_pos = [], [], []
    done_noise = 0.0
    L = b - a
    for _ in range(max_refinements):
        if len(pa) > MAX_PANELS:
            break
        k, e, noise = _gk_panels(f, pa, pb)
        total = sum(done_val) + k.sum() if done_val else k.sum()
        tol = max(abs_tol, rel_tol * abs(total))
        share = tol * (pb - pa) / L
        ok = e <= np.maximum(share, noise)
        floor = done_noise + noise.sum()
        if ok.all() or (sum(done_err) + e.sum() <= max(0.5 * tol, floor)):
            done_val.extend(k)
            done_err.extend(e)
            done_pos.extend(pa)
            order = np.argsort(done_pos, kind="stable")
            vals = np.asarray(done_val)[order]
            return vals.sum(), float(np.sum(done_err))
        done_val.extend(k[ok])
        done_err.extend(e[ok])
        done_pos.extend(pa[ok])
        done_noise += float(noise[ok].sum())
        ca, cb = pa[~ok], pb[~ok]
        mid = 0.5 * (ca + cb)
        pa = np.concatenate([ca, mid])
        pb = np.concatenate([mid, cb])
        srt = np.argsort(pa, kind="stable")
        pa, pb = pa[srt], pb[srt]
    raise PrecisionLoss(
        f"adaptive quadrature did not meet tolerance in {max_refinements} refinements",
        error=float(np.sum(done_err) + e.sum()),
    )


@lru_cache(maxsize=16)
def hermite_rule(n: int):
    """Gauss-Hermite nodes/weights for weight exp(-u^2)."""
    u, w = hermgauss(n)
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w
