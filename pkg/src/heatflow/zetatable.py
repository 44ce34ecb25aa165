"""Generate a verified table of zeta zero ordinates.

    python -m heatflow.zetatable --count 100000 --output zeros.txt

Z(t) is evaluated with the Riemann-Siegel formula (four correction terms)
above ``RS_MIN`` and with the Euler-Maclaurin zeta below it.  Zeros are
bracketed by sign changes of Z between Gram points; every Gram block between
consecutive good Gram points is required to contain as many sign changes as
its length (Rosser's rule, valid far beyond this range), with local
resampling where a block comes up short.  Brackets are then polished by
vectorised Illinois iteration.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np
from numpy.polynomial import chebyshev as C

from ._backend import kernels
from .special import _zeta_sm1

RS_MIN = 2000.0
TWO_PI = 2.0 * math.pi

_RS_COEFS = None


def theta(t):
    """Riemann-Siegel theta, asymptotic series (t >= 5)."""
    t = np.asarray(t, dtype=float)
    return (
        0.5 * t * np.log(t / TWO_PI) - 0.5 * t - math.pi / 8.0
        + 1.0 / (48.0 * t) + 7.0 / (5760.0 * t**3) + 31.0 / (80640.0 * t**5)
        + 381.0 / (1290240.0 * t**7)
    )


def _fit_rs_coefficients(deg=48):
    """Chebyshev fits on p in [0, 1] of the Riemann-Siegel corrections C0..C3."""
    import mpmath as mp

    with mp.workdps(40):
        pi = mp.pi

        def psi(p):
            return mp.cos(2 * pi * (p * p - p - mp.mpf(1) / 16)) / mp.cos(2 * pi * p)

        n = deg + 1
        nodes = 0.5 * (1 + np.cos(np.pi * (np.arange(n) + 0.5) / n))
        rows = []
        for p in nodes:
            d = mp.taylor(psi, mp.mpf(float(p)), 9)
            der = [d[k] * mp.factorial(k) for k in range(10)]
            c0 = der[0]
            c1 = -der[3] / (96 * pi**2)
            c2 = der[2] / (64 * pi**2) + der[6] / (18432 * pi**4)
            c3 = -der[1] / (64 * pi**2) - der[5] / (3840 * pi**4) - der[9] / (5308416 * pi**6)
            rows.append([float(c0), float(c1), float(c2), float(c3)])
    rows = np.array(rows)
    return [C.chebfit(2 * nodes - 1, rows[:, k], deg) for k in range(4)]


def rs_coefficients():
    global _RS_COEFS
    if _RS_COEFS is None:
        _RS_COEFS = _fit_rs_coefficients()
    return _RS_COEFS


def z_rs(t):
    """Hardy Z(t) by Riemann-Siegel with corrections C0..C3 (t >= RS_MIN)."""
    t = np.asarray(t, dtype=float)
    r = np.sqrt(t / TWO_PI)
    N = np.floor(r).astype(np.int64)
    p = r - N
    th = theta(t)
    main = 2.0 * kernels.rs_main_sum(t, th, N)
    a = 1.0 / r
    x = 2 * p - 1
    cs = rs_coefficients()
    corr = C.chebval(x, cs[0]) + a * (C.chebval(x, cs[1]) + a * (C.chebval(x, cs[2]) + a * C.chebval(x, cs[3])))
    sign = np.where(N % 2 == 1, 1.0, -1.0)
    return main + sign * np.sqrt(a) * corr


def z_em(t):
    """Hardy Z(t) via the Euler-Maclaurin zeta (any t > 5)."""
    t = np.asarray(t, dtype=float)
    s = 0.5 + 1j * t
    zeta = _zeta_sm1(s) / (s - 1.0)
    return (np.exp(1j * theta(t)) * zeta).real


def hardy_z(t):
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape)
    lo = t < RS_MIN
    if lo.any():
        out[lo] = z_em(t[lo])
    if (~lo).any():
        out[~lo] = z_rs(t[~lo])
    return out


def gram_points(n_max):
    """g_n for n = -1 .. n_max (theta(g_n) = n pi)."""
    n = np.arange(-1, n_max + 1, dtype=float)
    g = 2 * math.pi * math.e * np.exp(np.real(_lambertw((n + 0.125) / math.e)))
    for _ in range(60):
        f = theta(g) - n * math.pi
        g = g - f / (0.5 * np.log(g / TWO_PI))
        if np.max(np.abs(f)) < 1e-11:
            break
    return n.astype(np.int64), g


def _lambertw(x):
    from scipy.special import lambertw

    return lambertw(x)


def _sample_signs(lo, hi, k):
    """Z at k interior points of each [lo, hi] plus endpoints; returns (ts, zs)."""
    frac = np.linspace(0.0, 1.0, k + 2)
    ts = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    zs = hardy_z(ts.ravel()).reshape(ts.shape)
    return ts, zs


def _brackets(ts, zs):
    """Sign-change brackets along the rows of (ts, zs)."""
    s = np.sign(zs)
    ch = s[:, :-1] * s[:, 1:] < 0
    r, c = np.nonzero(ch)
    return ts[r, c], ts[r, c + 1], zs[r, c], zs[r, c + 1]


def _polish(a, b, fa, fb, tol=1e-11, iters=200):
    """Vectorised Illinois (modified regula falsi) on sign-change brackets."""
    a, b, fa, fb = a.copy(), b.copy(), fa.copy(), fb.copy()
    side = np.zeros(a.shape, dtype=np.int8)
    for _ in range(iters):
        active = (b - a) > tol * np.maximum(1.0, np.abs(a))
        if not active.any():
            break
        c = np.where(active, (a * fb - b * fa) / (fb - fa), a)
        bad = ~((c > a) & (c < b))
        c = np.where(bad, 0.5 * (a + b), c)
        fc = np.ones_like(c)
        fc[active] = hardy_z(c[active])
        left = active & (np.sign(fc) == np.sign(fa))
        right = active & ~left
        a = np.where(left, c, a)
        fa = np.where(left, fc, fa)
        fb = np.where(left & (side == 1), 0.5 * fb, fb)
        b = np.where(right, c, b)
        fb = np.where(right, fc, fb)
        fa = np.where(right & (side == -1), 0.5 * fa, fa)
        side = np.where(left, 1, np.where(right, -1, side)).astype(np.int8)
    return 0.5 * (a + b)


def find_zeta_zeros(count, samples=3, max_doublings=8, log=None):
    """First ``count`` ordinates, verified by Gram-block counting."""
    n_max = int(count * 1.02) + 50
    n, g = gram_points(n_max)
    zg = hardy_z(g)
    good = (np.where(n % 2 == 0, 1.0, -1.0) * zg) > 0
    good[0] = True  # g_{-1} ~ 9.67 lies below the first zero
    gi = np.nonzero(good)[0]
    lows, highs = g[:-1], g[1:]
    ts, zs = _sample_signs(lows, highs, samples)
    a, b, fa, fb = _brackets(ts, zs)
    interval = np.searchsorted(g, a, side="right") - 1
    per_interval = np.bincount(interval, minlength=len(g) - 1)
    # Gram blocks [g[gi[m]], g[gi[m+1]]] must hold gi[m+1] - gi[m] zeros.
    block_id = np.searchsorted(gi, np.arange(len(g) - 1), side="right") - 1
    want = np.diff(gi)
    have = np.bincount(block_id, weights=per_interval, minlength=len(gi))[: len(want)]
    short = np.nonzero(have < want)[0]
    extra = []
    drop = np.zeros(len(a), dtype=bool)
    for blk in short:
        i0, i1 = gi[blk], gi[blk + 1]
        k = samples
        for _ in range(max_doublings):
            k = 2 * k + 1
            ts2, zs2 = _sample_signs(np.array([g[i0]]), np.array([g[i1]]), k * (i1 - i0))
            bb = _brackets(ts2, zs2)
            if len(bb[0]) >= want[blk]:
                break
        else:
            raise RuntimeError(f"Gram block {i0}..{i1} (t ~ {g[i0]:.3f}) short of zeros")
        drop |= (a >= g[i0]) & (a < g[i1])
        extra.append(bb)
        if log:
            log(f"refined Gram block at t ~ {g[i0]:.2f}: {len(bb[0])}/{want[blk]} zeros")
    if extra:
        a = np.concatenate([a[~drop]] + [e[0] for e in extra])
        b = np.concatenate([b[~drop]] + [e[1] for e in extra])
        fa = np.concatenate([fa[~drop]] + [e[2] for e in extra])
        fb = np.concatenate([fb[~drop]] + [e[3] for e in extra])
    order = np.argsort(a)
    a, b, fa, fb = a[order], b[order], fa[order], fb[order]
    # completeness up to the last good Gram point used
    last_good = g[gi[-1]]
    n_below = int(np.sum(b <= last_good))
    if n_below != n[gi[-1]] + 1:
        raise RuntimeError(f"count mismatch below t={last_good}: {n_below} vs {n[gi[-1]] + 1}")
    if len(a) < count:
        raise RuntimeError("not enough zeros bracketed")
    a, b, fa, fb = a[:count], b[:count], fa[:count], fb[:count]
    return _polish(a, b, fa, fb)


def write_table(gammas, path, note=""):
    with open(path, "w") as fh:
        fh.write("# ordinates of nontrivial zeros of zeta(1/2 + i t), t > 0, increasing\n")
        fh.write("# Riemann-Siegel / Euler-Maclaurin Z(t), Gram-block verified (heatflow.zetatable)\n")
        if note:
            fh.write(f"# {note}\n")
        for g in gammas:
            fh.write(f"{g:.10f}\n")


def main(argv=None):
    ap = argparse.ArgumentParser(prog="python -m heatflow.zetatable", description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=100000)
    ap.add_argument("--output", required=True)
    args = ap.parse_args(argv)
    refined = []
    gam = find_zeta_zeros(args.count, log=refined.append)
    print(f"{len(refined)} Gram blocks needed resampling", file=sys.stderr)
    write_table(gam, args.output, note=f"{args.count} zeros")
    print(f"wrote {len(gam)} ordinates, last {gam[-1]:.6f}", file=sys.stderr)


if __name__ == "__main__":
    main()
