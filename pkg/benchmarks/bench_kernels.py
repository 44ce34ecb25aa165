"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best wall time of each backend and the
speedup.  Both backends are fed identical inputs; the largest absolute
difference between their outputs is printed as a sanity check.
"""
import argparse
import time

import numpy as np

from heatflow import _backend
from heatflow.zetatable import theta


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    w = np.linspace(-0.9, 1.5, 20001).astype(complex) + 0.05j
    rng = np.random.default_rng(0)
    src = np.sort(rng.uniform(-2000, 2000, 4000))
    skip = np.arange(4000, dtype=np.int64)
    t = 1e6
    n = int(np.sqrt(t / (2 * np.pi)))
    th = theta(t)
    return {
        "phi_series (20001 pts)": lambda k: k.phi_series(w, 1e-17, 10000, False)[0],
        "dirichlet_sum (n=20000)": lambda k: k.dirichlet_sum(0.5 + 5000j, 20000),
        "rs_main_sum (t=1e6)": lambda k: k.rs_main_sum(t, th, n),
        "coulomb_sum (4000^2)": lambda k: k.coulomb_sum(src, src, skip),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    py = _backend.get("numpy")
    try:
        cy = _backend.get("cython")
    except ImportError:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    print(f"{'kernel':26s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases().items():
        tp, a = best_of(lambda: fn(py), args.repeat)
        tc, b = best_of(lambda: fn(cy), args.repeat)
        diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        print(f"{name:26s} {1e3 * tp:11.2f} {1e3 * tc:12.2f} {tp / tc:7.1f}x {diff:10.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
