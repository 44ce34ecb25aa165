"""Gap statistics of zero data: normalized gaps, small-gap fractions,
equilibrium deviation and Lehmer-pair scanning.

Positions are in the x = 2 gamma scale throughout (a ZeroTable is read
through its configuration), so gaps are compared with classical gaps
xi_{j+1} - xi_j and with the mean spacing 1/Psi'(T) = 4 pi / log(T/4pi).
"""
from __future__ import annotations

import io
import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .energy import potential_V
from .errors import RangeError
from .special import DEFAULT_POLICY, ClassicalGrid, PrecisionPolicy, psi_prime
from .zeros import ZeroConfiguration, ZeroTable

LAMBDAS = (0.5, 0.6, 0.7, 0.77, 0.9, 1.0)


def _positions(source, j_lo, j_hi):
    """x_j for j in [j_lo, j_hi] from a table or a configuration."""
    if isinstance(source, ZeroTable):
        if not 1 <= j_lo < j_hi <= source.count:
            raise RangeError("range outside zero table", range=[j_lo, j_hi], count=source.count)
        return 2.0 * np.asarray(source.gammas[j_lo - 1: j_hi])
    if isinstance(source, ZeroConfiguration):
        lo, hi = source.window
        if not lo <= j_lo < j_hi <= hi:
            raise RangeError("range outside configuration window", range=[j_lo, j_hi], window=[lo, hi])
        return np.asarray(source.x[j_lo - lo: j_hi - lo + 1])
    raise RangeError(f"unsupported gap source {type(source).__name__}")


def _xi(grid, j_lo, j_hi, policy):
    if grid is None:
        grid = ClassicalGrid.build(j_lo, j_hi, policy)
    if not grid.covers(np.array([j_lo, j_hi])):
        raise RangeError("classical grid does not cover the range", range=[j_lo, j_hi], grid=list(grid.window))
    return grid.at(np.arange(j_lo, j_hi + 1))


def _dyadic_scale(js, x):
    """Mean-spacing factor Psi'(T) per gap, T = x at the start of the
    dyadic index block [2^m, 2^{m+1}) (clipped to the range)."""
    blocks = np.floor(np.log2(js)).astype(int)
    out = np.empty(len(js))
    for b in np.unique(blocks):
        m = blocks == b
        out[m] = psi_prime(x[np.argmax(m)])
    return out


@dataclass(frozen=True)
class GapReport:
    range: tuple
    js: np.ndarray = field(repr=False)
    gaps: np.ndarray = field(repr=False)
    normalized_gaps: np.ndarray = field(repr=False)
    mean: float = 0.0
    variance: float = 0.0
    fraction_below: dict = field(default_factory=dict)
    mean_spacing_mean: float = 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "gap", "normalized_gap"])
        for j, g, r in zip(self.js, self.gaps, self.normalized_gaps):
            w.writerow([int(j), repr(float(g)), repr(float(r))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "range": list(self.range),
            "count": int(len(self.gaps)),
            "mean": self.mean,
            "variance": self.variance,
            "mean_spacing_mean": self.mean_spacing_mean,
            "fraction_below": {f"{k:g}": float(f"{v:.4g}") for k, v in self.fraction_below.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def gap_report(source, grid: ClassicalGrid | None, range_, lambdas=LAMBDAS,
               policy: PrecisionPolicy = DEFAULT_POLICY) -> GapReport:
    """Gaps x_{j+1} - x_j for j in [j_lo, j_hi - 1].

    normalized_gaps divides by the exact classical gap xi_{j+1} - xi_j.
    fraction_below(lam) counts gaps with gap * Psi'(T) < lam, where T is
    the position at the start of the gap's dyadic index block.
    """
    j_lo, j_hi = int(range_[0]), int(range_[1])
    x = _positions(source, j_lo, j_hi)
    xi = _xi(grid, j_lo, j_hi, policy)
    gaps = np.diff(x)
    if np.any(gaps <= 0):
        raise RangeError("zero positions are not strictly increasing", range=[j_lo, j_hi])
    norm = gaps / np.diff(xi)
    js = np.arange(j_lo, j_hi)
    ms = gaps * _dyadic_scale(js, x[:-1])
    fb = {float(lam): float(np.mean(ms < lam)) for lam in sorted(lambdas)}
    return GapReport(
        (j_lo, j_hi), js, gaps, norm,
        float(norm.mean()), float(norm.var()), fb, float(ms.mean()),
    )


@dataclass(frozen=True)
class LehmerCandidate:
    j: int
    gap: float
    local_mean_gap: float
    quality: float
    x: float = 0.0


def lehmer_scan(source, window_half_width: int, quality_threshold: float):
    """Gaps below quality_threshold times the mean of the 2w surrounding gaps.

    The local mean for gap j (between x_j and x_{j+1}) averages gaps
    j - w .. j + w - 1, shifted inward near the ends of the data.
    """
    if isinstance(source, ZeroTable):
        x = 2.0 * np.asarray(source.gammas)
        j0 = 1
    else:
        x = np.asarray(source.x)
        j0 = source.window[0]
    w = int(window_half_width)
    if w < 1 or len(x) <= 2 * w:
        raise RangeError("need more than 2 * window_half_width zeros", count=len(x), w=w)
    if quality_threshold <= 0:
        return []
    g = np.diff(x)
    n = len(g)
    c = np.concatenate([[0.0], np.cumsum(g)])
    start = np.clip(np.arange(n) - w, 0, n - 2 * w)
    local = (c[start + 2 * w] - c[start]) / (2 * w)
    q = g / local
    hits = np.nonzero(q < quality_threshold)[0]
    hits = hits[np.argsort(q[hits], kind="stable")]
    return [LehmerCandidate(int(i + j0), float(g[i]), float(local[i]), float(q[i]), float(x[i])) for i in hits]


def equilibrium_deviation(source, grid: ClassicalGrid | None, range_, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """Mean of V((x_{j+1} - x_j)/(xi_{j+1} - xi_j)) over the range."""
    j_lo, j_hi = int(range_[0]), int(range_[1])
    x = _positions(source, j_lo, j_hi)
    xi = _xi(grid, j_lo, j_hi, policy)
    r = np.diff(x) / np.diff(xi)
    if np.any(r <= 0):
        raise RangeError("zero positions are not strictly increasing", range=[j_lo, j_hi])
    return float(np.mean(potential_V(r)))
