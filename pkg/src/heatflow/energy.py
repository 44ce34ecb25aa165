"""Renormalized energies and Hamiltonians of zero configurations.

Pair quantities are taken over the full labelled point set: a symmetric
configuration contributes x_{-j} = -x_j with label -j, and the classical
grid is extended the same way (xi_{-j} = -xi_j).  All double sums run over
ordered pairs j != k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GapCollapse, InsufficientSnapshots, WindowTooSmall
from .special import DEFAULT_POLICY, ClassicalGrid, PrecisionPolicy, log_plus

KINDS = ("E", "H", "E_renorm", "H_renorm")
TEJK_TOL = 1e-10


def _nonzero(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise DomainError(f"{name} is undefined at 0")
    return x


def potential_V(x):
    """V(x) = 1/x^2 - 1 + 2(|x| - 1)."""
    x = _nonzero(x, "V")
    a = np.abs(x)
    out = 1.0 / (a * a) - 1.0 + 2.0 * (a - 1.0)
    return float(out) if out.ndim == 0 else out


def renorm_L(x):
    """L(x) = log(1/|x|) + |x| - 1."""
    x = _nonzero(x, "L")
    a = np.abs(x)
    out = -np.log(a) + a - 1.0
    return float(out) if out.ndim == 0 else out


def psi_weight(j, T):
    """psi_T(j) = (1 + |j|/(T log T))^{-100}."""
    if not T > 1:
        raise DomainError("psi_weight needs T > 1", T=T)
    j = np.asarray(j, dtype=float)
    out = (1.0 + np.abs(j) / (T * math.log(T))) ** -100.0
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# labelled point sets


def _labelled(config):
    idx = config.indices
    x = np.asarray(config.x, dtype=float)
    if config.symmetric:
        return np.concatenate([-idx[::-1], idx]), np.concatenate([-x[::-1], x])
    return idx, x


def _grid_for(labels, grid, policy):
    top = int(np.max(np.abs(labels)))
    if grid is None:
        grid = ClassicalGrid.build(1, top, policy)
    if not grid.covers(labels):
        raise DomainError("classical grid does not cover the configuration", window=grid.window, needed=top)
    return grid.at(labels)


@dataclass(frozen=True)
class InteractionMatrix:
    kind: str
    window: tuple
    labels: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    t: float = 0.0
    decomposition_residual: float | None = None


def interaction_matrix(config, grid: ClassicalGrid | None = None, kind: str = "E_renorm",
                       policy: PrecisionPolicy = DEFAULT_POLICY) -> InteractionMatrix:
    """Dense symmetric matrix of a pair quantity; the diagonal is NaN.

    E: 1/(x_k - x_j)^2, H: log 1/|x_k - x_j|,
    E_renorm: V(dx/dxi)/dxi^2, H_renorm: L(dx/dxi).
    For E_renorm the decomposition
    E_jk - 1/dxi^2 + 2((x_k - xi_k) - (x_j - xi_j))/dxi^3
    is recomputed and its worst deviation, relative to 1 + E_jk + 1/dxi^2,
    is stored in ``decomposition_residual`` (GapCollapse-style failure above 1e-10
    would indicate an ordering clash between config and grid).
    """
    if kind not in KINDS:
        raise DomainError(f"unknown interaction kind {kind!r}", allowed=list(KINDS))
    labels, x = _labelled(config)
    n = len(x)
    dx = x[:, None] - x[None, :]
    off = ~np.eye(n, dtype=bool)
    if np.any(dx[off] == 0):
        raise GapCollapse("coincident points in configuration")
    dxs = np.where(off, dx, 1.0)
    resid = None
    if kind == "E":
        vals = 1.0 / dxs**2
    elif kind == "H":
        vals = -np.log(np.abs(dxs))
    else:
        xi = _grid_for(labels, grid, policy)
        dxi = np.where(off, xi[:, None] - xi[None, :], 1.0)
        r = dxs / dxi
        if kind == "H_renorm":
            vals = renorm_L(r)
        else:
            vals = potential_V(r) / dxi**2
            e = 1.0 / dxs**2
            dev = x - xi
            alt = e - 1.0 / dxi**2 + 2.0 * (dev[:, None] - dev[None, :]) / dxi**3
            scale = 1.0 + e + 1.0 / dxi**2
            resid = float(np.max(np.where(off, np.abs(vals - alt) / scale, 0.0))) if n > 1 else 0.0
    vals = np.where(off, vals, np.nan)
    return InteractionMatrix(kind, config.window, labels, vals, config.t, resid)


@dataclass(frozen=True)
class WindowedEnergy:
    interval: tuple
    E_tilde: float
    eb_value: float
    difference: float


def windowed_energy(config, grid: ClassicalGrid | None, I, policy: PrecisionPolicy = DEFAULT_POLICY) -> WindowedEnergy:
    """E~^I = sum_{j != k in I} E~_jk, with the comparison value
    sum (E_jk - 1/dxi^2) and the difference E~^I minus that value."""
    lo, hi = int(I[0]), int(I[1])
    if lo > hi:
        raise DomainError("empty interval", interval=(lo, hi))
    labels, x = _labelled(config)
    sel = (labels >= lo) & (labels <= hi)
    want = np.array([j for j in range(lo, hi + 1) if j != 0])
    if sel.sum() != len(want):
        raise DomainError("interval is not inside the configuration", interval=(lo, hi), window=config.window)
    lab, xs = labels[sel], x[sel]
    xi = _grid_for(lab, grid, policy)
    n = len(xs)
    if n < 2:
        return WindowedEnergy((lo, hi), 0.0, 0.0, 0.0)
    off = ~np.eye(n, dtype=bool)
    dx = np.where(off, xs[:, None] - xs[None, :], 1.0)
    dxi = np.where(off, xi[:, None] - xi[None, :], 1.0)
    et = float(np.sum(np.where(off, potential_V(dx / dxi) / dxi**2, 0.0)))
    eb = float(np.sum(np.where(off, 1.0 / dx**2 - 1.0 / dxi**2, 0.0)))
    return WindowedEnergy((lo, hi), et, eb, et - eb)


def nearby(j, k, T):
    """j ~_T k: 0 < |j - k| < (T^2 + |j| + |k|)^0.1."""
    j = np.asarray(j, dtype=float)
    k = np.asarray(k, dtype=float)
    d = np.abs(j - k)
    return (d > 0) & (d < (T * T + np.abs(j) + np.abs(k)) ** 0.1)


def weight_window(T: float) -> int:
    """W = ceil(6 T log T); weighted sums run over [-W, W]."""
    return int(math.ceil(6.0 * T * math.log(T)))


@dataclass(frozen=True)
class WeightedSums:
    T: float
    E_tilde_T: float
    H_tilde_T: float
    nearby_pair_count: int
    H_renorm_T: float = 0.0
    window: tuple = (1, 1)
    tail_bound: float = 0.0


def weighted_sums(config, grid: ClassicalGrid | None, T: float, policy: PrecisionPolicy = DEFAULT_POLICY,
                  strict: bool = True, chunk: int = 1024) -> WeightedSums:
    """E~_T and H~_T over labels in [-W, W], W = ceil(6 T log T) (or the
    configuration top, if smaller).

    Pairs with an index beyond the used window are bounded by
    2 * max E~_jk * (sum_{|j| > J} psi_T(j)) * (sum_k psi_T(k)); with
    ``strict`` a bound above rel_tol * E~_T raises WindowTooSmall.
    H_renorm_T is the same nearby sum with H~_jk = L(dx/dxi) in place of
    H_jk - log 1/|dxi|.
    """
    if not config.symmetric or config.window[0] != 1:
        raise DomainError("weighted sums need a symmetric configuration starting at j = 1")
    W = weight_window(T)
    J = min(W, config.window[1])
    cfg = config.sub(1, J)
    labels, x = _labelled(cfg)
    xi = _grid_for(labels, grid, policy)
    w = psi_weight(labels, T)
    n = len(x)
    et = 0.0
    emax = 0.0
    for i0 in range(0, n, chunk):
        sl = slice(i0, min(n, i0 + chunk))
        dx = x[sl, None] - x[None, :]
        dxi = xi[sl, None] - xi[None, :]
        r = np.arange(sl.stop - sl.start)
        dx[r, i0 + r] = 1.0
        dxi[r, i0 + r] = 1.0
        e = potential_V(dx / dxi) / dxi**2
        e[r, i0 + r] = 0.0
        et += float(np.sum(w[sl, None] * w[None, :] * e))
        emax = max(emax, float(e.max()))
    # nearby pairs: |j - k| is small, so walk the bands of the label array
    ht = hr = 0.0
    count = 0
    dmax = int(math.ceil((T * T + 2.0 * J) ** 0.1)) + 2
    for d in range(1, min(dmax, n)):
        a, b = labels[:-d], labels[d:]
        m = nearby(a, b, T)
        if not m.any():
            continue
        dx = x[d:][m] - x[:-d][m]
        dxi = xi[d:][m] - xi[:-d][m]
        ww = w[:-d][m] * w[d:][m]
        ht += 2.0 * float(np.sum(ww * np.log(np.abs(dxi / dx))))
        hr += 2.0 * float(np.sum(ww * renorm_L(dx / dxi)))
        count += 2 * int(m.sum())
    tail_w = _psi_tail(J, T)
    total_w = 2.0 * (_psi_tail(0, T))
    tail_bound = 2.0 * 2.0 * tail_w * total_w * emax
    if strict and tail_bound > policy.rel_tol * abs(et):
        raise WindowTooSmall(
            f"truncation bound {tail_bound:.3e} exceeds rel_tol * E~_T; widen the configuration to j <= {W}",
            T=T, needed=W, have=config.window[1],
        )
    return WeightedSums(T, et, ht, count, hr, (-J, J), tail_bound)


def _psi_tail(J, T):
    """Upper bound for sum_{j > J} psi_T(j) by the integral from J."""
    s = T * math.log(T)
    return s / 99.0 * (1.0 + J / s) ** -99.0


def energy_report(ws: WeightedSums, consts) -> dict:
    return {
        "T": ws.T,
        "E_tilde_T": ws.E_tilde_T,
        "H_tilde_T": ws.H_tilde_T,
        "H_renorm_T": ws.H_renorm_T,
        "nearby_pair_count": ws.nearby_pair_count,
        "window": list(ws.window),
        "tail_bound": ws.tail_bound,
        "constants_version": constants_version(consts),
    }


def constants_version(consts) -> str:
    return f"v{consts.version}:{consts.sha256[:16]}"


# ---------------------------------------------------------------------------
# time derivative check


def _fd_rate(t, f):
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    return (-h2 / (h1 * (h1 + h2))) * f[:-2] + ((h2 - h1) / (h1 * h2)) * f[1:-1] + (h1 / (h2 * (h1 + h2))) * f[2:]


def dorium_check(snapshots, grid: ClassicalGrid | None, T: float | None, renormalized: bool = True,
                 policy: PrecisionPolicy = DEFAULT_POLICY) -> dict:
    """Compare the finite-difference rate of H~_T with -4 E~_T.

    The defect |dH~_T/dt + 4 E~_T| / (T log^3 T + E~_T) is reported at the
    interior snapshots.  With ``renormalized=False`` the unweighted analog
    is checked instead: H = sum log 1/|dx| and E = sum 1/dx^2 over all pairs,
    defect |dH/dt + 4E| / (1 + E).
    """
    snaps = sorted(snapshots, key=lambda s: s.t)
    if len(snaps) < 3:
        raise InsufficientSnapshots("need at least 3 snapshots", count=len(snaps))
    t = np.array([s.t for s in snaps])
    if np.any(np.diff(t) <= 0):
        raise InsufficientSnapshots("snapshot times must be distinct")
    Hs, Es = [], []
    for s in snaps:
        if renormalized:
            ws = weighted_sums(s.config, grid, T, policy, strict=False)
            Hs.append(ws.H_tilde_T)
            Es.append(ws.E_tilde_T)
        else:
            labels, x = _labelled(s.config)
            n = len(x)
            off = ~np.eye(n, dtype=bool)
            d = np.abs(np.where(off, x[:, None] - x[None, :], 1.0))
            Hs.append(float(-np.sum(np.where(off, np.log(d), 0.0))))
            Es.append(float(np.sum(np.where(off, 1.0 / d**2, 0.0))))
    Hs, Es = np.array(Hs), np.array(Es)
    rate = _fd_rate(t, Hs)
    E_mid = Es[1:-1]
    if renormalized:
        norm = T * math.log(T) ** 3 + E_mid
    else:
        norm = 1.0 + E_mid
    defect = np.abs(rate + 4.0 * E_mid) / norm
    return {
        "times": [float(v) for v in t[1:-1]],
        "dH_dt": [float(v) for v in rate],
        "minus_4E": [float(v) for v in -4.0 * E_mid],
        "defects": [float(v) for v in defect],
        "max_defect": float(defect.max()),
        "renormalized": renormalized,
    }


# ---------------------------------------------------------------------------
# long-range decay


@dataclass(frozen=True)
class LongRangeProfile:
    j: int
    pairs: list
    envelope_constant: float
    fit_from: float


def long_range_profile(config, grid: ClassicalGrid | None, j: int, policy: PrecisionPolicy = DEFAULT_POLICY) -> LongRangeProfile:
    """(k, H~_jk) for every other k in the configuration.

    ``envelope_constant`` is max H~_jk |k - j|^2 / log_+^4(|j| + |k|) over
    |k - j| >= log^2 xi_j (0 when no such k exists).
    """
    labels, x = _labelled(config)
    pos = np.nonzero(labels == j)[0]
    if len(pos) != 1:
        raise DomainError("index not in configuration", j=j)
    p = int(pos[0])
    xi = _grid_for(labels, grid, policy)
    mask = labels != j
    ks = labels[mask]
    vals = renorm_L((x[mask] - x[p]) / (xi[mask] - xi[p]))
    lo = float(log_plus(abs(xi[p]))) ** 2
    far = np.abs(ks - j) >= lo
    c = 0.0
    if far.any():
        env = (ks[far] - j) ** 2 / np.asarray(log_plus(np.abs(j) + np.abs(ks[far]).astype(float))) ** 4
        c = float(np.max(vals[far] * env))
    return LongRangeProfile(int(j), [(int(k), float(v)) for k, v in zip(ks, vals)], c, lo)
