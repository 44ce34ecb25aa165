"""Gradient flow of the zeros, d/dt x_k = 2 sum' 1/(x_k - x_j).

A configuration holds a finite window of zeros.  The rest of the (infinite)
system is modelled by a :class:`TailModel`:

* ``none``: the window is the whole system (an isolated log-gas);
* ``classical``: zeros outside the window sit at classical locations xi_j,
  paired +-j so the sum converges absolutely;
* ``mirror``: the window is reflected across planes half an edge gap beyond
  its ends and repeated periodically.

Symmetric configurations store x_j for j in [j_lo, j_hi] and stand for the
set {x_j} u {-x_j}; the mirrored half always moves with the stored half.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import DomainError, GapCollapse, InsufficientSnapshots, ParseError, StepUnderflow
from .special import DEFAULT_POLICY, FOUR_PI, PrecisionPolicy, classical_locations, log_plus, psi, psi_inverse
from .zeros import ZeroConfiguration

TAIL_KINDS = ("none", "classical", "mirror")
SCHEMES = ("rk45", "rk4_adaptive")


@dataclass(frozen=True)
class TailModel:
    """Treatment of zeros outside the window.

    ``order`` applies to the classical kind: 0 uses xi_j as is, 1 also
    shifts the tail indices by the mean offset Psi(x_j) - j observed at the
    top of the window.
    """

    kind: str = "classical"
    order: int = 1

    def __post_init__(self):
        if self.kind not in TAIL_KINDS:
            raise DomainError(f"unknown tail kind {self.kind!r}", allowed=list(TAIL_KINDS))
        if self.order not in (0, 1):
            raise DomainError("tail order must be 0 or 1", order=self.order)


@dataclass(frozen=True)
class FlowControls:
    dt_init: float = 1e-3
    dt_min: float = 1e-14
    safety: float = 0.9
    min_gap_guard: float = 1e-9
    scheme: str = "rk45"
    t_end: float = 0.0

    def __post_init__(self):
        if not (self.dt_init > 0 and self.dt_min > 0 and self.dt_min <= self.dt_init):
            raise DomainError("need 0 < dt_min <= dt_init", dt_init=self.dt_init, dt_min=self.dt_min)
        if not 0 < self.safety <= 1:
            raise DomainError("safety must lie in (0, 1]", safety=self.safety)
        if not self.min_gap_guard > 0:
            raise DomainError("min_gap_guard must be positive")
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}", allowed=list(SCHEMES))


@dataclass(frozen=True)
class FlowSnapshot:
    t: float
    config: ZeroConfiguration
    diagnostics: dict = field(default_factory=dict)
    step_stats: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# point sets


def _full(x, symmetric):
    x = np.asarray(x, dtype=float)
    return np.concatenate([-x[::-1], x]) if symmetric else x


def full_points(config: ZeroConfiguration):
    """(positions, labels) of every point the configuration stands for."""
    F = _full(config.x, config.symmetric)
    idx = config.indices
    labels = np.concatenate([-idx[::-1], idx]) if config.symmetric else idx
    return F, labels


def _check_gaps(F, guard):
    if len(F) < 2:
        return
    g = np.diff(F)
    i = int(np.argmin(g))
    if not g[i] > guard:
        raise GapCollapse(
            f"gap {g[i]:.3e} at ({F[i]:.12g}, {F[i + 1]:.12g}) is below the guard {guard:g}",
            position=float(F[i]), gap=float(g[i]),
        )


# ---------------------------------------------------------------------------
# tails


class _NoTail:
    def __call__(self, F, idx):
        return np.zeros(len(idx))


class _ClassicalTail:
    """2 sum_{j not in window} [1/(x - xi_j) + 1/(x + xi_j)].

    Indices below the window and up to J = max(4 j_hi, j_hi + 1000) are
    summed explicitly.  The rest, sum 4x/(x^2 - xi^2) = -4 sum_m x^{2m-1}/xi^{2m},
    is replaced by integrals against the density Psi' from U = xi_{J + 1/2}:
    -(1/pi) sum_m (x/U)^{2m-1} [L/(2m-1) + 1/(2m-1)^2], L = log(U/4pi),
    plus the midpoint-rule edge correction.
    """

    def __init__(self, config: ZeroConfiguration, order: int, policy: PrecisionPolicy):
        if not config.symmetric or config.window[0] < 1:
            raise DomainError("the classical tail needs a symmetric configuration of positive indices")
        lo, hi = config.window
        J = max(4 * hi, hi + 1000)
        c = 0.0
        if order >= 1:
            m = min(10, len(config.x))
            top = config.x[-m:]
            c = float(np.mean(psi(top) - config.indices[-m:]))
            c = max(c, 1.0 - (hi + 1))  # keep Psi^{-1} arguments positive
        up = psi_inverse(np.arange(hi + 1, J + 1, dtype=float) + c, policy)
        low = classical_locations(np.arange(1, lo), policy) if lo > 1 else np.empty(0)
        xi = np.concatenate([low, up])
        self.sources = np.concatenate([-xi[::-1], xi])
        self.U = float(psi_inverse(J + 0.5 + c, policy))
        self.offset = c
        self.J = J

    def remainder(self, y):
        U = self.U
        L = math.log(U / FOUR_PI)
        r = np.asarray(y, dtype=float) / U
        r2 = r * r
        out = np.zeros_like(r)
        p = r.copy()
        for m in range(1, 60):
            q = 2 * m - 1
            term = p * (L / q + 1.0 / (q * q))
            out += term
            if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(out), 1e-300)):
                break
            p = p * r2
        # sum over j > J versus the integral from J + 1/2: + f'(J + 1/2)/24
        y = np.asarray(y, dtype=float)
        dxi = FOUR_PI / L
        edge = 8.0 * y * U / (y * y - U * U) ** 2 * dxi / 24.0
        return -out / math.pi + edge

    def __call__(self, F, idx):
        y = F[idx]
        s = _backend.coulomb_sum(y, self.sources, np.full(len(y), -1, dtype=np.int64))
        return 2.0 * s + self.remainder(y)


class _MirrorTail:
    """Images of the window reflected across planes A, B half an edge gap
    beyond each end, repeated with period P = 2(B - A); summed in closed
    form with (pi/P) cot(pi d/P)."""

    def __call__(self, F, idx):
        n = len(F)
        if n < 2:
            return np.zeros(len(idx))
        A = F[0] - 0.5 * (F[1] - F[0])
        B = F[-1] + 0.5 * (F[-1] - F[-2])
        P = 2.0 * (B - A)
        R = 2.0 * B - F
        y = F[idx]
        d1 = y[:, None] - F[None, :]
        self_mask = np.zeros(d1.shape, dtype=bool)
        self_mask[np.arange(len(idx)), idx] = True
        d1 = np.where(self_mask, 1.0, d1)
        k1 = (math.pi / P) / np.tan(math.pi * d1 / P) - 1.0 / d1
        k1 = np.where(self_mask, 0.0, k1)
        d2 = y[:, None] - R[None, :]
        k2 = (math.pi / P) / np.tan(math.pi * d2 / P)
        return 2.0 * (k1.sum(axis=1) + k2.sum(axis=1))


def make_tail(config: ZeroConfiguration, tail: TailModel, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Tail field f(F, idx) -> tail velocity at F[idx], frozen for ``config``."""
    if tail.kind == "none":
        return _NoTail()
    if tail.kind == "classical":
        return _ClassicalTail(config, tail.order, policy)
    if config.symmetric and config.window[0] != 1:
        raise DomainError("mirror tail on a symmetric configuration needs j_lo = 1")
    return _MirrorTail()


def padded_window(j_lo: int, j_hi: int):
    """Window padded by ceil(4 log_+^2 j_hi) zeros on each side (bottom
    clipped at 1) and the padding actually used (below, above)."""
    pad = int(math.ceil(4.0 * float(log_plus(j_hi)) ** 2))
    lo = max(1, j_lo - pad)
    return (lo, j_hi + pad), (j_lo - lo, pad)


# ---------------------------------------------------------------------------
# velocities


def _velocity(F, idx, tail_field, guard):
    _check_gaps(F, guard)
    direct = _backend.coulomb_sum(F[idx], F, idx.astype(np.int64))
    return 2.0 * direct + tail_field(F, idx)


def _stored_idx(n, symmetric):
    return np.arange(n, 2 * n) if symmetric else np.arange(n)


def velocity_field(config: ZeroConfiguration, tail: TailModel = TailModel(), policy: PrecisionPolicy = DEFAULT_POLICY,
                   min_gap_guard: float = 1e-9, tail_field=None) -> np.ndarray:
    """v_k = 2 sum_{j != k} 1/(x_k - x_j) + tail(k) for every stored x_k."""
    tf = tail_field if tail_field is not None else make_tail(config, tail, policy)
    F = _full(config.x, config.symmetric)
    return _velocity(F, _stored_idx(len(config.x), config.symmetric), tf, min_gap_guard)


def tail_velocity(config: ZeroConfiguration, tail: TailModel = TailModel(), policy: PrecisionPolicy = DEFAULT_POLICY):
    """The tail contribution alone, at every stored x_k."""
    tf = make_tail(config, tail, policy)
    F = _full(config.x, config.symmetric)
    return tf(F, _stored_idx(len(config.x), config.symmetric))


def gap_derivative(config: ZeroConfiguration, j: int, k: int, tail: TailModel = TailModel(),
                   policy: PrecisionPolicy = DEFAULT_POLICY, min_gap_guard: float = 1e-9) -> float:
    """d/dt (x_k - x_j) = 4/(x_k - x_j) - 2 (x_k - x_j) sum_{i != j,k} 1/((x_i - x_k)(x_i - x_j))

    with the sum over the configuration; the tail enters as tail(k) - tail(j).
    """
    F, labels = full_points(config)
    _check_gaps(F, min_gap_guard)
    pos = {int(v): i for i, v in enumerate(labels)}
    if j == k or j not in pos or k not in pos:
        raise DomainError("gap_derivative needs distinct indices inside the configuration", j=j, k=k)
    pj, pk = pos[j], pos[k]
    d = F[pk] - F[pj]
    mask = np.ones(len(F), dtype=bool)
    mask[[pj, pk]] = False
    o = F[mask]
    s = np.sum(1.0 / ((o - F[pk]) * (o - F[pj])))
    tv = make_tail(config, tail, policy)(F, np.array([pj, pk]))
    return float(4.0 / d - 2.0 * d * s + (tv[1] - tv[0]))


def _pair_sums(F, chunk=2048):
    """(sum_{i != j} 1/d^2, sum_{i != j} log 1/|d|) over ordered pairs."""
    e = h = 0.0
    n = len(F)
    for i0 in range(0, n, chunk):
        d = F[i0:i0 + chunk, None] - F[None, :]
        r = np.arange(min(chunk, n - i0))
        d[r, i0 + r] = 1.0
        ad = np.abs(d)
        e += float(np.sum(1.0 / (ad * ad))) - len(r)
        h -= float(np.sum(np.log(ad)))
    return e, h


def diagnostics(config: ZeroConfiguration, tail: TailModel = TailModel(kind="none"), policy: PrecisionPolicy = DEFAULT_POLICY,
                tail_field=None) -> dict:
    """energy, hamiltonian (ordered pair sums over the configuration),
    min_gap and max_velocity."""
    F = _full(config.x, config.symmetric)
    e, h = _pair_sums(F)
    tf = tail_field if tail_field is not None else make_tail(config, tail, policy)
    v = _velocity(F, _stored_idx(len(config.x), config.symmetric), tf, 0.0) if len(F) > 1 else np.zeros(len(config.x))
    return {
        "energy": e,
        "hamiltonian": h,
        "min_gap": float(np.min(np.diff(F))) if len(F) > 1 else math.inf,
        "max_velocity": float(np.max(np.abs(v))) if len(v) else 0.0,
    }


# ---------------------------------------------------------------------------
# integrators

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _dp45(f, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_DP_A[i], ks))
        ks.append(f(yi))
    y5 = y + h * sum(b * k for b, k in zip(_DP_B5, ks) if b)
    err = h * sum((b5 - b4) * k for b5, b4, k in zip(_DP_B5, _DP_B4, ks))
    return y5, err, ks[6]


def _rk4(f, y, h, k1):
    a = k1
    b = f(y + 0.5 * h * a)
    c = f(y + 0.5 * h * b)
    d = f(y + h * c)
    return y + h / 6.0 * (a + 2 * b + 2 * c + d)


def _rk4_doubling(f, y, h, k1):
    full = _rk4(f, y, h, k1)
    half = _rk4(f, y, 0.5 * h, k1)
    two = _rk4(f, half, 0.5 * h, f(half))
    err = (two - full) / 15.0
    y_new = two + err
    return y_new, err, f(y_new)


def flow(config: ZeroConfiguration, t0: float, t1: float, tail: TailModel = TailModel(),
         controls: FlowControls = FlowControls(), times=None, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Integrate the zero dynamics from t0 to t1 (either direction).

    Returns snapshots at t0, every requested time in between and t1.  A
    step is accepted when its embedded error is below
    safety * (abs_tol + rel_tol |x|) componentwise and no gap shrinks by
    more than 20% or falls under ``min_gap_guard``; otherwise dt is halved.
    The tail is frozen at the initial configuration.
    """
    if t0 == t1:
        raise DomainError("flow needs t0 != t1")
    if max(t0, t1) > controls.t_end:
        raise DomainError("flow would pass controls.t_end", t_end=controls.t_end, t0=t0, t1=t1)
    sgn = 1.0 if t1 > t0 else -1.0
    stops = {float(t0), float(t1)}
    for s in (() if times is None else times):
        if (s - t0) * sgn >= 0 and (t1 - s) * sgn >= 0:
            stops.add(float(s))
    stops = sorted(stops, key=lambda s: sgn * s)

    sym = config.symmetric
    n = len(config.x)
    idx = _stored_idx(n, sym)
    tf = make_tail(config, tail, policy)
    guard = controls.min_gap_guard

    def rhs(y):
        return _velocity(_full(y, sym), idx, tf, guard)

    step_fn = _dp45 if controls.scheme == "rk45" else _rk4_doubling
    y = np.array(config.x, dtype=float)
    t = float(t0)
    k1 = rhs(y)
    h = sgn * controls.dt_init
    stats = {"accepted": 0, "rejected": 0, "gap_rejections": 0, "dt_min": math.inf, "dt_max": 0.0}

    def snapshot(tt, yy):
        c = config.replace(x=yy.copy(), t=tt)
        return FlowSnapshot(tt, c, diagnostics(c, tail_field=tf), dict(stats))

    snaps = [snapshot(t, y)]
    for target in stops[1:]:
        while sgn * (target - t) > 0:
            last = sgn * (t + h - target) >= 0
            step = target - t if last else h
            gaps_old = np.diff(_full(y, sym))
            try:
                y_new, err, k_new = step_fn(rhs, y, step, k1)
                ok_err = np.all(np.isfinite(y_new))
                scale = controls.safety * (policy.abs_tol + policy.rel_tol * np.abs(y_new))
                ratio = float(np.max(np.abs(err) / scale)) if ok_err else math.inf
                gaps_new = np.diff(_full(y_new, sym))
                gap_ok = bool(np.all(gaps_new >= 0.8 * gaps_old) and np.all(gaps_new > guard)) if ok_err else False
            except GapCollapse:
                ratio, gap_ok = math.inf, False
                gaps_new = None
            if ratio <= 1.0 and gap_ok:
                t = target if last else t + step
                y = y_new
                k1 = k_new
                stats["accepted"] += 1
                stats["dt_min"] = min(stats["dt_min"], abs(step))
                stats["dt_max"] = max(stats["dt_max"], abs(step))
                fac = 4.0 if ratio == 0 else min(4.0, max(0.2, 0.9 * ratio ** -0.2))
                if not last:
                    h = step * fac
            else:
                stats["rejected"] += 1
                if not gap_ok:
                    stats["gap_rejections"] += 1
                h = 0.5 * step
                if abs(h) < controls.dt_min:
                    i = int(np.argmin(gaps_new / gaps_old)) if gaps_new is not None else int(np.argmin(gaps_old))
                    F = _full(y, sym)
                    raise StepUnderflow(
                        f"step size fell below dt_min={controls.dt_min:g} at t={t:.12g}",
                        t=t, pair=[float(F[i]), float(F[i + 1])],
                    )
        snaps.append(snapshot(target, y))
    return snaps


# ---------------------------------------------------------------------------
# identities


def _fd_weights(t):
    """Nonuniform central difference weights at interior points."""
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    wm = -h2 / (h1 * (h1 + h2))
    w0 = (h2 - h1) / (h1 * h2)
    wp = h1 / (h2 * (h1 + h2))
    return wm, w0, wp


def _identity_terms(F, kpos):
    """Left-side quantities and right sides of the identities for index set K."""
    m = len(kpos)
    xk = F[kpos]
    others = np.ones(len(F), dtype=bool)
    others[kpos] = False
    xo = F[others]
    d = xk[:, None] - xk[None, :]
    off = ~np.eye(m, dtype=bool)
    dd = np.where(off, d, 1.0)
    A = 1.0 / (xk[:, None] - xo[None, :])  # 1/(x_k - x_j), j not in K
    C = A @ A.T  # sum_j 1/((x_k - x_j)(x_k' - x_j))
    # sum_{k'' in K \ {k, k'}} 1/((x_k'' - x_k)(x_k'' - x_k'))
    Bk = np.where(off, 1.0 / np.where(off, -d, 1.0), 0.0)  # 1/(x_k'' - x_k) as [k, k'']
    M = Bk @ Bk.T  # k'' = k, k' drop out through the zero diagonal
    e2 = np.where(off, 1.0 / (dd * dd), 0.0)
    q = float(np.sum(np.where(off, d * d, 0.0)))
    E = float(np.sum(e2))
    H = float(-np.sum(np.where(off, np.log(np.abs(dd)), 0.0)))
    cross = float(np.sum(A * A))
    vir_rhs = 4.0 * m * m * (m - 1) - float(np.sum(np.where(off, d * d * 4.0 * C, 0.0)))
    en_rhs = float(np.sum(np.where(off, 4.0 * e2 * C, 0.0))) - 2.0 * float(np.sum(np.where(off, (2.0 * e2 - M) ** 2, 0.0)))
    ham_rhs = -4.0 * E + 2.0 * float(np.sum(np.where(off, C, 0.0)))
    cross_rhs = -8.0 * float(np.sum(A**4))
    return (q, E, H, cross), (vir_rhs, en_rhs, ham_rhs, cross_rhs)


def identity_suite(snapshots, K) -> dict:
    """Check the virial, energy, Hamiltonian and cross-energy identities.

    Left sides are central finite differences across snapshots, right sides
    are evaluated at the interior snapshots.  The complement of K is the
    rest of the configuration (tail zeros are not included, so the checks
    are exact only for isolated systems).  Residuals:

    * virial: |L - R| / max(|R|, 1)
    * energy: |L - R| / (1 + |R|)
    * hamiltonian: |L - R| / (1 + E_K)
    * cross_energy_slack: min of L - R (>= 0 up to differencing error)
    """
    snaps = sorted(snapshots, key=lambda s: s.t)
    if len(snaps) < 3:
        raise InsufficientSnapshots("identity checks need at least 3 snapshots", count=len(snaps))
    t = np.array([s.t for s in snaps])
    if np.any(np.diff(t) <= 0):
        raise InsufficientSnapshots("snapshot times must be distinct")
    K = [int(k) for k in K]
    if len(set(K)) != len(K) or len(K) < 2:
        raise DomainError("K needs at least two distinct indices")
    lhs_q, rhs_q = [], []
    for s in snaps:
        F, labels = full_points(s.config)
        pos = {int(v): i for i, v in enumerate(labels)}
        missing = [k for k in K if k not in pos]
        if missing:
            raise DomainError("K is not inside the configuration", missing=missing)
        a, b = _identity_terms(F, np.array([pos[k] for k in K]))
        lhs_q.append(a)
        rhs_q.append(b)
    lhs_q = np.array(lhs_q)
    rhs_q = np.array(rhs_q)[1:-1]
    wm, w0, wp = _fd_weights(t)
    rate = wm[:, None] * lhs_q[:-2] + w0[:, None] * lhs_q[1:-1] + wp[:, None] * lhs_q[2:]
    E_mid = lhs_q[1:-1, 1]
    vir = np.abs(rate[:, 0] - rhs_q[:, 0]) / np.maximum(np.abs(rhs_q[:, 0]), 1.0)
    en = np.abs(rate[:, 1] - rhs_q[:, 1]) / (1.0 + np.abs(rhs_q[:, 1]))
    ham = np.abs(rate[:, 2] - rhs_q[:, 2]) / (1.0 + np.abs(E_mid))
    slack = rate[:, 3] - rhs_q[:, 3]
    dE = np.diff(lhs_q[:, 1])
    return {
        "snapshots": len(snaps),
        "K_size": len(K),
        "virial": float(vir.max()),
        "virial_rate": float(rate[:, 0].mean()),
        "energy": float(en.max()),
        "hamiltonian": float(ham.max()),
        "cross_energy_slack": float(slack.min()),
        "energy_max_increase": float(max(dE.max(), 0.0)),
        "energy_monotone": bool(np.all(dE <= 1e-12 * (1.0 + np.abs(lhs_q[:-1, 1])))),
    }


# ---------------------------------------------------------------------------
# JSON-lines snapshot stream


def snapshot_record(s: FlowSnapshot) -> dict:
    return {"t": s.t, "j_lo": s.config.window[0], "x": [float(v) for v in s.config.x], "diag": s.diagnostics}


def write_snapshots(snaps, fh):
    for s in snaps:
        fh.write(json.dumps(snapshot_record(s), sort_keys=True) + "\n")


def read_snapshots(text: str, symmetric: bool = True):
    out = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            r = json.loads(line)
            x = np.array(r["x"], dtype=float)
            j_lo = int(r["j_lo"])
            t = float(r["t"])
            diag = {k: float(v) for k, v in r.get("diag", {}).items()}
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"bad snapshot line {n}: {exc}", line=n) from exc
        cfg = ZeroConfiguration(t, (j_lo, j_lo + len(x) - 1), x, symmetric)
        out.append(FlowSnapshot(t, cfg, diag, {}))
    return out
