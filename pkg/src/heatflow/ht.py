"""Evaluation of H_t(z) = int_0^inf e^{t u^2} Phi(u) cos(zu) du.

All evaluators work internally with the scaled function
``S_t(z) = exp(pi z / 8) H_t(z)``, which stays O(poly(|z|)) on and near the
real axis while H_t itself underflows once Re z passes a few thousand.  The
``*_scaled`` functions return ``(S, est_error)``; the public HtQuery entry
points return H_t.

Symmetries used throughout: H_t is even and real on the real axis, so
``S(z) = exp(pi z / 4) S(-z)`` and ``S(z) = conj(S(conj z))``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import constants as _constants
from .errors import ConvergenceFailure, DomainError, TruncationFailure, ZeroProximity
from .quadrature import gk_adaptive, hermite_rule
from .special import DEFAULT_POLICY, PrecisionPolicy, h0_scaled, log_plus, phi_complex

METHODS = ("quadrature", "heat_kernel", "saddle", "xi", "auto")
T_MAX = 0.5
PI8 = math.pi / 8.0


@dataclass(frozen=True)
class HtQuery:
    z: complex
    t: float
    method: str = "auto"
    policy: PrecisionPolicy = field(default=DEFAULT_POLICY)

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "t", float(self.t))
        if not (cmath.isfinite(self.z) and math.isfinite(self.t)):
            raise DomainError("z and t must be finite")
        if abs(self.t) > T_MAX:
            raise DomainError(f"|t| must be <= {T_MAX}", t=self.t)
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}", method=self.method)
        if self.method == "heat_kernel" and self.t >= 0:
            raise DomainError("heat_kernel needs t < 0", t=self.t)
        if self.method == "xi" and self.t != 0:
            raise DomainError("xi method is only valid at t = 0", t=self.t)


@dataclass(frozen=True)
class HtResult:
    value: complex
    scaled: complex
    log_abs: float
    method_used: str
    est_error: float


def _unscale(S, z):
    return S * np.exp(-math.pi * np.asarray(z, dtype=complex) / 8.0)


def _log_abs(S, z):
    with np.errstate(divide="ignore"):
        return float(np.log(abs(S)) - math.pi * complex(z).real / 8.0)


def _reduce(z):
    """Map z to the quadrant Re >= 0, Im <= 0.  Returns (z', unreduce)."""
    neg = z.real < 0
    zz = -z if neg else z
    up = zz.imag > 0
    zz = zz.conjugate() if up else zz

    def back(S):
        if up:
            S = S.conjugate()
        if neg:
            S = S * cmath.exp(math.pi * z / 4.0)
        return S

    return zz, back


# ---------------------------------------------------------------------------
# direct quadrature on a shifted contour


def contour_shift(x, y, t):
    """delta = pi/8 - theta for the line Im u = theta.

    Places the line near the n = 1 saddle for large x; theta = 0 (no shift)
    when x is small.
    """
    if x <= 0:
        return PI8
    d = (9.0 + y) / (4.0 * x) + t * math.log(max(x, 1.0) / (4 * math.pi)) / (8.0 * x)
    return min(max(d, 1e-4), PI8)


def _phi_tail_log_bound(v, theta, x, y, t, delta):
    """Upper bound for log |integrand| at |v| where pi e^{4|v|} cos 4theta >= 3."""
    a = abs(v)
    X = math.exp(4 * a) * math.cos(4 * theta)
    return (
        math.log(2 * (2 * math.pi**2 * math.exp(9 * a) + 3 * math.pi * math.exp(5 * a)))
        - math.pi * X
        + y * v
        + x * delta
        + t * (v * v - theta * theta)
        - math.log(2.0)
    )


def _tail_edge(sign, theta, x, y, t, delta, log_target):
    c4 = math.cos(4 * theta)
    a = max(0.25 * math.log(3.0 / (math.pi * c4)), 0.0)
    v = sign * a
    for _ in range(4000):
        lb = _phi_tail_log_bound(v, theta, x, y, t, delta)
        lb2 = _phi_tail_log_bound(v + sign * 0.01, theta, x, y, t, delta)
        if lb < log_target and lb2 < lb - 0.01:
            return v
        v += sign * 0.02
    raise TruncationFailure("could not certify quadrature tail", x=x, y=y, t=t)


def ht_quadrature_scaled(z, t, policy: PrecisionPolicy = DEFAULT_POLICY):
    """S_t(z) by adaptive GK15 along Im u = theta.  Returns (S, est_error).

    With w = v + i theta,
        S_t(z) = 1/2 int_R e^{t w^2} Phi(w) e^{izv} e^{z delta} dv,
    delta = pi/8 - theta.  The integration range is certified from the
    n = 1 term of Phi; the tail left out is below abs_tol / 100.
    """
    zr, back = _reduce(complex(z))
    x, y = zr.real, -zr.imag
    delta = contour_shift(x, y, t)
    theta = PI8 - delta
    log_target = math.log(policy.abs_tol * 1e-2)
    vlo = _tail_edge(-1, theta, x, y, t, delta, log_target)
    vhi = _tail_edge(+1, theta, x, y, t, delta, log_target)

    def f(v):
        w = v + 1j * theta
        return 0.5 * phi_complex(w, policy) * np.exp(t * w * w + 1j * zr * v + zr * delta)

    val, err = gk_adaptive(
        f, vlo, vhi, abs_tol=0.5 * policy.abs_tol, rel_tol=policy.rel_tol,
        max_refinements=policy.quad_max_refinements, initial=32,
    )
    return back(complex(val)), err


def ht_quadrature(q: HtQuery) -> complex:
    """H_t(z) by direct quadrature of the defining integral."""
    S, _ = ht_quadrature_scaled(q.z, q.t, q.policy)
    return complex(_unscale(S, q.z))


# ---------------------------------------------------------------------------
# heat kernel (t < 0)

HK_NODES = (64, 48)


def ht_heat_kernel_scaled(z, t, policy: PrecisionPolicy = DEFAULT_POLICY, nodes=HK_NODES):
    """S_t(z) for t < 0 as a Gaussian average of S_0; vectorised over z.

    From H_t(z) = (4pi)^{-1/2} int e^{-r^2/4} H_0(z + r sqrt|t|) dr, the
    substitution r = 2u and completing the square give
        S_t(z) = e^{pi^2 |t| / 64} pi^{-1/2} int e^{-u^2} S_0(z - pi|t|/4 + 2 sqrt|t| u) du,
    evaluated by Gauss-Hermite; the error estimate is the difference
    between the two node counts.
    """
    if t >= 0:
        raise DomainError("heat kernel representation needs t < 0", t=t)
    z = np.asarray(z, dtype=complex)
    sig = math.sqrt(-t)
    pref = math.exp(math.pi**2 * (-t) / 64.0) / math.sqrt(math.pi)
    vals = []
    for n in nodes:
        u, w = hermite_rule(n)
        arg = z[..., None] + (math.pi * t / 4.0 + 2.0 * sig * u)
        vals.append(pref * (h0_scaled(arg) @ w))
    S = vals[0]
    err = np.abs(vals[0] - vals[1]) if len(vals) > 1 else np.full(S.shape, np.nan)
    if S.ndim == 0:
        return complex(S), float(err)
    return S, err


def ht_heat_kernel(q: HtQuery) -> complex:
    """H_t(z), t < 0, from the heat-kernel convolution of H_0."""
    S, _ = ht_heat_kernel_scaled(q.z, q.t, q.policy)
    return complex(_unscale(S, q.z))


# ---------------------------------------------------------------------------
# saddle point


@dataclass(frozen=True)
class SaddleResult:
    w0: complex
    b: complex
    zeta_arg: complex
    t: float
    residual: float
    I_value: complex
    log_I: complex = 0j


def _check_omega(zeta_arg, consts):
    y, x = zeta_arg.real, zeta_arg.imag
    if x < consts.C_double_prime:
        raise DomainError(f"saddle needs Im(zeta) >= C'' = {consts.C_double_prime:g}", x=x)
    lp = float(log_plus(x))
    if not consts.C_prime * lp <= y <= 2 * consts.C * lp:
        raise DomainError(
            "saddle needs C' log_+ x <= Re(zeta) <= 2C log_+ x",
            y=y, lower=consts.C_prime * lp, upper=2 * consts.C * lp,
        )


def saddle_seed(b, zeta_arg, t):
    """Leading-order location of the saddle for zeta = y + ix."""
    y, x = zeta_arg.real, zeta_arg.imag
    L = np.log(x / (4.0 * b))
    return 0.25 * L + 1j * (PI8 - y / (4.0 * x) - t * L / (8.0 * x))


def _newton_saddle(b, zeta, t, policy, max_iter=50):
    """Damped Newton for 4b e^{4w} = zeta + 2tw, vectorised over b.

    Iterates until the residual is <= abs_tol or stops improving; entries
    stuck above abs_tol but within the rounding floor 16 eps |zeta| are
    accepted, anything else raises ConvergenceFailure.
    """
    b = np.asarray(b, dtype=complex)
    w = saddle_seed(b, zeta, t).astype(complex)

    def resid(w):
        return np.abs(4.0 * b * np.exp(4.0 * w) - zeta - 2.0 * t * w)

    best, best_res = w.copy(), resid(w)
    stall = 0
    for _ in range(max_iter):
        if np.all(best_res <= policy.abs_tol) or stall >= 3:
            break
        e4 = np.exp(4.0 * w)
        F = 4.0 * b * e4 - zeta - 2.0 * t * w
        step = -F / (16.0 * b * e4 - 2.0 * t)
        lam = np.ones(w.shape)
        for _ in range(40):
            cand = w + lam * step
            inside = (cand.imag >= 0) & (cand.imag < PI8)
            if inside.all():
                break
            lam = np.where(inside, lam, 0.5 * lam)
        w = w + lam * step
        res = resid(w)
        better = res < best_res
        stall = 0 if better.any() else stall + 1
        best = np.where(better, w, best)
        best_res = np.where(better, res, best_res)
    floor = max(policy.abs_tol, 16 * np.finfo(float).eps * abs(zeta))
    inside = (best.imag >= 0) & (best.imag < PI8)
    if np.any(best_res > floor) or not inside.all():
        raise ConvergenceFailure("saddle Newton iteration did not converge", residual=float(best_res.max()))
    return best, best_res


def log_it_stationary(B, t=0.0, order=1):
    """log of sqrt(pi/8) e^{-B} B^{-1/2} (1 + (1/12 + t/16)/B) (order 1)."""
    B = np.asarray(B, dtype=complex)
    out = 0.5 * math.log(math.pi / 8.0) - B - 0.5 * np.log(B)
    if order >= 1:
        out = out + np.log1p((1.0 / 12.0 + t / 16.0) / B)
    return out


def it_stationary(b, t=0.0, order=0):
    """Stationary-phase value of I_t(b, 4b).

    order 0 is sqrt(pi/8) exp(-b) b^{-1/2} with relative error O(1/|b|);
    order 1 adds the correction (1/12 + t/16)/b (Stirling plus the Gaussian
    average over the e^{tw^2} factor), leaving O(1/|b|^2).
    """
    b = complex(b)
    if b.real < 1:
        raise DomainError("it_stationary needs Re b >= 1", b=b)
    return complex(np.exp(log_it_stationary(b, t, order)))


def solve_saddle(b, zeta_arg, t, policy: PrecisionPolicy = DEFAULT_POLICY, consts=None, order=1, check_domain=True):
    """Solve 4b e^{4 w0} = zeta + 2t w0 in the strip 0 <= Im w0 < pi/8.

    Also evaluates I_t(b, zeta) = exp(t w0^2 + zeta w0) I_t(B, 4B), B = b e^{4 w0},
    with the stationary-phase formula of the given order.
    """
    zeta_arg = complex(zeta_arg)
    if b < 1:
        raise DomainError("solve_saddle needs b >= 1", b=b)
    if t > 0:
        raise DomainError("solve_saddle needs t <= 0", t=t)
    if check_domain:
        _check_omega(zeta_arg, consts or _constants.load())
    w, res = _newton_saddle(np.array([b]), zeta_arg, t, policy)
    w0 = complex(w[0])
    B = b * cmath.exp(4 * w0)
    logI = t * w0 * w0 + zeta_arg * w0 + complex(log_it_stationary(B, t, order))
    return SaddleResult(w0, complex(b), zeta_arg, t, float(res[0]), cmath.exp(logI), logI)


def ht_saddle_scaled(z, t, policy: PrecisionPolicy = DEFAULT_POLICY, consts=None, order=1, return_terms=False):
    """S_t(z) = exp(pi z/8) * 1/2 sum_n Q_{t,n} by the saddle-point expansion.

    Q_{t,n} = 2pi^2 n^4 I_t(pi n^2, 9+y+ix) - 3pi n^2 I_t(pi n^2, 5+y+ix).
    The series stops once a block of terms falls below series_cutoff |Q_1|.
    The error estimate is |S| / |B_1|^2, the size of the first omitted order.
    """
    consts = consts or _constants.load()
    zr, back = _reduce(complex(z))
    x, y = zr.real, -zr.imag
    if t > 0:
        raise DomainError("saddle method needs t <= 0", t=t)
    if y < consts.C_prime * float(log_plus(x)):
        raise DomainError(
            f"saddle method needs y >= C' log_+ x (C' = {consts.C_prime:g})",
            x=x, y=y,
        )
    for zeta in (9.0 + y + 1j * x, 5.0 + y + 1j * x):
        _check_omega(zeta, consts)
    scale = math.pi * zr / 8.0
    terms = []
    q1 = None
    n0 = 1
    block = 8
    while n0 <= policy.max_terms:
        n = np.arange(n0, min(n0 + block, policy.max_terms + 1), dtype=float)
        b = math.pi * n * n
        parts = []
        for zeta, coef in ((9.0 + y + 1j * x, 2 * math.pi**2 * n**4), (5.0 + y + 1j * x, -3 * math.pi * n**2)):
            w0, _ = _newton_saddle(b, zeta, t, policy)
            B = b * np.exp(4 * w0)
            logI = t * w0 * w0 + zeta * w0 + log_it_stationary(B, t, order)
            parts.append(coef * np.exp(logI + scale))
            if n0 == 1 and zeta.real == 9.0 + y:
                B1 = B[0]
        Q = parts[0] + parts[1]
        terms.extend(Q.tolist())
        if q1 is None:
            q1 = abs(Q[0])
        if np.max(np.abs(Q)) < policy.series_cutoff * q1:
            break
        n0 += block
    else:
        raise TruncationFailure("saddle series not truncated within max_terms", x=x, y=y)
    S = 0.5 * math.fsum(q.real for q in terms) + 0.5j * math.fsum(q.imag for q in terms)
    err = abs(S) / abs(B1) ** (2 if order >= 1 else 1)
    S = back(S)
    if return_terms:
        return S, err, np.array(terms)
    return S, err


def ht_saddle(q: HtQuery, consts=None) -> complex:
    """H_t(z) by the saddle-point expansion (asymptotic; ~1e-4 relative)."""
    S, _ = ht_saddle_scaled(q.z, q.t, q.policy, consts)
    return complex(_unscale(S, q.z))


# ---------------------------------------------------------------------------
# I_t by direct quadrature (oracle for the stationary formula)


def it_numeric(b, zeta_arg, t, shift=0j, policy: PrecisionPolicy = DEFAULT_POLICY):
    """I_t(b, zeta) = int exp(t w^2 - b e^{4w} + zeta w) dw along w = v + shift.

    Computed as exp(g(c)) * int exp(g(w) - g(c)) dv with c the point of
    largest |exp(g)| found on the line, so it does not under/overflow for
    moderate b.  For real b, zeta the line through the real peak is used.
    Returns the complex value.
    """
    b, zeta_arg, shift = complex(b), complex(zeta_arg), complex(shift)

    def g(v):
        w = v + shift
        return t * w * w - b * np.exp(4.0 * w) + zeta_arg * w

    vs = np.linspace(-20.0, 10.0, 30001)
    gv = g(vs).real
    vc = float(vs[np.argmax(gv)])
    gc = g(vc)
    cut = math.log(policy.abs_tol * 1e-3)
    lo = vc
    while (g(lo) - gc).real > cut:
        lo -= 0.25
    hi = vc
    while (g(hi) - gc).real > cut:
        hi += 0.05
    val, _ = gk_adaptive(
        lambda v: np.exp(g(v) - gc), lo, hi, abs_tol=policy.abs_tol, rel_tol=policy.rel_tol,
        max_refinements=policy.quad_max_refinements, initial=64,
    )
    return complex(cmath.exp(gc) * val)


# ---------------------------------------------------------------------------
# dispatch


def select_method(z, t, consts=None):
    """Method 'auto' resolves to: xi at t = 0; saddle when y >= C' log_+ x and
    x >= 200 (t < 0); heat_kernel when t < 0 and x < 200; quadrature otherwise."""
    if t == 0:
        return "xi"
    consts = consts or _constants.load()
    zr, _ = _reduce(complex(z))
    x, y = zr.real, -zr.imag
    if t < 0 and x >= 200 and y >= consts.C_prime * float(log_plus(x)):
        try:
            for zeta in (9.0 + y + 1j * x, 5.0 + y + 1j * x):
                _check_omega(zeta, consts)
            return "saddle"
        except DomainError:
            pass
    if t < 0 and x < 200:
        return "heat_kernel"
    return "quadrature"


def ht_xi_scaled(z):
    S = h0_scaled(z)
    return S, 64 * np.finfo(float).eps * np.abs(S) * (1.0 + np.abs(z) / 10.0)


def evaluate_scaled(z, t, method="auto", policy: PrecisionPolicy = DEFAULT_POLICY, consts=None):
    """Returns (S_t(z), est_error, method_used)."""
    if method == "auto":
        method = select_method(z, t, consts)
    if method == "xi":
        if t != 0:
            raise DomainError("xi method is only valid at t = 0", t=t)
        S, e = ht_xi_scaled(complex(z))
        return complex(S), float(e), method
    if method == "heat_kernel":
        S, e = ht_heat_kernel_scaled(z, t, policy)
    elif method == "saddle":
        S, e = ht_saddle_scaled(z, t, policy, consts)
    elif method == "quadrature":
        S, e = ht_quadrature_scaled(z, t, policy)
    else:
        raise DomainError(f"unknown method {method!r}")
    return complex(S), float(e), method


def evaluate(q: HtQuery, consts=None) -> HtResult:
    """Evaluate H_t(z) with the requested (or auto-selected) method."""
    S, err, used = evaluate_scaled(q.z, q.t, q.method, q.policy, consts)
    H = complex(_unscale(S, q.z))
    herr = float(err * abs(cmath.exp(-math.pi * q.z / 8.0)))
    return HtResult(H, S, _log_abs(S, q.z), used, herr)


def evaluate_scaled_array(z, t, method="auto", policy: PrecisionPolicy = DEFAULT_POLICY, consts=None, hk_nodes=HK_NODES):
    """S_t on an array of z.  Vectorised for xi and heat_kernel."""
    z = np.asarray(z, dtype=complex)
    if method == "auto":
        method = "xi" if t == 0 else ("heat_kernel" if t < 0 else "quadrature")
    if method == "xi":
        return h0_scaled(z)
    if method == "heat_kernel":
        return ht_heat_kernel_scaled(z, t, policy, nodes=hk_nodes)[0]
    out = np.empty(z.shape, dtype=complex)
    for i, zi in np.ndenumerate(z):
        out[i] = evaluate_scaled(zi, t, method, policy, consts)[0]
    return out


def ht_log_derivative(q: HtQuery, branch="numeric", consts=None) -> complex:
    """H_t'/H_t at z.

    ``numeric``: central difference of S_t with h = max(1e-5, 1e-7 |z|),
    minus pi/8.  ``asymptotic``: (i/4) log(iz / 4pi) on the principal branch.
    Raises ZeroProximity when S_t vanishes at z to working precision.
    """
    z = q.z
    if branch == "asymptotic":
        return 0.25j * cmath.log(1j * z / (4 * math.pi))
    if branch != "numeric":
        raise DomainError(f"unknown branch {branch!r}")
    h = max(1e-5, 1e-7 * abs(z))
    method = q.method if q.method != "auto" else select_method(z, q.t, consts)
    vals = []
    for zz in (z - h, z, z + h):
        S, e, _ = evaluate_scaled(zz, q.t, method, q.policy, consts)
        vals.append((S, e))
    (Sm, _), (S0, e0), (Sp, _) = vals
    if S0 == 0 or abs(S0) <= 4 * e0:
        raise ZeroProximity("H_t vanishes at z to working precision", z=z, t=q.t)
    return (Sp - Sm) / (2 * h * S0) - PI8


def log_derivative_array(z, t, method="auto", policy: PrecisionPolicy = DEFAULT_POLICY, consts=None, hk_nodes=HK_NODES):
    """Vectorised numeric H_t'/H_t on an array of z (same stencil rule).

    Returns (log-derivative, S_t(z)).
    """
    z = np.asarray(z, dtype=complex)
    h = np.maximum(1e-5, 1e-7 * np.abs(z))
    zz = np.concatenate([z - h, z, z + h])
    Sm, S0, Sp = np.split(evaluate_scaled_array(zz, t, method, policy, consts, hk_nodes), 3)
    return (Sp - Sm) / (2 * h * S0) - PI8, S0
