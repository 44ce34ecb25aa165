"""Scalar special functions: the kernel Phi, the counting function Psi,
classical zero locations, and a zeta/xi backend.

The xi backend works in log-scaled form.  ``|H_0(x)|`` decays like
``exp(-pi x / 8)`` and underflows binary64 near x ~ 5600, so the rest of the
package evaluates ``S_0(z) = exp(pi z / 8) H_0(z)`` via :func:`h0_scaled`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import bernoulli, factorial, loggamma

from ._backend import kernels
from .errors import (
    ConvergenceFailure,
    DomainError,
    PrecisionLossWarning,
    TruncationFailure,
)

FOUR_PI = 4.0 * math.pi
XI_HEIGHT_LIMIT = 2000.0


@dataclass(frozen=True)
class PrecisionPolicy:
    """Tolerances shared by every evaluator.

    ``series_cutoff`` is an absolute term magnitude.  ``compensated`` turns on
    Neumaier summation for the Phi series.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    series_cutoff: float = 1e-17
    max_terms: int = 10000
    quad_max_refinements: int = 60
    compensated: bool = False

    def __post_init__(self):
        if not self.abs_tol > 0 or not self.rel_tol > 0:
            raise DomainError("abs_tol and rel_tol must be positive")
        if self.max_terms < 1 or self.quad_max_refinements < 1:
            raise DomainError("max_terms and quad_max_refinements must be >= 1")


DEFAULT_POLICY = PrecisionPolicy()


def log_plus(x):
    """log(2 + |x|)."""
    return np.log(2.0 + np.abs(x))


# ---------------------------------------------------------------------------
# Phi


def phi_complex(w, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Phi at complex points, reflecting to Re(w) >= 0 by evenness.

    Phi is analytic in the strip |Im w| < pi/8.
    """
    w = np.asarray(w, dtype=complex)
    wr = np.where(w.real < 0, -w, w)
    vals, used = kernels.phi_series(wr, policy.series_cutoff, policy.max_terms, policy.compensated)
    if np.any(used < 0):
        bad = wr.ravel()[np.argmax(np.ravel(used) < 0)]
        raise TruncationFailure(f"Phi series did not reach cutoff within {policy.max_terms} terms", w=bad)
    return vals


def phi(u, policy: PrecisionPolicy = DEFAULT_POLICY, reflect_below: float = -1.0):
    """Phi(u) = sum_n (2 pi^2 n^4 e^{9u} - 3 pi n^2 e^{5u}) exp(-pi n^2 e^{4u}).

    The series is summed directly for u >= ``reflect_below``; further left the
    direct sum cancels catastrophically and Phi(u) = Phi(-u) is used instead.
    Pass ``reflect_below=-inf`` to force the direct sum.
    """
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if not np.all(np.isfinite(u)):
        raise DomainError("phi needs finite u")
    ue = np.where(u < reflect_below, -u, u)
    vals, used = kernels.phi_series(ue.astype(complex), policy.series_cutoff, policy.max_terms, policy.compensated)
    if np.any(used < 0):
        i = int(np.argmax(used < 0))
        n = policy.max_terms
        e4 = math.exp(4.0 * ue[i])
        bound = (2 * math.pi**2 * n**4 * math.exp(9 * ue[i])) * math.exp(-math.pi * n * n * e4)
        raise TruncationFailure(
            f"Phi series at u={ue[i]:.6g} not truncated after {n} terms (last-term bound {bound:.3e})",
            u=float(ue[i]),
            bound=bound,
        )
    out = vals.real
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Psi and classical locations


def psi(T):
    """Psi(T) = (T/4pi) log(T/4pi) - T/4pi."""
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise DomainError("psi requires T > 0")
    u = T / FOUR_PI
    out = u * np.log(u) - u
    return float(out) if out.ndim == 0 else out


def psi_prime(T):
    """Derivative of :func:`psi`, log(T / 4pi) / (4pi).

    This is also the mean density of zeros of H_0 at height T.
    """
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise DomainError("psi_prime requires T > 0")
    out = np.log(T / FOUR_PI) / FOUR_PI
    return float(out) if out.ndim == 0 else out


def psi_inverse(y, policy: PrecisionPolicy = DEFAULT_POLICY):
    """T > 4 pi e with Psi(T) = y, for real y > 0 (vectorised).

    Safeguarded Newton from the seed 4 pi y / log(2 + y).  Psi is increasing
    only beyond T = 4pi and negative on (1, 4 pi e), so the root sits in
    [4 pi e, 4 pi e (y + 1)], which serves as the bisection bracket.
    The residual target is max(abs_tol, 8 eps y): Psi(T) = y cannot be
    resolved below rounding of y itself.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise DomainError("psi_inverse needs y > 0")
    lo = np.full(y.shape, FOUR_PI * math.e)
    hi = FOUR_PI * math.e * (y + 1.0)
    T = np.clip(FOUR_PI * y / np.log(2.0 + y), lo, hi)
    tol = np.maximum(policy.abs_tol, 8 * np.finfo(float).eps * y)
    done = np.zeros(y.shape, dtype=bool)
    for _ in range(max(policy.max_terms, 100)):
        f = psi(T) - y
        done = np.abs(f) <= tol
        if done.all():
            break
        lo = np.where(f < 0, T, lo)
        hi = np.where(f > 0, T, hi)
        step = T - f / psi_prime(T)
        bad = ~((step > lo) & (step < hi))
        T = np.where(done, T, np.where(bad, 0.5 * (lo + hi), step))
    else:
        raise ConvergenceFailure("classical location iteration did not converge", y=float(y[~done].flat[0]))
    return float(T) if T.ndim == 0 else T


def classical_locations(js, policy: PrecisionPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Vectorised xi_j for integer j (negative j by xi_{-j} = -xi_j)."""
    js = np.asarray(js)
    if np.any(js == 0):
        raise DomainError("classical locations are indexed by nonzero integers")
    sign = np.sign(js).astype(float)
    return sign * np.asarray(psi_inverse(np.abs(js).astype(float), policy))


def classical_location(j: int, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """xi_j, the unique root of Psi(T) = j on (1, inf); xi_{-j} = -xi_j."""
    if int(j) != j or j == 0:
        raise DomainError("classical_location needs a nonzero integer index")
    return float(classical_locations(np.array([int(j)]), policy)[0])


def classical_gap(j: int, k: int, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """First-order approximation 4 pi (k - j) / log(xi_j / 4pi) to xi_k - xi_j.

    Error O(|k-j|^2 / (j log^2 xi_j)) for 1 <= j ~ k.
    """
    if j < 1 or k < 1:
        raise DomainError("classical_gap needs positive indices")
    if j == k:
        return 0.0
    return (k - j) / psi_prime(classical_location(j, policy))


@dataclass(frozen=True)
class ClassicalGrid:
    """xi_j for j in [j_lo, j_hi]; with ``symmetric`` the grid also answers
    negative indices through xi_{-j} = -xi_j."""

    window: tuple
    xi: np.ndarray = field(repr=False)
    symmetric: bool = True

    def __post_init__(self):
        lo, hi = self.window
        if not 1 <= lo <= hi:
            raise DomainError("grid window must satisfy 1 <= j_lo <= j_hi")
        if len(self.xi) != hi - lo + 1:
            raise DomainError("grid length does not match window")
        if np.any(np.diff(self.xi) <= 0):
            raise DomainError("classical grid must be strictly increasing")

    @classmethod
    def build(cls, j_lo: int, j_hi: int, policy: PrecisionPolicy = DEFAULT_POLICY, symmetric: bool = True):
        xi = classical_locations(np.arange(j_lo, j_hi + 1), policy)
        xi.setflags(write=False)
        return cls((j_lo, j_hi), xi, symmetric)

    def covers(self, j) -> bool:
        j = np.asarray(j)
        a = np.abs(j) if self.symmetric else j
        lo, hi = self.window
        return bool(np.all((a >= lo) & (a <= hi) & (j != 0)))

    def at(self, j):
        """xi_j for an int or integer array (negative allowed if symmetric)."""
        j = np.asarray(j)
        if not self.covers(j):
            raise DomainError("index outside classical grid", window=self.window)
        vals = self.xi[np.abs(j) - self.window[0]]
        vals = np.where(j < 0, -vals, vals)
        return float(vals) if vals.ndim == 0 else vals


# ---------------------------------------------------------------------------
# zeta and xi

_EM_TERMS = 30
_B2K = bernoulli(2 * _EM_TERMS)[2::2]
_EM_COEF = _B2K / factorial(np.arange(2, 2 * _EM_TERMS + 1, 2), exact=False)


def _zeta_sm1(s):
    """(s - 1) zeta(s) by Euler-Maclaurin; entire, valid for Re s > -50."""
    s = np.asarray(s, dtype=complex)
    N = np.ceil((np.abs(s) + 2 * _EM_TERMS) / math.pi).astype(np.int64) + 2
    logN = np.log(N)
    partial = kernels.dirichlet_sum(s, N - 1)
    Nms = np.exp(-s * logN)
    tail = 0.5 * Nms
    prod = s.copy()
    Npow = Nms / N
    for k in range(_EM_TERMS):
        if k > 0:
            prod = prod * (s + 2 * k - 1) * (s + 2 * k)
            Npow = Npow / (N * N)
        tail = tail + _EM_COEF[k] * prod * Npow
    return (s - 1.0) * (partial + tail) + N * Nms


def zeta(s):
    """Riemann zeta for Re s >= -40, s != 1 (Euler-Maclaurin)."""
    s = np.asarray(s, dtype=complex)
    if np.any(s == 1):
        raise DomainError("zeta has a pole at s = 1")
    out = _zeta_sm1(s) / (s - 1.0)
    return complex(out) if out.ndim == 0 else out


def log_xi_parts(s):
    """(L, Z) with xi(s) = exp(L) * Z; L holds the Gamma/pi factors.

    Uses xi(s) = pi^{-s/2} Gamma(s/2 + 1) (s - 1) zeta(s) and reflects
    Re s < 0 through xi(s) = xi(1 - s).
    """
    s = np.asarray(s, dtype=complex)
    s = np.where(s.real < 0, 1.0 - s, s)
    L = -0.5 * s * math.log(math.pi) + loggamma(0.5 * s + 1.0)
    return L, _zeta_sm1(s)


def xi_riemann(s, policy: PrecisionPolicy = DEFAULT_POLICY):
    """xi(s) = s(s-1)/2 pi^{-s/2} Gamma(s/2) zeta(s).

    |xi| ~ exp(-pi |Im s| / 4) leaves the binary64 range near |Im s| ~ 900;
    a PrecisionLossWarning is issued there and :func:`log_xi_parts` keeps
    full relative accuracy.
    """
    s_arr = np.asarray(s, dtype=complex)
    L, Z = log_xi_parts(s_arr)
    if np.any(np.abs(s_arr.imag) > XI_HEIGHT_LIMIT) or np.any(L.real < -700.0):
        warnings.warn(
            f"xi_riemann: rel_tol {policy.rel_tol:g} not achievable in binary64 here "
            "(height or underflow); use log_xi_parts",
            PrecisionLossWarning,
            stacklevel=2,
        )
    out = np.exp(L) * Z
    return complex(out) if out.ndim == 0 else out


def h0_scaled(z):
    """S_0(z) = exp(pi z / 8) H_0(z), with H_0(z) = xi(1/2 + iz/2) / 8.

    For Re z < 0 uses S_0(z) = exp(pi z / 4) S_0(-z) (H_0 is even).
    """
    z = np.asarray(z, dtype=complex)
    neg = z.real < 0
    za = np.where(neg, -z, z)
    L, Z = log_xi_parts(0.5 + 0.5j * za)
    out = np.exp(L + math.pi * za / 8.0 - math.log(8.0)) * Z
    if np.any(neg):
        out = np.where(neg, out * np.exp(np.where(neg, math.pi * z / 4.0, 0.0)), out)
    return complex(out) if out.ndim == 0 else out


def h0_xi(z):
    """H_0(z) = xi(1/2 + iz/2) / 8 (unscaled; underflows for large |Re z|)."""
    z = np.asarray(z, dtype=complex)
    out = h0_scaled(z) * np.exp(-math.pi * z / 8.0)
    return complex(out) if out.ndim == 0 else out
