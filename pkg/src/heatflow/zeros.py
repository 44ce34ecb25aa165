"""Real zeros of H_t: bracketing, argument-principle counting, zero tables."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import constants as _constants
from .errors import (
    ContourThroughZero,
    DomainError,
    HeatflowError,
    NonIntegerWinding,
    OrderError,
    ParseError,
    SuspectedComplexZero,
    SuspectedMissedZero,
)
from .ht import h0_scaled, ht_heat_kernel_scaled, log_derivative_array
from .quadrature import gk_adaptive
from .special import DEFAULT_POLICY, PrecisionPolicy, log_plus, psi

PACKAGED_TABLE = Path(__file__).with_name("data") / "zeta_zeros_100k.txt"


@dataclass(frozen=True)
class ZeroConfiguration:
    """Zeros x_j(t) for j in window = (j_lo, j_hi), strictly increasing.

    With ``symmetric`` the configuration stands for the full set
    {x_j} u {-x_j}; only the positive half is stored.
    """

    t: float
    window: tuple
    x: np.ndarray = field(repr=False)
    symmetric: bool = True

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        lo, hi = self.window
        object.__setattr__(self, "window", (int(lo), int(hi)))
        if len(x) != hi - lo + 1:
            raise DomainError("configuration length does not match window", window=self.window, n=len(x))
        if len(x) and not np.all(np.diff(x) > 0):
            i = int(np.argmin(np.diff(x) > 0))
            raise OrderError("zero positions must be strictly increasing", index=i)
        if self.symmetric and lo >= 1 and len(x) and x[0] <= 0:
            raise DomainError("positive indices need positive positions")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.window[0], self.window[1] + 1)

    def __len__(self):
        return len(self.x)

    def at(self, j):
        """x_j, using x_{-j} = -x_j when symmetric."""
        j = np.asarray(j)
        a = np.abs(j) if self.symmetric else j
        lo, hi = self.window
        if np.any((a < lo) | (a > hi)):
            raise DomainError("index outside configuration window", window=self.window)
        v = self.x[a - lo]
        v = np.where(j < 0, -v, v) if self.symmetric else v
        return float(v) if v.ndim == 0 else v

    def sub(self, j_lo, j_hi):
        lo = self.window[0]
        return ZeroConfiguration(self.t, (j_lo, j_hi), self.x[j_lo - lo: j_hi - lo + 1], self.symmetric)

    def replace(self, x=None, t=None):
        return ZeroConfiguration(self.t if t is None else t, self.window, self.x if x is None else x, self.symmetric)

    def to_csv(self) -> str:
        lines = ["j,x"] + [f"{j},{v:.17g}" for j, v in zip(self.indices, self.x)]
        return "\n".join(lines) + "\n"


def config_from_csv(text: str, t: float = 0.0, symmetric: bool = True) -> ZeroConfiguration:
    rows = [r for r in text.strip().splitlines() if r.strip()]
    if not rows or rows[0].strip() != "j,x":
        raise ParseError("CSV must start with header 'j,x'", line=1)
    js, xs = [], []
    for n, r in enumerate(rows[1:], start=2):
        try:
            a, b = r.split(",")
            js.append(int(a))
            xs.append(float(b))
        except ValueError as exc:
            raise ParseError(f"bad CSV row: {r!r}", line=n) from exc
    if js and js != list(range(js[0], js[0] + len(js))):
        raise ParseError("indices must be consecutive")
    lo = js[0] if js else 1
    return ZeroConfiguration(t, (lo, lo + len(js) - 1), np.array(xs), symmetric)


@dataclass(frozen=True)
class ZeroTable:
    gammas: np.ndarray = field(repr=False)
    source: str = ""
    count: int = 0

    def configuration(self, j_lo: int = 1, j_hi: int | None = None) -> ZeroConfiguration:
        """x_j(0) = 2 gamma_j for j in [j_lo, j_hi]."""
        j_hi = self.count if j_hi is None else j_hi
        if not 1 <= j_lo <= j_hi <= self.count:
            raise DomainError("requested window outside table", count=self.count)
        return ZeroConfiguration(0.0, (j_lo, j_hi), 2.0 * self.gammas[j_lo - 1: j_hi])


def parse_zero_table(text: str, source: str = "<string>") -> ZeroTable:
    vals = []
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            v = float(s)
        except ValueError as exc:
            raise ParseError(f"line {n}: not a decimal ordinate: {s!r}", line=n, content=s) from exc
        if not math.isfinite(v):
            raise ParseError(f"line {n}: non-finite ordinate", line=n, content=s)
        vals.append(v)
    g = np.array(vals, dtype=float)
    if len(g) > 1:
        bad = np.nonzero(np.diff(g) <= 0)[0]
        if len(bad):
            raise OrderError(f"ordinates not increasing at index {bad[0] + 1}", index=int(bad[0] + 1))
    g.setflags(write=False)
    return ZeroTable(g, source, len(g))


def load_zero_table(path=None) -> ZeroTable:
    """Parse a one-ordinate-per-line table ('#' comments allowed).

    With no path, loads the packaged table of the first 10^5 ordinates.
    """
    p = Path(path) if path is not None else PACKAGED_TABLE
    return parse_zero_table(p.read_text(encoding="utf-8"), str(p))


# ---------------------------------------------------------------------------
# real-axis evaluation


def real_scaled(t, x, policy: PrecisionPolicy = DEFAULT_POLICY):
    """S_t(x) = exp(pi x / 8) H_t(x) on real x (a real function)."""
    x = np.asarray(x, dtype=float)
    if t == 0:
        return np.real(h0_scaled(x))
    if t < 0:
        return np.real(ht_heat_kernel_scaled(x, t, policy, nodes=(64,))[0])
    raise DomainError("zero finding supports t in [-1/2, 0]", t=t)


def sign_change_zeros(t, a, b, spacing, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Zeros of H_t on [a, b] bracketed on a grid, refined by Brent's method."""
    n = max(int(math.ceil((b - a) / spacing)), 1)
    grid = np.linspace(a, b, n + 1)
    vals = real_scaled(t, grid, policy)
    s = np.sign(vals)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    exact = grid[(s == 0)]

    def f(u):
        return float(real_scaled(t, np.array([u]), policy)[0])

    roots = [
        brentq(f, grid[i], grid[i + 1], xtol=policy.abs_tol, rtol=4 * np.finfo(float).eps, maxiter=200)
        for i in idx
    ]
    return np.sort(np.concatenate([np.array(roots, dtype=float), exact]))


def find_zeros(t, a, b, policy: PrecisionPolicy = DEFAULT_POLICY, verify=True, consts=None, refinements=4):
    """All real zeros of H_t in [a, b], 0 <= a < b, t in [-1/2, 0].

    Grid spacing pi / log_+(b); with ``verify`` the count is compared with
    the argument-principle count and the grid is halved up to
    ``refinements`` times on disagreement.  Indices come from count_zeros
    on [0, a] (verify) or from Psi (no verify).
    """
    if not 0 <= a < b:
        raise DomainError("find_zeros needs 0 <= a < b", a=a, b=b)
    if not -0.5 <= t <= 0:
        raise DomainError("find_zeros supports t in [-1/2, 0]", t=t)
    spacing = math.pi / float(log_plus(b))
    roots = sign_change_zeros(t, a, b, spacing, policy)
    if verify:
        n_b = count_zeros(t, b, policy, consts).N
        n_a = count_zeros(t, a, policy, consts).N if a > 0 else 0
        expected = n_b - n_a
        for _ in range(refinements):
            if len(roots) == expected:
                break
            spacing /= 2
            roots = sign_change_zeros(t, a, b, spacing, policy)
        if len(roots) != expected:
            deficit = expected - len(roots)
            cls = SuspectedComplexZero if deficit > 0 and deficit % 2 == 0 else SuspectedMissedZero
            raise cls(
                f"found {len(roots)} real zeros in [{a}, {b}] but the contour count is {expected}",
                found=len(roots), expected=expected, t=t,
            )
        j0 = n_a + 1
    else:
        j0 = 1 if a == 0 or not len(roots) else int(round(float(psi(roots[0])) + 0.375))
    return ZeroConfiguration(t, (j0, j0 + len(roots) - 1), roots)


# ---------------------------------------------------------------------------
# counting


@dataclass(frozen=True)
class CountReport:
    T: float
    t: float
    N: int | None
    psi_T: float
    residual: float | None
    winding: float | None = None
    error: dict | None = None


def count_zeros(t, T, policy: PrecisionPolicy = DEFAULT_POLICY, consts=None, method="auto", kappa=None):
    """Number of zeros of H_t with 0 < Re z < T, |Im z| < kappa log_+ T.

    N = (1/2 pi i) \\oint H'/H dz over the rectangle; conjugate symmetry
    reduces this to (1/pi) Im of the integral along the lower half
    0 -> -iY -> T - iY -> T.  H'/H is the central-difference log-derivative.
    """
    if T <= 0:
        raise DomainError("count_zeros needs T > 0", T=T)
    if not -0.5 <= t <= 0:
        raise DomainError("count_zeros supports t in [-1/2, 0]", t=t)
    consts = consts or _constants.load()
    kappa = consts.C_prime if kappa is None else kappa
    T0 = T
    for _ in range(10):
        sT = real_scaled(t, np.array([T - 1e-3, T, T + 1e-3]), policy)
        if abs(sT[1]) > policy.abs_tol * max(abs(sT[0]), abs(sT[2]), 1e-300):
            break
        T += policy.abs_tol
    Y = kappa * float(log_plus(T))

    segments = [
        (lambda s: -1j * s, -1j, 0.0, Y),
        (lambda s: s - 1j * Y, 1.0, 0.0, T),
        (lambda s: T - 1j * Y + 1j * s, 1j, 0.0, Y),
    ]
    total = 0.0
    for path, dz, lo, hi in segments:
        worst = [np.inf]

        def integrand(s, path=path, dz=dz, worst=worst):
            g, S = log_derivative_array(path(s), t, method, policy, consts, hk_nodes=(64,))
            a = np.abs(S).reshape(-1, 15)
            ratio = a.min(axis=1) / np.maximum(a.max(axis=1), 1e-300)
            worst[0] = min(worst[0], float(ratio.min()))
            return g * dz

        val, _ = gk_adaptive(integrand, lo, hi, abs_tol=1e-3, rel_tol=1e-7, max_refinements=30, initial=max(8, int((hi - lo) / 8)))
        if worst[0] < policy.abs_tol:
            raise ContourThroughZero("H_t nearly vanishes on the counting contour", T=T, t=t)
        total += val.imag
    w = total / math.pi
    N = int(round(w))
    if abs(w - N) > 0.2:
        raise NonIntegerWinding(f"winding number {w:.4f} is not near an integer", T=T, t=t, winding=w)
    pT = float(psi(T0))
    return CountReport(T0, t, N, pT, N - pT, w)


def rvm_profile(t, T_list, policy: PrecisionPolicy = DEFAULT_POLICY, consts=None):
    """count_zeros over T_list; failures are recorded per report, not raised."""
    out = []
    for T in T_list:
        try:
            out.append(count_zeros(t, T, policy, consts))
        except HeatflowError as exc:
            pT = float(psi(T)) if T > 0 else float("nan")
            out.append(CountReport(T, t, None, pT, None, None, exc.to_dict()))
    return out
