"""One-off calibration of C' and the envelope constants.

Every envelope is the largest observed value of a normalized error over a
fixed grid, times MARGIN, so that later runs (other backend, other
platform) still pass the same assertions.  ``heatflow calibrate`` writes
the result to a versioned constants file.
"""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .constants import Constants
from .errors import HeatflowError
from .energy import long_range_profile, potential_V, renorm_L, windowed_energy
from .ht import HtQuery, ht_log_derivative, ht_quadrature_scaled, ht_saddle_scaled, saddle_seed, solve_saddle
from .special import classical_gap, classical_location, classical_locations, log_plus
from .zeros import count_zeros, load_zero_table

MARGIN = 1.1
KAPPA_MAX = 10
SADDLE_X = (200.0, 500.0, 1000.0)
SADDLE_T = (-0.05, -0.1, -0.2)


def _up(v, digits=3):
    """MARGIN * v rounded up to ``digits`` significant figures."""
    v = MARGIN * float(v)
    if v <= 0:
        return 0.0
    e = math.floor(math.log10(v)) - digits + 1
    return float(f"{math.ceil(v / 10.0**e)}e{e}")


def saddle_agreement(kappa, consts):
    """Worst relative saddle/quadrature difference at y = kappa log_+ x."""
    c = replace(consts, C_prime=float(kappa))
    worst = 0.0
    for x in SADDLE_X:
        y = kappa * float(log_plus(x))
        for t in SADDLE_T:
            z = complex(x, -y)
            Sq, _ = ht_quadrature_scaled(z, t)
            try:
                Ss, _ = ht_saddle_scaled(z, t, consts=c)
            except HeatflowError:
                return math.inf
            worst = max(worst, abs(Ss - Sq) / abs(Sq))
    return worst


def calibrate_c_prime(consts):
    for kappa in range(1, KAPPA_MAX + 1):
        if saddle_agreement(kappa, consts) < 1e-3:
            return kappa
    return KAPPA_MAX


def _seed_K(consts):
    worst = 0.0
    for x in (1e3, 1e4):
        y = 12.0 * float(log_plus(x))
        for b in (math.pi, 4 * math.pi**2):
            for t in (0.0, -0.1):
                zeta = complex(9.0 + y, x)
                r = solve_saddle(b, zeta, t, consts=consts)
                s = complex(saddle_seed(b, zeta, t))
                worst = max(worst, abs(r.w0 - s) * x / float(log_plus(x)) ** 2)
    return worst


def _magnitude_K(consts):
    worst = 0.0
    for x in SADDLE_X:
        y = 12.0 * float(log_plus(x))
        for t in SADDLE_T:
            S, _ = ht_saddle_scaled(complex(x, -y), t, consts=consts)
            # log|H| + pi x/8 = log|S| since S = e^{pi z/8} H and Re z = x
            worst = max(worst, abs(math.log(abs(S))) / float(log_plus(x)) ** 2)
    return worst


def _logderiv_K(consts):
    worst = 0.0
    for x in (500.0, 1000.0, 2000.0):
        z = complex(x, -12.0 * float(log_plus(x)))
        q = HtQuery(z, -0.05)
        d = ht_log_derivative(q, "numeric", consts) - ht_log_derivative(q, "asymptotic", consts)
        worst = max(worst, abs(d) * x / float(log_plus(x)))
    return worst


def _classical_gap_C():
    worst = 0.0
    for j in (10, 100, 1000, 10000, 100000):
        exact = classical_location(j + 1) - classical_location(j)
        xi = classical_location(j)
        worst = max(worst, abs(classical_gap(j, j + 1) - exact) * j * math.log(xi) ** 2)
    return worst


def _rvm(consts, quick):
    out = {}
    Ts = (100.0, 500.0, 1000.0)
    r0 = [abs(count_zeros(0.0, T, consts=consts).residual) / float(log_plus(T)) for T in Ts]
    out["rvm_t0"] = max(r0)
    if not quick:
        r2 = [abs(count_zeros(-0.2, T, consts=consts).residual) / float(log_plus(T)) ** 2 for T in Ts]
        out["rvm_t-0.2"] = max(r2)
    return out


def _regimes():
    s = np.linspace(1e-4, 0.5, 20001)
    mid = np.concatenate([np.linspace(0.5, 1 - 1e-3, 5000), np.linspace(1 + 1e-3, 2.0, 5000)])
    big = np.linspace(4.0, 1e4, 20001)
    bigL = np.linspace(2.0 + 1e-9, 1e4, 20001)
    v_small = potential_V(s) * s * s
    v_mid = potential_V(mid) / (mid - 1) ** 2
    v_big = potential_V(big) / big
    l_small = renorm_L(s) / np.log(1 / s)
    l_mid = renorm_L(mid) / (mid - 1) ** 2
    l_big = renorm_L(bigL) / bigL
    out = {}
    for name, arr in (("V_small", v_small), ("V_mid", v_mid), ("V_large", v_big),
                      ("L_small", l_small), ("L_mid", l_mid), ("L_large", l_big)):
        out[name + "_lo"] = float(arr.min())
        out[name + "_hi"] = float(arr.max())
    return out


def calibrate(consts: Constants | None = None, quick: bool = False, log=None) -> Constants:
    """Fit C' and all envelope constants; returns a new Constants."""
    consts = consts or Constants(C_prime=2.0, C=8.0)
    say = log or (lambda m: None)
    kappa = calibrate_c_prime(consts)
    say(f"C' = {kappa}")
    c = replace(consts, C_prime=float(kappa), C=max(consts.C, float(kappa)), source="calibrate")
    env = {}
    env["saddle_seed_K"] = _up(_seed_K(c))
    env["magnitude_K"] = _up(_magnitude_K(c))
    env["logderiv_K"] = _up(_logderiv_K(c))
    env["classical_gap_C"] = _up(_classical_gap_C())
    for k, v in _rvm(c, quick).items():
        env[k] = _up(v)
    say("counting envelopes done")
    reg = _regimes()
    for k, v in reg.items():
        # lower ends are rounded down, upper ends up
        env[k] = _up(v) if k.endswith("_hi") else math.floor(v / MARGIN * 1e3) / 1e3
    tab = load_zero_table()
    eb = 0.0
    for hi in (100, 1000):
        w = windowed_energy(tab.configuration(1, hi), None, (1, hi))
        eb = max(eb, abs(w.difference) / float(log_plus(1 + hi)) ** 2)
    env["eb"] = _up(eb)
    cfg = tab.configuration(1, 1000)
    env["lrdec"] = _up(max(long_range_profile(cfg, None, j).envelope_constant for j in (250, 500, 750)))
    xs = tab.configuration(1, 10000).x
    env["interlacing"] = _up(np.max(np.abs(xs - classical_locations(np.arange(1, 10001)))))
    say("energy envelopes done")
    return replace(c, envelopes=dict(sorted(env.items())))
