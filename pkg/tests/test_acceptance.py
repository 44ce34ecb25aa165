"""Acceptance criteria 1-12, each at its stated tolerance.

Every test prints one PASS/FAIL line (collected again in the terminal
summary) before asserting.
"""
import math
import subprocess
import sys
import time

import numpy as np

from conftest import record
from heatflow.dynamics import FlowControls, TailModel, flow, identity_suite
from heatflow.energy import interaction_matrix, weight_window, weighted_sums, windowed_energy
from heatflow.ht import HtQuery, ht_heat_kernel, ht_quadrature, ht_saddle, it_numeric, it_stationary, solve_saddle
from heatflow.special import classical_location, classical_locations, log_plus, xi_riemann
from heatflow.stats import equilibrium_deviation, gap_report
from heatflow.zeros import ZeroConfiguration, count_zeros, find_zeros

NONE = TailModel("none")


def iso(xs):
    return ZeroConfiguration(0.0, (1, len(xs)), np.sort(np.asarray(xs, dtype=float)), symmetric=False)


def fine_flow(xs, span=2e-3, dt=1e-5):
    ts = np.arange(0.0, span + dt / 2, dt)
    return flow(iso(xs), 0.0, float(ts[-1]), NONE, FlowControls(t_end=1.0), ts)


def test_criterion_01_cross_method_agreement():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        r = rng.uniform(0, 100)
        theta = rng.uniform(-math.pi / 2, 0)  # Re z >= 0, Im z <= 0; other quadrants follow by symmetry
        z = r * complex(math.cos(theta), math.sin(theta))
        t = -rng.uniform(1e-3, 0.2)
        a = ht_quadrature(HtQuery(z, t))
        b = ht_heat_kernel(HtQuery(z, t, "heat_kernel"))
        worst = max(worst, abs(a - b) / abs(a))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 30
    record(1, ok, f"max rel diff {worst:.2e} (<= 1e-8), {dt:.1f} s (< 30 s)")
    assert ok


def test_criterion_02_h0_ground_truth(table):
    t0 = time.perf_counter()
    d0 = abs(ht_quadrature(HtQuery(0, 0)) - xi_riemann(0.5) / 8)
    vals = [abs(ht_quadrature(HtQuery(2 * g, 0))) for g in table.gammas[:100]]
    dt = time.perf_counter() - t0
    ok = d0 <= 1e-12 and max(vals) < 1e-9 and dt < 60
    record(2, ok, f"|H_0(0) - xi(1/2)/8| = {d0:.1e}, max |H_0(2 gamma_j)| = {max(vals):.1e} (j <= 100), {dt:.1f} s")
    assert ok


def test_criterion_03_backward_heat_equation():
    rng = np.random.default_rng(3)
    h, k = 1e-2, 1e-3
    worst = 0.0

    def H(z, t):
        return ht_quadrature(HtQuery(z, t))

    for _ in range(10):
        z = complex(rng.uniform(0, 40), -rng.uniform(0, 3))
        t = -rng.uniform(0.02, 0.2)
        dt = (H(z, t + k) - H(z, t - k)) / (2 * k)
        dzz = (H(z + h, t) - 2 * H(z, t) + H(z - h, t)) / h**2
        worst = max(worst, abs(dt + dzz) / abs(dt))
    ok = worst <= 1e-4
    record(3, ok, f"max |dH/dt + H''| / |dH/dt| = {worst:.2e} (<= 1e-4)")
    assert ok


def test_criterion_04_saddle_machinery(consts):
    res = 0.0
    for x in (200.0, 700.0, 1500.0):
        y = 12 * log_plus(x)
        for b in (math.pi, 9 * math.pi, 4 * math.pi**2):
            for t in (0.0, -0.2):
                r = solve_saddle(b, complex(9 + y, x), t)
                res = max(res, r.residual)
    ratios = {b: abs(it_numeric(b, 4 * b, -0.1) / it_stationary(b) - 1) for b in (50.0, 200.0)}
    sq = 0.0
    for x in (200.0, 500.0):
        z = complex(x, -12 * log_plus(x))
        a = ht_saddle(HtQuery(z, -0.1, "saddle"), consts)
        b = ht_quadrature(HtQuery(z, -0.1))
        sq = max(sq, abs(a - b) / abs(b))
    ok = res <= 1e-12 and all(v <= 5 / b for b, v in ratios.items()) and sq <= 1e-3
    record(4, ok, f"saddle residual {res:.1e}; I_t ratio-1 at b=50,200: {ratios[50.0]:.2e}, {ratios[200.0]:.2e} "
                  f"(<= 5/b); saddle vs quadrature {sq:.1e} (<= 1e-3)")
    assert ok


def test_criterion_05_riemann_von_mangoldt():
    t0 = time.perf_counter()
    n60 = count_zeros(0, 60).N
    env = {T: abs(count_zeros(0, T).residual) / log_plus(T) for T in (100.0, 500.0, 1000.0)}
    found = find_zeros(0, 0, 2000)
    xs = found.x
    mism = []
    for T in (200.0, 700.0, 1300.0, 2000.0):
        if count_zeros(0, T).N != int(np.sum(xs < T)):
            mism.append(T)
    dt = time.perf_counter() - t0
    ok = n60 == 3 and max(env.values()) <= 3 and not mism and dt < 300
    record(5, ok, f"N(60) = {n60}; max |N - Psi|/log_+T = {max(env.values()):.3f} (<= 3); "
                  f"count vs find_zeros mismatches {mism}; {dt:.1f} s")
    assert ok


def test_criterion_06_two_body_law():
    s = flow(iso([0.0, 1.0]), 0.0, 0.1, NONE, FlowControls(t_end=1.0))[-1]
    g = float(np.diff(s.config.x)[0])
    err = abs(g * g - 1.8)
    ok = err <= 1e-8
    record(6, ok, f"|gap(0.1)^2 - 1.8| = {err:.1e} (<= 1e-8)")
    assert ok


def test_criterion_07_virial_identity():
    rng = np.random.default_rng(7)
    errs = {}
    for n in (2, 5, 8):
        while True:
            xs = np.sort(rng.uniform(-n, n, n))
            if np.min(np.diff(xs)) > 0.3:
                break
        r = identity_suite(fine_flow(xs), range(1, n + 1))
        exact = 4 * n * n * (n - 1)
        errs[n] = abs(r["virial_rate"] - exact) / exact
        errs[n] = max(errs[n], r["virial"])
    ok = max(errs.values()) <= 1e-5
    record(7, ok, "virial rel err " + ", ".join(f"|K|={n}: {e:.1e}" for n, e in errs.items()) + " (<= 1e-5)")
    assert ok


def test_criterion_08_hamiltonian_energy():
    rng = np.random.default_rng(8)
    while True:
        xs = np.sort(rng.uniform(-4, 4, 5))
        if np.min(np.diff(xs)) > 0.3:
            break
    r = identity_suite(fine_flow(xs), range(1, 6))
    ok = r["hamiltonian"] <= 1e-5 and r["energy_monotone"]
    record(8, ok, f"|dH/dt + 4E|/(1+|E|) = {r['hamiltonian']:.1e} (<= 1e-5); E non-increasing: {r['energy_monotone']}")
    assert ok


def test_criterion_09_flow_vs_direct():
    t0 = time.perf_counter()
    hi = 20 + 200
    start = find_zeros(-0.01, 0, classical_location(hi + 1) + 5)
    start = start.sub(1, hi)
    end = flow(start, -0.01, 0.0, TailModel("classical", 1))[-1]
    direct = find_zeros(0, 0, end.config.x[21])
    err = float(np.max(np.abs(end.config.x[:20] - direct.x[:20])))
    dt = time.perf_counter() - t0
    ok = err <= 1e-6 and dt < 600
    record(9, ok, f"max |flowed - direct| over first 20 zeros = {err:.1e} (<= 1e-6), {dt:.1f} s")
    assert ok


def test_criterion_10_renormalization_exactness(table):
    T = 5.0
    W = weight_window(T)
    grid = ZeroConfiguration(0.0, (1, W), classical_locations(np.arange(1, W + 1)))
    e_i = windowed_energy(grid, None, (-40, 45)).E_tilde
    ws = weighted_sums(grid, None, T)
    dev = equilibrium_deviation(grid, None, (1, W))
    m = interaction_matrix(table.configuration(1, 300), None, "E_renorm")
    m_grid = interaction_matrix(grid, None, "E_renorm")
    vals = (e_i, ws.E_tilde_T, ws.H_tilde_T, dev)
    ok = all(v == 0 for v in vals) and m.decomposition_residual <= 1e-10 and m_grid.decomposition_residual <= 1e-10
    record(10, ok, f"grid: E^I, E_T, H_T, deviation = {vals}; decomposition residual {m.decomposition_residual:.1e} (<= 1e-10)")
    assert ok


def test_criterion_11_gap_statistics(table):
    r = gap_report(table, None, (1, 100000))
    f = r.summary()["fraction_below"]["0.77"]
    m = gap_report(table, None, (1000, 10000)).mean
    ok = table.count >= 100000 and f > 0 and f == float(f"{f:.4g}") and abs(m - 1) <= 0.02
    record(11, ok, f"fraction below 0.77 = {f} (> 0, 4 digits); mean normalized gap [1e3, 1e4] = {m:.5f}")
    assert ok


def test_criterion_12_cli_determinism(tmp_path, consts):
    cpath = tmp_path / "constants.json"
    cpath.write_text(consts.to_json())
    runs = {
        "eval": "command = eval\nt = -0.1\nx = 100\ny = 2\n",
        "zeros": "command = zeros\nt = -0.05\na = 0\nb = 120\n",
        "flow": "command = flow\nfrom = 0\nto = 0.003\nwindow = 1:300\nsnapshots = 4\n",
        "energy": "command = energy\nT = 4\nwindow = 1:200\n",
        "gaps": "command = gaps\nrange = 1:20000\n",
    }
    diffs = []
    for name, text in runs.items():
        cfg = tmp_path / f"{name}.cfg"
        cfg.write_text(text)
        outs = []
        for threads in ("1", "1", "4"):
            r = subprocess.run([sys.executable, "-m", "heatflow.cli", "--config", str(cfg), "--constants", str(cpath),
                                "--threads", threads], capture_output=True)
            assert r.returncode == 0, r.stderr
            outs.append(r.stdout)
        if not (outs[0] == outs[1] == outs[2] and outs[0]):
            diffs.append(name)
    ok = not diffs
    record(12, ok, f"identical bytes across repeated runs and --threads 1/4 for {sorted(runs)}; differing: {diffs}")
    assert ok
