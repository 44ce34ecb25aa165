import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import lambertw

from heatflow.dynamics import (
    FlowControls, TailModel, diagnostics, flow, gap_derivative, identity_suite, padded_window, read_snapshots,
    tail_velocity, velocity_field, write_snapshots,
)
from heatflow.errors import DomainError, GapCollapse, InsufficientSnapshots, ParseError, StepUnderflow
from heatflow.special import log_plus
from heatflow.zeros import ZeroConfiguration

NONE = TailModel("none")


def iso(xs, t=0.0):
    xs = np.sort(np.asarray(xs, dtype=float))
    return ZeroConfiguration(t, (1, len(xs)), xs, symmetric=False)


def xi_lambert(j):
    # Psi(xi) = j  <=>  xi = 4 pi e exp(W(j/e))
    return 4 * math.pi * math.e * np.exp(lambertw(np.asarray(j, dtype=float) / math.e).real)


def random_config(rng, n, spread=4.0):
    while True:
        xs = np.sort(rng.uniform(-spread, spread, n))
        if np.min(np.diff(xs)) > 0.3:
            return xs


def test_two_point_velocity():
    a = 1.7
    v = velocity_field(ZeroConfiguration(0.0, (1, 1), np.array([a])), NONE)
    assert v[0] == pytest.approx(1 / a, rel=1e-15)
    v2 = velocity_field(iso([-a, a]), NONE)
    assert v2[0] == pytest.approx(-1 / a) and v2[1] == pytest.approx(1 / a)


def test_mirror_lattice_equilibrium():
    d = 0.8
    c = ZeroConfiguration(0.0, (1, 2), np.array([d, 3 * d]))
    assert np.max(np.abs(velocity_field(c, TailModel("mirror")))) < 1e-12


@pytest.mark.xfail(strict=True, reason="{-2d,-d,d,2d} is not an arithmetic progression; its mirror extension is not in equilibrium")
def test_mirror_spec_lattice():
    d = 0.8
    c = ZeroConfiguration(0.0, (1, 2), np.array([d, 2 * d]))
    assert np.max(np.abs(velocity_field(c, TailModel("mirror")))) < 1e-12


def test_mirror_long_progression_is_static():
    c = iso(np.arange(-10, 11) * 0.5)
    assert np.max(np.abs(velocity_field(c, TailModel("mirror")))) < 1e-11


def test_classical_tail_first_fifty(table):
    c = table.configuration(1, 50)
    tv = tail_velocity(c, TailModel("classical", 0))
    assert np.all(np.isfinite(tv))
    assert np.max(np.abs(tv)) < 2 * log_plus(xi_lambert(50))


def test_classical_tail_reference_sum(table):
    c = table.configuration(1, 50)
    tv = tail_velocity(c, TailModel("classical", 0))
    N = 10**6
    xi = xi_lambert(np.arange(51, N + 1))
    U = float(xi_lambert(N + 0.5))
    for k in (0, 24, 49):
        x = c.x[k]
        explicit = 2 * np.sum(1 / (x - xi) + 1 / (x + xi))
        dens = lambda u: math.log(u / (4 * math.pi)) / (4 * math.pi)
        f = lambda u: (2 / (x - u) + 2 / (x + u)) * dens(u)
        # u = U / s maps [U, inf) onto (0, 1]
        rest, _ = integrate.quad(lambda s: f(U / s) * U / (s * s), 0.0, 1.0, epsabs=1e-15, limit=200)
        assert abs(tv[k] - (explicit + rest)) < 1e-9


def test_velocity_gap_collapse():
    with pytest.raises(GapCollapse):
        velocity_field(iso([0.0, 1e-12]), NONE)


def test_two_body_flow_law():
    snaps = flow(iso([0.0, 1.0]), 0.0, 0.1, NONE, FlowControls(t_end=1.0))
    g = np.diff(snaps[-1].config.x)[0]
    assert abs(g - math.sqrt(1.8)) < 1e-8


@pytest.mark.parametrize("scheme", ["rk45", "rk4_adaptive"])
def test_two_body_law_at_every_snapshot(scheme):
    ts = np.linspace(0, 0.1, 41)
    snaps = flow(iso([0.0, 1.0]), 0.0, 0.1, NONE, FlowControls(t_end=1.0, scheme=scheme), ts)
    for s in snaps:
        g = np.diff(s.config.x)[0]
        assert abs(g * g - (1 + 8 * s.t)) < 1e-9
    assert all(b >= a for a, b in zip([np.diff(s.config.x)[0] for s in snaps], [np.diff(s.config.x)[0] for s in snaps][1:]))


def test_round_trip():
    rng = np.random.default_rng(3)
    c = iso(random_config(rng, 6), t=-0.05)
    fw = flow(c, -0.05, -0.025, NONE)[-1]
    back = flow(fw.config, -0.025, -0.05, NONE)[-1]
    assert np.max(np.abs(back.config.x - c.x)) < 1e-7


def test_center_of_mass_symmetric():
    c = iso([-2.0, -0.7, 0.7, 2.0])
    for s in flow(c, 0.0, 0.2, NONE, FlowControls(t_end=1.0), np.linspace(0, 0.2, 5)):
        assert abs(np.sum(s.config.x)) < 1e-12


def test_backward_into_collapse():
    with pytest.raises((GapCollapse, StepUnderflow)):
        flow(iso([0.0, 1e-3]), 0.0, -1e-5, NONE, FlowControls(dt_init=1e-7, dt_min=1e-12))


def test_flow_respects_t_end():
    with pytest.raises(DomainError):
        flow(iso([0.0, 1.0]), 0.0, 0.1, NONE)


def test_controls_validation():
    with pytest.raises(DomainError):
        FlowControls(dt_init=1e-6, dt_min=1e-3)
    with pytest.raises(DomainError):
        FlowControls(scheme="euler")
    with pytest.raises(DomainError):
        TailModel("bogus")


def test_gap_derivative_two_body():
    assert gap_derivative(iso([0.0, 1.0]), 1, 2, NONE) == pytest.approx(4.0, rel=1e-15)


def test_gap_derivative_three_points():
    d = 1.3
    assert gap_derivative(iso([-d, 0.0, d]), 2, 3, NONE) == pytest.approx(3 / d, rel=1e-14)


def test_gap_derivative_matches_velocity_difference():
    rng = np.random.default_rng(5)
    for _ in range(10):
        c = iso(random_config(rng, 8))
        v = velocity_field(c, NONE)
        j, k = sorted(rng.choice(8, 2, replace=False))
        g = gap_derivative(c, int(j) + 1, int(k) + 1, NONE)
        assert abs(g - (v[k] - v[j])) <= 1e-12 * max(1.0, abs(g))


def test_gap_derivative_with_classical_tail(table):
    c = table.configuration(1, 30)
    tail = TailModel("classical", 1)
    v = velocity_field(c, tail)
    g = gap_derivative(c, 10, 11, tail)
    assert abs(g - (v[10] - v[9])) <= 1e-12 * max(1.0, abs(g))


def _fine_flow(xs, n=5, span=2e-3, dt=1e-5):
    ts = np.arange(0.0, span + dt / 2, dt)
    return flow(iso(xs), 0.0, float(ts[-1]), NONE, FlowControls(t_end=1.0), ts)


def test_virial_two_body():
    r = identity_suite(_fine_flow([0.0, 1.0]), [1, 2])
    assert r["virial_rate"] == pytest.approx(16.0, rel=1e-6)
    assert r["virial"] < 1e-6


@pytest.mark.parametrize("n", [3, 4, 6, 7, 9, 10])
def test_virial_isolated(n):
    rng = np.random.default_rng(n)
    r = identity_suite(_fine_flow(random_config(rng, n, spread=n)), range(1, n + 1))
    assert r["virial_rate"] == pytest.approx(4 * n * n * (n - 1), rel=1e-6)


def test_hamiltonian_and_energy_five_body():
    rng = np.random.default_rng(17)
    snaps = _fine_flow(random_config(rng, 5))
    r = identity_suite(snaps, range(1, 6))
    assert r["hamiltonian"] < 1e-5
    assert r["energy"] < 1e-5
    assert r["energy_monotone"]
    assert r["cross_energy_slack"] > -1e-5


def test_identity_suite_needs_three_snapshots():
    snaps = flow(iso([0.0, 1.0]), 0.0, 0.01, NONE, FlowControls(t_end=1.0))
    with pytest.raises(InsufficientSnapshots):
        identity_suite(snaps, [1, 2])


def test_diagnostics_recomputable():
    rng = np.random.default_rng(2)
    snaps = flow(iso(random_config(rng, 6)), 0.0, 0.05, NONE, FlowControls(t_end=1.0), [0.025])
    for s in snaps:
        d = diagnostics(s.config)
        for k, v in s.diagnostics.items():
            assert abs(d[k] - v) <= 1e-10 * max(1.0, abs(v))
        assert d["min_gap"] > 0


def test_padded_window():
    (lo, hi), (below, above) = padded_window(1, 20)
    pad = math.ceil(4 * log_plus(20) ** 2)
    assert (lo, hi) == (1, 20 + pad) and below == 0 and above == pad
    (lo, hi), _ = padded_window(100, 120)
    assert lo == 100 - math.ceil(4 * log_plus(120) ** 2)


def test_snapshot_stream_roundtrip():
    snaps = flow(iso([0.0, 1.0, 2.5]), 0.0, 0.01, NONE, FlowControls(t_end=1.0), [0.005])
    buf = io.StringIO()
    write_snapshots(snaps, buf)
    back = read_snapshots(buf.getvalue(), symmetric=False)
    assert [s.t for s in back] == [s.t for s in snaps]
    for a, b in zip(back, snaps):
        assert np.array_equal(a.config.x, b.config.x)
        assert a.diagnostics == b.diagnostics
    with pytest.raises(ParseError):
        read_snapshots('{"t": 0}\n')


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=7, unique=True))
def test_order_preserved(xs):
    xs = np.sort(xs)
    if np.min(np.diff(xs)) < 0.05:
        return
    snaps = flow(iso(xs), 0.0, 0.05, NONE, FlowControls(t_end=1.0), [0.01, 0.02, 0.03])
    for s in snaps:
        assert np.all(np.diff(s.config.x) > 0)
