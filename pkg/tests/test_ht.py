import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatflow.errors import DomainError
from heatflow.ht import (
    HtQuery, evaluate, ht_heat_kernel, ht_log_derivative, ht_quadrature, ht_saddle, ht_saddle_scaled, it_numeric,
    it_stationary, saddle_seed, select_method, solve_saddle,
)
from heatflow.special import log_plus, xi_riemann



def H(z, t, method="quadrature"):
    return evaluate(HtQuery(z, t, method)).value


def test_quadrature_at_origin_matches_xi():
    ref = xi_riemann(0.5) / 8
    assert abs(ht_quadrature(HtQuery(0, 0)) - ref) < 1e-12


def test_quadrature_origin_mpmath():
    s = mpmath.mpf(0.5)
    ref = s * (s - 1) / 2 * mpmath.pi ** (-s / 2) * mpmath.gamma(s / 2) * mpmath.zeta(s) / 8
    assert abs(ht_quadrature(HtQuery(0, 0)) - float(ref)) < 1e-12


def test_quadrature_even():
    a = ht_quadrature(HtQuery(3 + 1j, -0.1))
    b = ht_quadrature(HtQuery(-3 - 1j, -0.1))
    assert abs(a - b) < 1e-12


def test_quadrature_vanishes_at_first_zero(table):
    assert abs(ht_quadrature(HtQuery(2 * table.gammas[0], 0))) < 1e-10


def test_heat_kernel_vs_quadrature_real():
    a = ht_heat_kernel(HtQuery(10, -0.05, "heat_kernel"))
    b = ht_quadrature(HtQuery(10, -0.05))
    assert abs(a - b) <= 1e-8 * abs(b)


def test_heat_kernel_conjugate():
    a = ht_heat_kernel(HtQuery(5 - 2j, -0.1, "heat_kernel"))
    b = ht_heat_kernel(HtQuery(5 + 2j, -0.1, "heat_kernel"))
    assert abs(a - b.conjugate()) <= 1e-12 * abs(a)


def test_heat_kernel_needs_negative_t():
    with pytest.raises(DomainError):
        HtQuery(1.0, 0.0, "heat_kernel")


def test_heat_kernel_continuity_at_zero():
    ref = xi_riemann(0.5) / 8
    ts = [-1e-2, -1e-3, -1e-4]
    d = [abs(ht_heat_kernel(HtQuery(0, t, "heat_kernel")) - ref) for t in ts]
    assert d[0] > d[1] > d[2]
    # H_t(0) - H_0(0) ~ -t H_0''(0); the ratio d/|t| is nearly constant
    rates = [a / abs(t) for a, t in zip(d, ts)]
    assert rates[0] == pytest.approx(rates[2], rel=0.05)


def test_query_validation():
    with pytest.raises(DomainError):
        HtQuery(1.0, 0.6)
    with pytest.raises(DomainError):
        HtQuery(1.0, -0.1, "bogus")


def test_method_agreement_random():
    rng = np.random.default_rng(20240611)
    for _ in range(20):
        r = rng.uniform(0, 100)
        z = complex(rng.uniform(-r, r), -rng.uniform(0, 10))
        if abs(z) > 100:
            z = z * 100 / abs(z)
        t = -rng.uniform(1e-3, 0.2)
        a = H(z, t, "quadrature")
        b = H(z, t, "heat_kernel")
        assert abs(a - b) <= 1e-8 * (1 + abs(a))


def test_backward_heat_equation():
    rng = np.random.default_rng(11)
    h, k = 1e-2, 1e-3
    for _ in range(10):
        z = complex(rng.uniform(0, 40), -rng.uniform(0, 3))
        t = -rng.uniform(0.02, 0.2)
        dt = (H(z, t + k) - H(z, t - k)) / (2 * k)
        dzz = (H(z + h, t) - 2 * H(z, t) + H(z - h, t)) / h**2
        ref = max(abs(H(z, t)), abs(dt), 1e-300)
        assert abs(dt + dzz) <= 1e-4 * ref


def test_solve_saddle_residual_and_location():
    r = solve_saddle(math.pi, complex(49, 1000), -0.1)
    w = r.w0
    assert abs(4 * math.pi * cmath.exp(4 * w) - complex(49, 1000) - 2 * -0.1 * w) < 1e-12
    assert r.residual < 1e-12
    assert 0 <= w.imag < math.pi / 8
    assert (4 * math.pi * cmath.exp(4 * w)).real >= 1


def test_saddle_seed_accuracy(consts):
    K = consts.envelope("saddle_seed_K")
    for x in (1e3, 1e4):
        y = 12 * log_plus(x)
        for b in (math.pi, 4 * math.pi**2):
            r = solve_saddle(b, complex(9 + y, x), -0.1)
            assert abs(r.w0 - saddle_seed(b, complex(9 + y, x), -0.1)) <= K * log_plus(x) ** 2 / x


def test_solve_saddle_domain(consts):
    with pytest.raises(DomainError):
        solve_saddle(math.pi, complex(49, 50), -0.1)  # x below C''
    with pytest.raises(DomainError):
        solve_saddle(math.pi, complex(1000, 1000), -0.1)  # y above 2 C log_+ x


@pytest.mark.parametrize("x", [200.0, 700.0, 1500.0])
@pytest.mark.parametrize("b", [math.pi, 4 * math.pi**2, 9 * math.pi])
@pytest.mark.parametrize("t", [0.0, -0.2])
def test_saddle_residual_grid(x, b, t):
    y = 12 * log_plus(x)
    r = solve_saddle(b, complex(9 + y, x), t)
    assert r.residual <= 1e-12
    assert abs(4 * b * cmath.exp(4 * r.w0) - complex(9 + y, x) - 2 * t * r.w0) <= 1e-12 * max(1, x / 100)


@pytest.mark.parametrize("b", [50.0, 200.0])
def test_it_stationary_ratio(b):
    ratio = it_numeric(b, 4 * b, -0.1) / it_stationary(b)
    assert abs(ratio - 1) <= 5 / b


def test_it_numeric_against_mpmath():
    b, t = 50.0, -0.1
    f = lambda w: mpmath.exp(t * w * w - b * mpmath.exp(4 * w) + 4 * b * w)
    # the integrand peaks at w ~ 0 and is below e^-200 of the peak outside [-1.5, 0.6]
    ref = mpmath.quad(f, [-1.5, -0.5, -0.1, 0, 0.1, 0.6])
    assert abs(it_numeric(b, 4 * b, t) - complex(ref)) <= 1e-10 * abs(complex(ref))


def test_it_stationary_branch_continuity():
    bp, bm = 100 + 0.1j, 100 - 0.1j
    a, b = it_stationary(bp), it_stationary(bm)
    assert abs(a - b.conjugate()) <= 1e-14 * abs(a)
    # e^{-b} alone rotates the phase by 0.2 rad; the square-root factor must not jump
    ra, rb = a * cmath.exp(bp), b * cmath.exp(bm)
    assert abs(ra - rb) / abs(ra) < 1e-2


@pytest.mark.parametrize("x", [200.0, 500.0])
def test_saddle_vs_quadrature(x, consts):
    z = complex(x, -12 * log_plus(x))
    a = ht_saddle(HtQuery(z, -0.1, "saddle"), consts)
    b = ht_quadrature(HtQuery(z, -0.1))
    assert abs(a - b) <= 1e-3 * abs(b)


def test_saddle_example_point(consts):
    a = ht_saddle(HtQuery(500 - 60j, -0.1, "saddle"), consts)
    b = ht_quadrature(HtQuery(500 - 60j, -0.1))
    assert abs(a - b) <= 1e-3 * abs(b)


def test_saddle_magnitude_law(consts):
    K = consts.envelope("magnitude_K")
    for x in (200.0, 500.0, 1000.0):
        S, _ = ht_saddle_scaled(complex(x, -12 * log_plus(x)), -0.1, consts=consts)
        assert abs(math.log(abs(S))) / log_plus(x) ** 2 <= K


def test_saddle_first_term_dominates(consts):
    _, _, terms = ht_saddle_scaled(complex(500, -12 * log_plus(500)), -0.1, consts=consts, return_terms=True)
    assert abs(terms[0]) / np.sum(np.abs(terms[1:])) > 100


def test_saddle_outside_region(consts):
    with pytest.raises(DomainError):
        ht_saddle(HtQuery(500 - 1j, -0.1, "saddle"), consts)


def test_log_derivative_asymptotic(consts):
    K = consts.envelope("logderiv_K")
    x = 1000.0
    q = HtQuery(complex(x, -12 * log_plus(x)), -0.05)
    num = ht_log_derivative(q, "numeric", consts)
    asym = 0.25j * cmath.log(1j * q.z / (4 * math.pi))
    assert abs(ht_log_derivative(q, "asymptotic") - asym) == 0
    assert abs(num - asym) <= K * log_plus(x) / x


def test_log_derivative_symmetry():
    z = 30 - 4j
    a = ht_log_derivative(HtQuery(z, -0.1))
    b = ht_log_derivative(HtQuery(-z.conjugate(), -0.1))
    assert abs(b + a.conjugate()) <= 1e-7 * abs(a)


@pytest.mark.parametrize("tau", [3.0, 20.0, 60.0])
def test_log_derivative_dirichlet_series(tau):
    s = mpmath.mpc(2.5, tau)
    # log xi' = 1/s + 1/(s-1) - log(pi)/2 + digamma(s/2)/2 + zeta'/zeta
    dl = 1 / s + 1 / (s - 1) - mpmath.log(mpmath.pi) / 2 + mpmath.digamma(s / 2) / 2
    dl += mpmath.zeta(s, derivative=1) / mpmath.zeta(s)
    ref = complex(dl) * 0.5j  # s = 1/2 + iz/2
    z = complex(2 * tau, -4.0)
    val = ht_log_derivative(HtQuery(z, 0.0))
    assert abs(val - ref) <= 1e-8 * max(1, abs(ref))


def test_auto_selection(consts):
    assert select_method(10, 0.0, consts) == "xi"
    assert select_method(10, -0.1, consts) == "heat_kernel"
    assert select_method(complex(500, -60), -0.1, consts) == "saddle"
    assert select_method(complex(500, -1), -0.1, consts) == "quadrature"


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 60), st.floats(-5, 5), st.floats(-0.3, -0.01))
def test_even_and_conjugate_symmetry(x, y, t):
    z = complex(x, y)
    v = H(z, t, "heat_kernel")
    scale = max(abs(v), 1e-300)
    assert abs(H(-z, t, "heat_kernel") - v) <= 1e-10 * scale
    assert abs(H(z.conjugate(), t, "heat_kernel") - v.conjugate()) <= 1e-10 * scale
