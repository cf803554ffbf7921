import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from roughhawkes import fractional_calc as fc
from roughhawkes import special_fn as sf
from roughhawkes.errors import DomainError

# E_{alpha,beta}(z) by the power series in 500-digit arithmetic (mpmath)
ML_ORACLE = [
    (0.6, 1.0, -0.5, 0.60947582195620002162),
    (0.6, 1.0, -3.0, 0.15970348026509122069),
    (0.6, 1.0, -12.0, 0.038643078839373572781),
    (0.6, 1.0, -20.0, 0.022946564273258376396),
    (0.6, 0.6, -2.0, 0.064794543691715564101),
    (0.75, 0.75, -8.0, 0.0041752734124672942406),
    (0.75, 0.5, -1.5, -0.01023041036484833796),
    (0.3, 1.0, -4.0, 0.16650174431551664971),
    (0.9, 1.9, -30.0, 0.033209543076718002932),
    (0.6, 1.6, -0.01, 1.1101582318566343756),
    (0.5, 1.0, -25.0, 0.022549572432641358944),
    (0.6, 0.6, -40.0, 0.0001721487741068015363),
]
# far field: 24-term algebraic expansion in 50-digit arithmetic
ML_FAR = [
    (0.6, 1.0, -1e4, 4.508413761918204664e-5),
    (0.75, 0.75, -1e3, 2.0728546309097819553e-7),
    (0.6, 0.6, -1e6, 2.7049472566121758888e-13),
]
P06 = sf.FracKernelParams(0.6, 1.0)


@pytest.mark.parametrize("a,b,z,v", ML_ORACLE + ML_FAR)
def test_ml_matches_extended_precision(a, b, z, v):
    assert sf.mittag_leffler(z, a, b) == pytest.approx(v, rel=1e-10)


def test_ml_exponential_case():
    assert sf.ml_eval(sf.MLQuery(1.0, 1.0, 1.0)) == pytest.approx(math.e, rel=1e-14)
    z = np.linspace(-30, 5, 301)
    assert np.max(np.abs(sf.mittag_leffler(z, 1.0, 1.0) / np.exp(z) - 1)) < 1e-12


def test_ml_at_zero_is_reciprocal_gamma():
    assert sf.ml_eval(sf.MLQuery(0.6, 0.6, 0.0)) == pytest.approx(1 / special.gamma(0.6), rel=1e-14)


def test_ml_half_is_erfcx():
    assert sf.ml_eval(sf.MLQuery(0.5, 1.0, -1.0)) == pytest.approx(math.e * math.erfc(1.0), rel=1e-12)
    x = np.linspace(0, 10, 401)
    assert np.max(np.abs(sf.mittag_leffler(-x, 0.5) / special.erfcx(x) - 1)) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.05, 3.0))
def test_ml_zero_property(a, b):
    assert sf.mittag_leffler(0.0, a, b) == pytest.approx(1 / special.gamma(b), rel=1e-10)


@pytest.mark.parametrize("a", [0.3, 0.6, 0.75, 0.9])
def test_ml_recurrence(a):
    z = -np.geomspace(0.1, 50, 60)
    lhs = sf.mittag_leffler(z, a, a + 1.0)
    rhs = (sf.mittag_leffler(z, a, 1.0) - 1.0) / z
    assert np.max(np.abs(lhs / rhs - 1)) < 1e-8


@pytest.mark.parametrize("a,b", [(0.6, 1.0), (0.6, 0.6), (0.75, 0.5), (0.9, 1.9)])
def test_regime_crossover_continuity(a, b):
    y = sf.series_switch_point(a, b)
    s = sf.mittag_leffler(-y, a, b, method="series")
    other = sf.mittag_leffler(-y, a, b, method="integral")
    assert abs(s - other) <= 10 * sf.DEFAULT_TOL * abs(other)


def test_ml_domain_errors():
    with pytest.raises(DomainError):
        sf.MLQuery(1.2, 1.0, 0.0)
    with pytest.raises(DomainError):
        sf.MLQuery(0.5, 0.0, 0.0)
    with pytest.raises(DomainError):
        sf.MLQuery(0.5, 1.0, 0.0, rel_tol=0.1)


def test_f_frac_values():
    assert sf.f_frac(P06, 0.5) == pytest.approx(0.34100727281275086044, rel=1e-10)
    t = np.linspace(0.01, 3, 50)
    assert np.allclose(sf.f_frac(sf.FracKernelParams(1.0, 1.0), t), np.exp(-t), rtol=1e-12)
    with pytest.raises(DomainError):
        sf.f_frac(P06, 0.0)


def test_f_frac_positive_on_unit_interval():
    x = np.linspace(1e-4, 1, 500)
    for a in (0.3, 0.6, 0.9):
        assert np.all(sf.f_frac(sf.FracKernelParams(a, 2.0), x) > 0)


@pytest.mark.parametrize("x", [1e-3, 1e-4, 1e-5])
def test_small_x_equivalents(x):
    assert sf.f_frac(P06, x) * x**0.4 * special.gamma(0.6) == pytest.approx(1, abs=0.01 if x < 1e-3 else 0.05)
    p = sf.FracKernelParams(0.75, 1.0)
    assert sf.frac_deriv_f(p, 0.25, x) / (x**-0.5 / special.gamma(0.5)) == pytest.approx(1, abs=0.05)
    assert sf.frac_integ_f(P06, 0.3, x) / (x**-0.1 / special.gamma(0.9)) == pytest.approx(1, abs=0.05)


def test_small_x_ratios_converge():
    r = [abs(sf.f_frac(P06, x) * x**0.4 * special.gamma(0.6) - 1) for x in (1e-3, 1e-4, 1e-5)]
    assert r[0] > r[1] > r[2]


def test_F_frac_values():
    assert sf.F_frac(P06, 0.0) == 0.0
    assert sf.F_frac(sf.FracKernelParams(1.0, 1.0), 1.0) == pytest.approx(1 - math.exp(-1), rel=1e-13)
    assert sf.F_frac(P06, 1.0) == pytest.approx(0.58667265905689369948, rel=1e-10)
    # quadrature oracle with the x^{-0.4} singularity split off
    q1, _ = integrate.quad(lambda s: sf.f_frac(P06, s), 0, 1e-3, weight="alg", wvar=(0.0, 0.0), limit=200)
    q2, _ = integrate.quad(lambda s: sf.f_frac(P06, s), 1e-3, 1, epsabs=1e-13, limit=200)
    assert abs(sf.F_frac(P06, 1.0) - (q1 + q2)) < 1e-8
    with pytest.raises(DomainError):
        sf.F_frac(P06, -1.0)


def test_F_frac_monotone_to_one():
    v = sf.F_frac(P06, np.array([1.0, 10.0, 100.0, 1000.0]))
    assert np.all(np.diff(v) > 0) and np.all(v < 1) and 1 - v[-1] < 0.02


def test_frac_deriv_f():
    rng = np.random.default_rng(7)
    x = rng.uniform(0.01, 1, 5)
    assert np.allclose(sf.frac_deriv_f(P06, 0.0, x), sf.f_frac(P06, x), rtol=1e-14)
    p = sf.FracKernelParams(0.75, 2.0)
    assert sf.frac_deriv_f(p, 0.4, 0.3) == pytest.approx(-0.1047053273368480972, rel=1e-10)
    # grid oracle on a refined grid
    n = 8192
    f = fc.GridFn.from_function(lambda z: sf.f_frac(p, z), n, -0.25, 0.75)
    d = fc.rl_derivative(f, 0.4)
    i = int(0.3 * n)
    assert abs(d.values[i] - sf.frac_deriv_f(p, 0.4, d.x[i])) < 1e-3
    with pytest.raises(DomainError):
        sf.frac_deriv_f(p, 0.75, 0.3)


def test_frac_integ_f():
    rng = np.random.default_rng(8)
    t = rng.uniform(0.01, 1, 5)
    assert np.allclose(sf.frac_integ_f(P06, 1.0, t), sf.F_frac(P06, t), rtol=1e-12)
    assert sf.frac_integ_f(P06, 0.5, 0.7) == pytest.approx(0.5058887256776299047, rel=1e-10)
    n = 8192
    f = fc.GridFn.from_function(lambda z: sf.f_frac(P06, z), n, -0.4, 0.6)
    g = fc.rl_integral(f, 0.5)
    i = int(round(0.7 * n))
    assert abs(g.values[i] - sf.frac_integ_f(P06, 0.5, g.x[i])) < 1e-4
    with pytest.raises(DomainError):
        sf.frac_integ_f(P06, 0.0, 0.5)


def test_kernel_weights():
    assert np.allclose(sf.kernel_weights(P06, 0.01, 1), [sf.F_frac(P06, 0.01)], rtol=1e-15)
    h, n = 1 / 1024, 1024
    w = sf.kernel_weights(P06, h, n)
    assert np.all(w > 0)
    assert abs(math.fsum(w) - sf.F_frac(P06, 1.0)) < 1e-12
    w1 = sf.kernel_weights(sf.FracKernelParams(1.0, 1.0), 0.1, 10)
    k = np.arange(1, 11)
    assert np.allclose(w1, np.exp(-(k - 1) * 0.1) - np.exp(-k * 0.1), rtol=1e-12)
    with pytest.raises(DomainError):
        sf.kernel_weights(P06, 0.1, 20)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 0.95), st.floats(0.2, 5.0), st.integers(1, 400))
def test_kernel_weights_telescope(a, lam, n):
    p = sf.FracKernelParams(a, lam)
    w = sf.kernel_weights(p, 1.0 / n, n)
    assert np.all(w > 0)
    assert abs(math.fsum(w) - sf.F_frac(p, 1.0)) < 1e-12


def test_kernel_moments_against_quadrature():
    h, n = 0.125, 8
    m0, m1 = sf.kernel_moments(P06, h, n)
    for k in (0, 3, 7):
        a, b = k * h, (k + 1) * h
        r0, _ = integrate.quad(lambda u: sf.f_frac(P06, u), a, b, limit=200, epsabs=1e-13)
        r1, _ = integrate.quad(lambda u: (u - a) * sf.f_frac(P06, u), a, b, limit=200, epsabs=1e-13)
        assert m0[k] == pytest.approx(r0, rel=1e-7)
        assert m1[k] == pytest.approx(r1, rel=1e-7)
