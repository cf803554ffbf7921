import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from roughhawkes.errors import DomainError
from roughhawkes.kernels import FAMILIES, KernelSpec, cdf, laplace_phi, phi, sample_delay, sample_delays, survival
from roughhawkes.rng import KERNEL, stream

SP = lambda a: KernelSpec("ShiftedPareto", a)  # noqa: E731
P1 = lambda a: KernelSpec("ParetoFrom1", a)  # noqa: E731


def laplace_oracle(k, z):
    """Closed forms through the upper incomplete gamma function (mpmath)."""
    a, z = mp.mpf(k.alpha), mp.mpf(z)
    base = a * z**a * mp.gammainc(-a, z)
    return float(base * mp.exp(z)) if k.family == "ShiftedPareto" else float(base)


def test_phi_examples():
    assert phi(SP(0.5), 0.0) == 0.5
    assert phi(P1(0.7), 0.5) == 0.0
    assert phi(SP(0.6), 3.0) == pytest.approx(0.6 * 4**-1.6, rel=1e-15)


def test_cdf_examples():
    assert cdf(SP(0.5), 3.0) == pytest.approx(0.5, rel=1e-15)
    for k in (SP(0.6), P1(0.6)):
        assert cdf(k, 0.0) == 0.0


@pytest.mark.parametrize("fam", FAMILIES)
@pytest.mark.parametrize("a", [0.55, 0.6, 0.75])
def test_tail_constant_exact(fam, a):
    k = KernelSpec(fam, a)
    x = np.geomspace(1, 1e6, 50) if fam == "ParetoFrom1" else np.array([1e6])
    if fam == "ShiftedPareto":
        # exact in (1 + x); at x = 1e6 the offset is below 1e-6
        assert abs(a * 1e6**a * survival(k, 1e6) - k.K) < 1e-6
    else:
        assert np.allclose(a * x**a * survival(k, x), k.K, rtol=1e-13)


def test_sample_delay_examples():
    assert sample_delay(SP(0.5), 0.75) == pytest.approx(15.0, rel=1e-14)
    assert sample_delay(P1(0.5), 0.75) == pytest.approx(16.0, rel=1e-14)
    for u in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            sample_delay(SP(0.5), u)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FAMILIES), st.floats(0.05, 0.95), st.floats(1e-9, 1 - 1e-9))
def test_inverse_cdf_roundtrip(fam, a, u):
    k = KernelSpec(fam, a)
    assert abs(cdf(k, sample_delay(k, u)) - u) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(FAMILIES), st.floats(0.05, 0.95), st.floats(0, 1e4), st.floats(0, 1e4))
def test_cdf_monotone(fam, a, x, y):
    k = KernelSpec(fam, a)
    lo, hi = min(x, y), max(x, y)
    assert 0.0 <= cdf(k, lo) <= cdf(k, hi) <= 1.0


def test_sampler_goodness_of_fit():
    k = SP(0.6)
    d = sample_delays(k, stream(11, KERNEL), 10**6)
    edges = np.r_[0.0, np.geomspace(0.05, 1e4, 40)]
    obs, _ = np.histogram(d, bins=edges)
    probs = np.diff(cdf(k, edges))
    exp = probs * d.size
    chi2 = np.sum((obs - exp) ** 2 / exp)
    assert stats.chi2.sf(chi2, edges.size - 2) > 0.01


@pytest.mark.parametrize("fam", FAMILIES)
@pytest.mark.parametrize("z", [0.01, 0.1, 1.0, 10.0])
def test_laplace_closed_form(fam, z):
    k = KernelSpec(fam, 0.6)
    assert laplace_phi(k, z) == pytest.approx(laplace_oracle(k, z), rel=1e-10)


def test_laplace_basic():
    assert laplace_phi(SP(0.6), 0.0) == 1.0
    z = np.geomspace(1e-4, 1e2, 100)
    v = np.array([laplace_phi(SP(0.6), t) for t in z])
    assert np.all(np.diff(v) < 0) and np.all((v > 0) & (v <= 1))
    with pytest.raises(DomainError):
        laplace_phi(SP(0.6), -1.0)


def test_laplace_small_z_expansion():
    r = [(1 - laplace_phi(SP(0.5), z)) / z**0.5 for z in (1e-3, 1e-4, 1e-5)]
    assert all(abs(x / math.sqrt(math.pi) - 1) < 0.05 for x in r)
    assert max(r) / min(r) - 1 < 0.05


@pytest.mark.parametrize("fam", FAMILIES)
def test_laplace_matches_monte_carlo(fam):
    k = KernelSpec(fam, 0.6)
    d = sample_delays(k, stream(5, KERNEL, 1), 10**6)
    for z in (0.1, 1.0, 10.0):
        e = np.exp(-z * d)
        se = e.std(ddof=1) / math.sqrt(e.size)
        assert abs(e.mean() - laplace_phi(k, z)) < 3 * se


def test_kernel_spec_validation():
    with pytest.raises(DomainError):
        KernelSpec("Exponential", 0.5)
    with pytest.raises(DomainError):
        KernelSpec("ShiftedPareto", 1.0)
    assert SP(0.6).K == 0.6 and SP(0.6).lag == 0.0 and P1(0.6).lag == 1.0


def test_density_integrates_to_one():
    from scipy import integrate

    k = SP(0.6)
    v, _ = integrate.quad(lambda x: phi(k, x), 0, np.inf, limit=500)
    assert v == pytest.approx(1.0, rel=1e-8)
