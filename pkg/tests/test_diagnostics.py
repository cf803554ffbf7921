import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughhawkes import diagnostics as D
from roughhawkes import hawkes as H
from roughhawkes import scaling as S
from roughhawkes import special_fn as sf
from roughhawkes.errors import DegenerateError, DomainError
from roughhawkes.scaling import GridPath


def _bm(seed, n):
    rng = np.random.default_rng(seed)
    return np.r_[0.0, np.cumsum(rng.standard_normal(n))] / math.sqrt(n)


def test_line_has_exponent_one():
    est = D.holder_estimate(np.linspace(0, 3, 4097), step=1 / 4096)
    assert est.exponent == pytest.approx(1.0, abs=1e-10)
    assert est.levels >= 3


def test_brownian_exponent():
    est = D.holder_estimate(_bm(0, 4096), step=1 / 4096)
    assert abs(est.exponent - 0.5) < 0.1
    ens = D.holder_ensemble(np.stack([_bm(k, 4096) for k in range(50)]), 1 / 4096)
    assert abs(ens.exponent - 0.5) < 0.03


def test_modulus_method_sees_edge_roughness():
    x = np.linspace(0, 1, 4097)
    est = D.holder_estimate(x**0.3, step=1 / 4096, method="modulus")
    assert abs(est.exponent - 0.3) < 0.05


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 50.0), st.floats(-100.0, 100.0), st.integers(0, 1000))
def test_affine_invariance(scale, shift, seed):
    b = _bm(seed, 1024)
    e1 = D.holder_estimate(b, step=1 / 1024).exponent
    e2 = D.holder_estimate(scale * b + shift, step=1 / 1024).exponent
    assert e2 == pytest.approx(e1, abs=1e-10)


def test_holder_accepts_gridpath():
    b = _bm(3, 1024)
    assert D.holder_estimate(GridPath(1 / 1024, b, "Y_limit")).exponent == D.holder_estimate(b, step=1 / 1024).exponent


def test_holder_errors():
    with pytest.raises(DegenerateError):
        D.holder_estimate(np.full(1025, 2.0), step=1 / 1024)
    with pytest.raises(DomainError):
        D.holder_estimate(np.arange(100.0), step=0.01)
    with pytest.raises(DomainError):
        D.holder_estimate(_bm(0, 1024))
    with pytest.raises(DomainError):
        D.holder_estimate(_bm(0, 1024), step=1 / 1024, method="bogus")
    with pytest.raises(DomainError):
        D.holder_estimate(_bm(0, 1024), step=1 / 1024, qs=(3.0,))


def test_ecdf_identical_and_symmetric():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal(2000), rng.standard_normal(3000) + 0.1
    assert D.ecdf_distance(a, a) == (0.0, 0.0)
    ab, ba = D.ecdf_distance(a, b), D.ecdf_distance(b, a)
    assert ab == pytest.approx(ba, rel=1e-12)
    assert 0 < ab[0] <= 1
    with pytest.raises(DomainError):
        D.ecdf_distance(a[:999], b)
    with pytest.raises(DomainError):
        D.ecdf_distance(a, b[:10])


def test_ecdf_against_cdf():
    # midpoint uniform sample: KS is exactly half a step
    n = 10**5
    a = (np.arange(n) + 0.5) / n
    ks, _ = D.ecdf_distance(a, lambda x: np.clip(x, 0, 1))
    assert ks == pytest.approx(0.5 / n, abs=1e-12)
    # against F(x) = x^2 the W1 distance is int_0^1 (x - x^2) dx = 1/6 up to O(1/n)
    ks, w1 = D.ecdf_distance(a, lambda x: np.clip(x, 0, 1) ** 2)
    assert ks == pytest.approx(0.25, abs=1e-4)
    assert w1 == pytest.approx(1 / 6, abs=1e-4)


def test_tabulated_cdf_accuracy():
    cdf = D.frac_cdf(0.6, 1.0)
    p = sf.FracKernelParams(0.6, 1.0)
    x = np.geomspace(1e-8, 1e8, 997)
    assert np.max(np.abs(cdf(x) - sf.F_frac(p, x))) < 1e-8
    assert cdf(np.array([0.0, -1.0])).tolist() == [0.0, 0.0]
    # tails stay monotone and within [0, 1]
    t = cdf(np.array([1e-20, 1e-14, 1e14, 1e20]))
    assert np.all(np.diff(t) >= 0) and t[0] >= 0 and t[-1] <= 1
    with pytest.raises(DomainError):
        D.TabulatedCDF(lambda x: 1.0 / (1.0 + x), 1e-3, 1e3)


def test_tabulated_cdf_mpmath_point():
    # F(1) = 1 - E_{0.6}(-1), independent oracle
    ref = float(1 - mp.mittag_leffler(0.6, 1, -1)) if hasattr(mp, "mittag_leffler") else None
    if ref is None:
        mp.mp.dps = 30
        ref = float(1 - mp.nsum(lambda k: (-1) ** k / mp.gamma(0.6 * k + 1), [0, mp.inf]))
    assert D.frac_cdf(0.6, 1.0)(np.array([1.0]))[0] == pytest.approx(ref, abs=1e-8)


def test_bracket_report_closed_form():
    reg = S.make_regime(0.6, 1.0, 1.0, 0.6, 200.0)
    recs = [H.simulate(reg.hawkes_params(), 0, i) for i in range(3)]
    rep = D.bracket_report(recs, reg)
    assert rep.ok and rep.paths == 3
    assert rep.jump == reg.jump
    closed = math.sqrt((1 - reg.a_T) / (200.0**0.6 * reg.mu_star / reg.delta))
    assert rep.jump_closed_form == pytest.approx(closed, rel=1e-12)
    assert rep.as_dict()["ok"] is True


def _fake(T, m, k=5):
    return S.make_regime(0.6, 1.0, 1.0, 0.6, T), np.full(k, m) * np.linspace(0.9, 1.1, k)


def test_samelim_decay():
    regs = [S.make_regime(0.6, 1.0, 1.0, 0.6, T) for T in (100.0, 1000.0, 10000.0)]
    ens = {r: 2.0 * (r.one_minus_a / r.T**r.alpha) * np.linspace(0.9, 1.1, 5) for r in regs}
    fit = D.samelim_decay(ens)
    assert fit.slope == pytest.approx(1.0, abs=1e-12)
    assert fit.C == pytest.approx(2.0, rel=1e-12)
    assert fit.within
    with pytest.raises(DegenerateError):
        D.samelim_decay(list(ens.items())[:2])
    with pytest.raises(DegenerateError):
        D.samelim_decay([(r, [1.0]) for r in regs])


def test_strictly_decreasing():
    assert D.strictly_decreasing([3, 2, 1])
    assert not D.strictly_decreasing([3, 3, 1])
    assert D.strictly_decreasing([1])
