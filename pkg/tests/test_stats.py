import math

import mpmath
import numpy as np
import pytest

from bnetlab import stats

RELEVANT_UNIT_BOX = 11.88641975253948  # frozen from the quadrature, cross-checked below


def psi_oracle(t):
    t = mpmath.mpf(t)
    return mpmath.e ** (-t) / mpmath.sqrt(mpmath.pi * t) + 2 * mpmath.ncdf(mpmath.sqrt(2 * t))


def test_psi_at_one():
    assert abs(stats.psi(1.0) - 2.050254) <= 1e-6
    assert abs(stats.psi(1.0) - float(psi_oracle(1))) <= 1e-12


@pytest.mark.parametrize("t", [1e-6, 1e-3, 0.1, 0.5, 2.0, 7.0, 40.0, 100.0])
def test_psi_against_high_precision(t):
    assert abs(stats.psi(t) - float(psi_oracle(t))) <= 1e-9


@pytest.mark.parametrize("t", [1e-3, 0.5, 3.0, 20.0, 60.0, 100.0])
def test_psi_excess_against_high_precision(t):
    with mpmath.workdps(60):
        ref = psi_oracle(t) - 2
    assert stats.psi_excess(t) == pytest.approx(float(ref), rel=1e-9)


def test_psi_limits():
    assert stats.psi(math.inf) == 2.0
    for t in (1e-6, 1e-8, 1e-10):
        # next order is 2 sqrt(t / pi)
        assert abs(t * stats.psi(t) ** 2 - 1 / math.pi) < 3 * math.sqrt(t)
    with pytest.raises(ValueError):
        stats.psi(0.0)


def test_psi_shape_claims():
    grid = np.linspace(1e-3, 100, 5000)
    vals = np.array([stats.psi(t) for t in grid])
    # psi rounds to 2.0 in double precision past t ~ 37; the excess stays resolvable
    assert np.all(vals >= 2)
    assert all(stats.psi_excess(t) > 0 for t in grid)
    # continuity: midpoint values sit between neighbours up to curvature
    mids = np.array([stats.psi(t) for t in 0.5 * (grid[1:] + grid[:-1])])
    lo, hi = np.minimum(vals[1:], vals[:-1]), np.maximum(vals[1:], vals[:-1])
    assert np.all((mids >= lo - 1e-3) & (mids <= hi + 1e-3))
    tail = np.array([stats.psi(t) for t in np.linspace(10, 100, 400)])
    assert np.all(np.diff(tail) <= 1e-6)


def test_normal_cdf():
    assert stats.normal_cdf(0.0) == 0.5
    assert abs(stats.normal_cdf(1.414214) - 0.921350) <= 1e-6
    for x in np.linspace(-8, 8, 161):
        assert abs(stats.normal_cdf(x) - float(mpmath.ncdf(x))) <= 1e-7
        assert abs(stats.normal_cdf(-x) - (1 - stats.normal_cdf(x))) <= 1e-15


def test_relevant_integral_degenerate():
    assert stats.relevant_density_integral(0, 0.3, 0.3, 1, 0, 1) == 0.0
    assert stats.relevant_density_integral(0, 0, 1, 1, 0.5, 0.5) == 0.0
    with pytest.raises(ValueError):
        stats.relevant_density_integral(0, 0.5, 0.2, 1, 0, 1)


def test_relevant_integral_regression_and_oracle():
    val = stats.relevant_density_integral(0, 0, 1, 1, 0, 1)
    assert val == pytest.approx(RELEVANT_UNIT_BOX, rel=1e-10)
    mid = stats.relevant_density_midpoint(0, 0, 1, 1, 0, 1)
    assert abs(mid / val - 1) <= 1e-4
    exact = 2 * mpmath.quad(lambda t: psi_oracle(t) * psi_oracle(1 - t), [0, 0.5, 1])
    assert abs(val / float(exact) - 1) <= 1e-6


def test_relevant_integral_random_tuples():
    rng = np.random.default_rng(11)
    for _ in range(20):
        S = rng.uniform(-1, 1)
        pts = np.sort(rng.uniform(0, 2, 3))
        s, u, U = S + pts[0], S + pts[1], S + pts[2]
        a = rng.uniform(-1, 1)
        b = a + rng.uniform(0.1, 2)
        q = stats.relevant_density_integral(S, s, u, U, a, b)
        m = stats.relevant_density_midpoint(S, s, u, U, a, b, panels=200_000)
        assert abs(m / q - 1) <= 1e-4


def test_mc_mean():
    one = stats.mc_mean([3.0])
    assert one.estimate == 3.0 and one.stderr == 0.0
    const = stats.mc_mean([2.5] * 10)
    assert const.stderr == 0.0
    alt = stats.mc_mean([0.0, 1.0] * 500)
    assert alt.estimate == 0.5
    assert alt.stderr == pytest.approx(0.0158193, abs=1e-6)
    empty = stats.mc_mean([])
    assert math.isnan(empty.estimate) and empty.error


def test_report_ratio():
    r = stats.EstimateReport(2.0, 0.1, 10).with_reference(4.0)
    assert r.ratio == 0.5
    assert stats.EstimateReport(2.0, 0.1, 10).with_reference(0.0).ratio is None
    with pytest.raises(ValueError):
        stats.EstimateReport(1.0, -1.0, 1)


def test_ratio_estimate_matches_pooled_ratio():
    num = np.array([3.0, 5.0, 4.0, 6.0])
    den = np.array([1.0, 2.0, 1.5, 2.5])
    r = stats.ratio_estimate(num, den)
    assert r.estimate == pytest.approx(num.sum() / den.sum())
    assert r.stderr > 0


def test_excursion_tail():
    assert stats.excursion_tail(1.0) == pytest.approx(0.79788, abs=1e-5)
    assert stats.excursion_tail(0.01) == pytest.approx(7.9788, abs=1e-4)
    assert stats.excursion_tail(math.inf) == 0.0
    nu = lambda h: 1 / math.sqrt(2 * math.pi * h ** 3)  # noqa: E731
    assert float(mpmath.quad(nu, [0.3, mpmath.inf])) == pytest.approx(stats.excursion_tail(0.3))
