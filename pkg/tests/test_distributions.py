import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from latentshield.distributions import (
    DomainError,
    GammaParams,
    dprivacy_log_pdf,
    gamma_cdf,
    gamma_inverse_cdf,
    gamma_pdf,
    lambda_coefficient,
    log_gamma,
    log_lambda_coefficient,
    sphere_area,
)
from latentshield.numeric import RngStream
from latentshield.verify import radial_mass, ratio_triples

# frozen from mpmath at 40 digits
LOG_GAMMA_HALF = 0.57236494292470008707
INV_K20_MEDIAN = 19.667672423305667331
CDF_K3_E2_R13 = 0.48157042406394953691
LAMBDA_K20_E05 = 1.5189370507218829284e-23


def test_log_gamma_examples():
    assert abs(log_gamma(1.0)) < 1e-13
    assert log_gamma(5.0) == pytest.approx(math.log(24.0), abs=1e-13)
    assert log_gamma(0.5) == pytest.approx(LOG_GAMMA_HALF, abs=1e-13)


def test_log_gamma_against_mpmath_grid():
    mpmath.mp.dps = 30
    xs = np.concatenate([np.linspace(0.5, 10, 191), np.linspace(10, 200, 381)])
    worst = max(abs(log_gamma(float(x)) - float(mpmath.loggamma(mpmath.mpf(float(x))))) for x in xs)
    assert worst < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 100.0))
def test_log_gamma_recurrence(x):
    assert abs(log_gamma(x + 1.0) - log_gamma(x) - math.log(x)) < 1e-12


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_log_gamma_domain(bad):
    with pytest.raises(DomainError):
        log_gamma(bad)


def test_gamma_cdf_examples():
    assert gamma_cdf(0.0, GammaParams(4, 2.0)) == 0.0
    assert gamma_cdf(1.0, GammaParams(1, 1.0)) == pytest.approx(1 - math.exp(-1), abs=1e-14)
    assert gamma_cdf(1.3, GammaParams(3, 2.0)) == pytest.approx(CDF_K3_E2_R13, abs=1e-13)


@pytest.mark.parametrize("r", [0.1, 0.7, 1.5, 3.0, 8.0])
def test_gamma_cdf_matches_pdf_quadrature(r):
    params = GammaParams(3, 2.0)
    mass, _ = integrate.quad(lambda t: float(gamma_pdf(t, params)), 0.0, r, epsabs=1e-14, epsrel=1e-13)
    assert abs(gamma_cdf(r, params) - mass) < 1e-8


@pytest.mark.parametrize("k", [1, 2, 3, 5, 10, 20, 50, 100])
def test_gamma_cdf_against_scipy(k):
    x = np.geomspace(1e-3, 5 * k, 400)
    ours = gamma_cdf(x, GammaParams(k, 1.7))
    assert np.max(np.abs(ours - special.gammainc(k, 1.7 * x))) < 1e-10
    assert np.all(np.diff(ours) >= 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 60), st.floats(0.01, 10.0), st.floats(0.0, 500.0), st.floats(1e-6, 50.0))
def test_gamma_cdf_monotone(k, eps, r, dr):
    p = GammaParams(k, eps)
    assert gamma_cdf(r + dr, p) >= gamma_cdf(r, p)


def test_gamma_cdf_domain():
    with pytest.raises(DomainError):
        gamma_cdf(-0.1, GammaParams(2, 1.0))
    with pytest.raises(DomainError):
        GammaParams(0, 1.0)
    with pytest.raises(DomainError):
        GammaParams(2, 0.0)


def test_inverse_examples():
    assert gamma_inverse_cdf(0.5, GammaParams(1, 1.0)) == pytest.approx(math.log(2), abs=1e-12)
    assert gamma_inverse_cdf(0.5, GammaParams(20, 1.0)) == pytest.approx(INV_K20_MEDIAN, rel=1e-12)
    r = gamma_inverse_cdf(1 - 1e-12, GammaParams(20, 0.5 / 3))
    assert math.isfinite(r) and r > 0


@pytest.mark.parametrize("k", [1, 2, 5, 20, 100])
def test_inverse_round_trip(k):
    params = GammaParams(k, 0.5 / 3)
    for p in np.arange(1, 100) / 100:
        assert abs(gamma_cdf(gamma_inverse_cdf(p, params), params) - p) < 1e-10


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 80), st.floats(1e-3, 20.0), st.floats(1e-12, 1 - 1e-12))
def test_inverse_round_trip_property(k, eps, p):
    params = GammaParams(k, eps)
    r = gamma_inverse_cdf(p, params)
    assert r >= 0
    assert abs(gamma_cdf(r, params) - p) < 1e-10


def test_inverse_array_matches_scalar():
    p = np.random.default_rng(0).uniform(1e-9, 1 - 1e-9, 500)
    params = GammaParams(20, 0.3)
    arr = gamma_inverse_cdf(p, params)
    assert np.allclose(arr, [gamma_inverse_cdf(float(v), params) for v in p], rtol=1e-12, atol=0)
    assert np.allclose(arr, stats.gamma.ppf(p, 20, scale=1 / 0.3), rtol=1e-9)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5])
def test_inverse_domain(bad):
    with pytest.raises(DomainError):
        gamma_inverse_cdf(bad, GammaParams(2, 1.0))


def test_lambda_examples():
    for eps in (0.1, 0.5, 1.0, 3.0):
        assert abs(lambda_coefficient(eps, 1) - eps / 2) < 1e-12
    assert lambda_coefficient(1.0, 2) == pytest.approx(1 / (2 * math.pi), rel=1e-13)
    assert lambda_coefficient(0.5, 20) == pytest.approx(LAMBDA_K20_E05, rel=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 5, 10, 20])
@pytest.mark.parametrize("eps", [0.1, 0.5, 1.0])
def test_density_normalizes(k, eps):
    assert abs(radial_mass(eps, k) - 1.0) < 1e-6


def test_density_normalizes_by_cartesian_quadrature():
    # independent of the shell formula: integrate the 2-D density directly
    eps = 0.8
    lam = lambda_coefficient(eps, 2)
    lim = 60.0 / eps
    mass, _ = integrate.dblquad(lambda y, x: lam * math.exp(-eps * math.hypot(x, y)), -lim, lim, -lim, lim,
                                epsabs=1e-10)
    assert abs(mass - 1.0) < 1e-6


def test_lambda_log_form_for_extremes():
    val = log_lambda_coefficient(1e-3, 2000)
    assert math.isfinite(val)
    with pytest.raises(OverflowError):
        lambda_coefficient(1e-3, 2000)


def test_sphere_area_known_values():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_log_pdf_examples():
    x0 = np.array([1.0, -2.0, 0.5])
    assert dprivacy_log_pdf(x0, x0, 0.7) == log_lambda_coefficient(0.7, 3)
    assert dprivacy_log_pdf([0.0], [1.0], 2.0) == pytest.approx(-2.0, abs=1e-13)
    with pytest.raises(DomainError):
        dprivacy_log_pdf([0.0, 1.0], [1.0], 1.0)


@pytest.mark.parametrize("k", [2, 20])
def test_ratio_bound(k):
    eps = 0.5
    x0s, x1s, xs = ratio_triples(k, 10_000, RngStream(11, k))
    gaps = [dprivacy_log_pdf(a, x, eps) - dprivacy_log_pdf(b, x, eps) - eps * np.linalg.norm(a - b)
            for a, b, x in zip(x0s, x1s, xs)]
    assert max(gaps) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 30), st.floats(0.01, 5.0), st.integers(0, 2**32 - 1))
def test_ratio_bound_property(k, eps, seed):
    g = np.random.default_rng(seed)
    a, b, x = g.normal(0, 5, (3, k))
    ratio = math.exp(dprivacy_log_pdf(a, x, eps) - dprivacy_log_pdf(b, x, eps))
    assert ratio <= math.exp(eps * np.linalg.norm(a - b)) * (1 + 1e-12)
