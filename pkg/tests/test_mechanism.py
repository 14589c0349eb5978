import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentshield.distributions import DomainError, GammaParams, dprivacy_log_pdf, gamma_cdf
from latentshield.mechanism import (
    PrivacyParams,
    add_noise,
    add_noise_batch,
    effective_epsilon,
    l2_sensitivity_estimate,
    sample_radius,
    sample_unit_direction,
)
from latentshield.numeric import RngStream
from latentshield.verify import check_gamma_marginal, check_sphere, ks_statistic


def _directions(k, n, seed):
    rng = RngStream(seed, 2)
    return np.array([sample_unit_direction(k, rng) for _ in range(n)])


def test_direction_k1_is_fair_sign():
    d = _directions(1, 100_000, 0)
    assert set(np.unique(d).tolist()) == {-1.0, 1.0}
    assert abs(np.mean(d > 0) - 0.5) < 0.01


def test_direction_moments_k20():
    d = _directions(20, 100_000, 1)
    assert np.max(np.abs(np.linalg.norm(d, axis=1) - 1)) < 1e-12
    assert np.all(np.abs(d.mean(axis=0)) < 0.01)
    assert np.all(np.abs(d.var(axis=0) * 20 - 1) < 0.10)


def test_direction_rotation_invariance():
    assert check_sphere(5, seed=4).passed


def test_direction_resamples_zero_draw():
    class ZeroFirst(RngStream):
        calls = 0

        def gaussian(self, n):
            ZeroFirst.calls += 1
            return np.zeros(n) if ZeroFirst.calls == 1 else super().gaussian(n)

    d = sample_unit_direction(3, ZeroFirst(0))
    assert ZeroFirst.calls == 2 and abs(np.linalg.norm(d) - 1) < 1e-12


def test_radius_moments_and_ks():
    r = sample_radius(0.5, 20, RngStream(3), size=100_000)
    # Gamma(20, rate 0.5): mean k/eps = 40, variance k/eps^2 = 80
    assert abs(r.mean() / 40 - 1) < 0.02
    assert abs(r.var(ddof=1) / 80 - 1) < 0.05
    rs = np.sort(r)
    assert ks_statistic(rs, gamma_cdf(rs, GammaParams(20, 0.5))) < 0.01


def test_radius_ks_small_k():
    assert check_gamma_marginal(1, 2.0, seed=8).passed


def test_ks_statistic_detects_wrong_law():
    r = np.sort(sample_radius(0.5, 20, RngStream(3), size=100_000))
    assert ks_statistic(r, gamma_cdf(r, GammaParams(20, 0.48))) > 0.02


def test_effective_epsilon_rules():
    p = PrivacyParams(0.5, 4, "3sigma")
    assert effective_epsilon(p, np.ones(4)) == pytest.approx(0.5 / 3)
    assert effective_epsilon(p, np.full(4, 1 / 3)) == pytest.approx(0.5, rel=1e-15)
    assert effective_epsilon(p, [0.2, 0.4, 0.6, 0.8]) == pytest.approx(0.5 / 1.5)
    assert effective_epsilon(PrivacyParams(0.5, 4, "none"), [5.0, 0.1, 2.0, 3.0]) == 0.5
    with pytest.raises(DomainError):
        effective_epsilon(p, [1.0, 0.0, 1.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1.0), st.lists(st.floats(0.34, 10.0), min_size=1, max_size=30))
def test_three_sigma_strictly_reduces_budget(eps, sigma):
    p = PrivacyParams(eps, len(sigma), "3sigma")
    assert effective_epsilon(p, sigma) < eps


def test_privacy_params_validation():
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(DomainError):
            PrivacyParams(bad, 3)
    with pytest.raises(ValueError):
        PrivacyParams(0.5, 3, "global")
    with pytest.warns(UserWarning):
        PrivacyParams(2.0, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        PrivacyParams(math.inf, 3)


def test_add_noise_radius_exact():
    rng = RngStream(10)
    z = np.linspace(-1, 1, 20)
    for _ in range(200):
        zp, rec = add_noise(z, 0.3, rng)
        assert abs(np.linalg.norm(zp - z) - rec.radius) < 1e-12
        assert abs(np.linalg.norm(rec.direction) - 1) < 1e-12
        assert rec.radius >= 0


def test_add_noise_high_budget_limit():
    rng = RngStream(11)
    z = np.zeros(20)
    small = [np.linalg.norm(add_noise(z, 1e6, rng)[0] - z) < 1e-3 for _ in range(1000)]
    assert all(small)


def test_add_noise_deterministic():
    z = np.arange(5.0)
    a = [add_noise(z, 0.4, r)[0] for r in [RngStream(3, 1)] * 3]
    b = [add_noise(z, 0.4, r)[0] for r in [RngStream(3, 1)] * 3]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_batch_matches_scalar_path():
    z = np.random.default_rng(0).normal(size=(50, 6))
    eps = np.linspace(0.05, 2.0, 50)
    zp, radii, dirs = add_noise_batch(z, eps, [RngStream(4, 11).child(i) for i in range(50)])
    for i in range(50):
        single, rec = add_noise(z[i], eps[i], RngStream(4, 11).child(i))
        assert np.allclose(single, zp[i], rtol=1e-12, atol=1e-12)
        assert abs(rec.radius - radii[i]) <= 1e-12 * max(1.0, radii[i])


def test_batch_infinite_budget_is_identity():
    z = np.random.default_rng(1).normal(size=(4, 3))
    zp, radii, _ = add_noise_batch(z, np.full(4, math.inf), [RngStream(0).child(i) for i in range(4)])
    assert np.array_equal(zp, z) and not radii.any()


def _two_d_samples(center, eps, n, seed):
    rng = RngStream(seed, 5)
    r = sample_radius(eps, 2, rng.child(0), size=n)
    drng = rng.child(1)
    d = np.array([sample_unit_direction(2, drng) for _ in range(n)])
    return center + d * r[:, None]


def _expected_cell_mass(center, eps, edges, sub=8):
    # midpoint rule on an 8x8 sub-grid of each cell
    lo, hi = edges[:-1], edges[1:]
    h = (hi - lo)[0]
    offs = (np.arange(sub) + 0.5) / sub * h
    xs = (lo[:, None] + offs[None, :]).ravel()
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    lam = math.exp(dprivacy_log_pdf([0.0, 0.0], [0.0, 0.0], eps))
    dens = lam * np.exp(-eps * np.hypot(gx - center[0], gy - center[1]))
    m = len(lo)
    return dens.reshape(m, sub, m, sub).sum(axis=(1, 3)) * (h / sub) ** 2


def test_two_d_histogram_matches_density():
    n, eps = 1_000_000, 1.0
    x = _two_d_samples(np.zeros(2), eps, n, seed=21)
    edges = np.linspace(-4, 4, 33)
    counts, _, _ = np.histogram2d(x[:, 0], x[:, 1], bins=[edges, edges])
    expected = n * _expected_cell_mass(np.zeros(2), eps, edges)
    mask = expected >= 1000
    assert mask.sum() > 50
    assert np.max(np.abs(counts[mask] - expected[mask]) / expected[mask]) < 0.10


def test_empirical_ratio_respects_bound():
    eps, n = 1.0, 100_000
    a, b = np.zeros(2), np.array([0.5, 0.0])
    edges = np.linspace(-3, 3, 13)
    ca, _, _ = np.histogram2d(*_two_d_samples(a, eps, n, 31).T, bins=[edges, edges])
    cb, _, _ = np.histogram2d(*_two_d_samples(b, eps, n, 32).T, bins=[edges, edges])
    mask = (ca >= 1000) & (cb >= 1000)
    assert mask.sum() > 10
    log_ratio = np.log(ca[mask] / cb[mask])
    # 4 sigma of Poisson noise on a ratio of two counts >= 1000
    slack = 4 * np.sqrt(1 / ca[mask] + 1 / cb[mask])
    assert np.all(np.abs(log_ratio) <= eps * np.linalg.norm(a - b) + slack)
    exp_a = _expected_cell_mass(a, eps, edges)[mask]
    exp_b = _expected_cell_mass(b, eps, edges)[mask]
    assert np.all(np.abs(log_ratio - np.log(exp_a / exp_b)) <= slack)


def test_sensitivity_examples():
    assert l2_sensitivity_estimate([[1.0, 2.0], [1.0, 2.0]]) == 0.0
    assert l2_sensitivity_estimate([[0.0, 0.0], [3.0, 4.0]]) == 5.0
    with pytest.raises(DomainError):
        l2_sensitivity_estimate([[1.0, 2.0]])


def test_sensitivity_brute_force():
    c = np.random.default_rng(3).normal(size=(100, 7))
    brute = max(math.dist(p, q) for p in c for q in c)
    assert abs(l2_sensitivity_estimate(c) - brute) < 1e-12
