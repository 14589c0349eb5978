"""Standalone statistical checks of the noise mechanism.

Each check returns a :class:`Check`; thresholds are fixed here, not tuned
per run.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .distributions import GammaParams, dprivacy_log_pdf, gamma_cdf, lambda_coefficient, log_lambda_coefficient
from .mechanism import sample_radius, sample_unit_direction
from .numeric import RngStream

NORMALIZATION_GRID_K = (1, 2, 3, 5, 10, 20)
NORMALIZATION_GRID_EPS = (0.1, 0.5, 1.0)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def radial_mass(eps: float, k: int) -> float:
    """Quadrature of the density over R^k in spherical shells, r in [0, 200/eps]."""
    log_area = math.log(2.0) + (k / 2.0) * math.log(math.pi) - gammaln(k / 2.0)
    log_lam = log_lambda_coefficient(eps, k)

    def shell(r):
        if r == 0.0:
            return math.exp(log_lam + log_area) if k == 1 else 0.0
        return math.exp(log_lam + log_area + (k - 1) * math.log(r) - eps * r)

    mode = (k - 1) / eps
    val, _ = integrate.quad(shell, 0.0, 200.0 / eps, points=[mode] if mode > 0 else None,
                            limit=500, epsabs=1e-13, epsrel=1e-12)
    return val


def ks_statistic(samples: np.ndarray, cdf_values_sorted: np.ndarray) -> float:
    n = samples.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf_values_sorted), np.max(cdf_values_sorted - (i - 1) / n)))


def check_normalization(ks=NORMALIZATION_GRID_K, epss=NORMALIZATION_GRID_EPS, tol=1e-6) -> Check:
    t = time.perf_counter()
    worst = 0.0
    for k in ks:
        for eps in epss:
            worst = max(worst, abs(radial_mass(eps, k) - 1.0))
    lam_err = max(abs(lambda_coefficient(eps, 1) - eps / 2.0) for eps in epss)
    ok = worst <= tol and lam_err <= 1e-12
    return Check("lambda normalization", ok,
                 f"max |mass-1| = {worst:.2e} over {len(ks) * len(epss)} (k, eps); "
                 f"max |lambda(eps,1) - eps/2| = {lam_err:.1e}", time.perf_counter() - t)


def check_gamma_marginal(k: int, eps: float, seed: int, n: int = 100_000) -> Check:
    t = time.perf_counter()
    r = sample_radius(eps, k, RngStream(seed, 901), size=n)
    mean_err = abs(r.mean() / (k / eps) - 1.0)
    var_err = abs(r.var(ddof=1) / (k / eps**2) - 1.0)
    rs = np.sort(r)
    ks = ks_statistic(rs, gamma_cdf(rs, GammaParams(k, eps)))
    ok = mean_err < 0.02 and var_err < 0.05 and ks < 0.01
    return Check(f"gamma radius (k={k}, eps={eps:.6g})", ok,
                 f"mean {r.mean():.3f} (rel err {mean_err:.4f}), var {r.var(ddof=1):.2f} "
                 f"(rel err {var_err:.4f}), KS {ks:.5f}", time.perf_counter() - t)


def check_sphere(k: int, seed: int, n: int = 100_000) -> Check:
    t = time.perf_counter()
    rng = RngStream(seed, 902)
    d = np.array([sample_unit_direction(k, rng) for _ in range(n)])
    norm_err = float(np.max(np.abs(np.linalg.norm(d, axis=1) - 1.0)))
    means = d.mean(axis=0)
    variances = d.var(axis=0)
    # a fixed random rotation must leave the coordinate statistics unchanged
    q, _ = np.linalg.qr(RngStream(seed, 903).gaussian(k * k).reshape(k, k))
    rot = d @ q.T
    ok = (norm_err <= 1e-12
          and np.all(np.abs(means) < 0.01)
          and np.all(np.abs(variances * k - 1.0) < 0.10)
          and np.all(np.abs(rot.mean(axis=0)) < 0.01)
          and np.all(np.abs(rot.var(axis=0) * k - 1.0) < 0.10))
    if k == 1:
        frac = float(np.mean(d[:, 0] > 0))
        ok = ok and abs(frac - 0.5) < 0.01
    return Check(f"sphere direction (k={k})", bool(ok),
                 f"max |m| = {np.abs(means).max():.4f}, var*k in [{(variances * k).min():.3f}, "
                 f"{(variances * k).max():.3f}], norm err {norm_err:.1e}", time.perf_counter() - t)


def ratio_triples(k: int, n: int, rng: RngStream):
    """Random (x0, x0', x) triples; every other x sits on the ray from x0' past x0, where the bound is tight."""
    g = rng.gaussian(3 * n * k).reshape(3, n, k) * 3.0
    t = rng.uniform_array(n)[:, None] * 2.0
    tight = np.arange(n) % 2 == 1
    g[2][tight] = (g[0] + t * (g[0] - g[1]))[tight]
    return g[0], g[1], g[2]


def check_ratio_bound(k: int, eps: float, seed: int, n: int = 10_000) -> Check:
    t = time.perf_counter()
    g = ratio_triples(k, n, RngStream(seed, 904))
    worst = -math.inf
    for x0, x1, x in zip(*g):
        gap = dprivacy_log_pdf(x0, x, eps) - dprivacy_log_pdf(x1, x, eps) - eps * float(np.linalg.norm(x0 - x1))
        worst = max(worst, gap)
    return Check(f"d-privacy ratio (k={k}, eps={eps:.6g})", worst <= 1e-12,
                 f"max [log-ratio - eps*d] = {worst:.2e} over {n} triples", time.perf_counter() - t)


def run_all(k: int = 20, epsilon: float = 0.5, seed: int = 0) -> list[Check]:
    eps_eff = epsilon / 3.0  # 3-sigma scaling at sigma-bar = 1
    return [
        check_normalization(),
        check_gamma_marginal(k, eps_eff, seed),
        check_sphere(k, seed),
        check_ratio_bound(k, epsilon, seed),
    ]
