"""Latent-space noise addition satisfying epsilon-d_k privacy.

A privatized code is ``z + d * u`` with ``u`` uniform on the unit sphere
(normalized Gaussian) and ``d`` drawn from Gamma(k, eps) by inverse CDF.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .distributions import DomainError, GammaParams, gamma_inverse_cdf
from .numeric import RngStream

SCALING_MODES = ("none", "3sigma")


@dataclass(frozen=True)
class PrivacyParams:
    """Requested budget and how it is rescaled per sample.

    ``epsilon=math.inf`` is accepted as the noiseless baseline (radius 0).
    """

    epsilon: float
    k: int
    scaling: str = "3sigma"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if self.k < 1:
            raise DomainError(f"k must be >= 1, got {self.k}")
        if self.scaling not in SCALING_MODES:
            raise ValueError(f"scaling must be one of {SCALING_MODES}, got {self.scaling!r}")
        if 1.0 < self.epsilon < math.inf:
            warnings.warn(f"epsilon={self.epsilon} exceeds 1; the 3-sigma calibration assumes eps in (0, 1)",
                          stacklevel=3)


@dataclass(frozen=True)
class NoiseRecord:
    direction: np.ndarray
    radius: float
    effective_epsilon: float


def sample_unit_direction(k: int, rng: RngStream) -> np.ndarray:
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    while True:
        r = rng.gaussian(k)
        norm = float(np.linalg.norm(r))
        if norm > 0.0:
            return r / norm


def sample_radius(eps_eff: float, k: int, rng: RngStream, size: int | None = None):
    """Gamma(k, eps_eff) radius by inverse CDF of an open-interval uniform."""
    if not eps_eff > 0:
        raise DomainError(f"effective epsilon must be positive, got {eps_eff}")
    if size is None:
        p = rng.uniform()
        return 0.0 if eps_eff == math.inf else float(gamma_inverse_cdf(p, GammaParams(k, eps_eff)))
    p = rng.uniform_array(size)
    if eps_eff == math.inf:
        return np.zeros(size)
    return gamma_inverse_cdf(p, GammaParams(k, eps_eff))


def effective_epsilon(params: PrivacyParams, sigma) -> float:
    sigma = np.asarray(sigma, dtype=np.float64)
    if (sigma <= 0).any() or not np.isfinite(sigma).all():
        raise DomainError("sigma entries must be positive and finite")
    if params.scaling == "none":
        return float(params.epsilon)
    return float(params.epsilon / (3.0 * sigma.mean()))


def add_noise(z, eps_eff: float, rng: RngStream) -> tuple[np.ndarray, NoiseRecord]:
    z = np.asarray(z, dtype=np.float64).ravel()
    k = z.shape[0]
    direction = sample_unit_direction(k, rng)
    radius = sample_radius(eps_eff, k, rng)
    return z + direction * radius, NoiseRecord(direction, radius, eps_eff)


def add_noise_batch(z: np.ndarray, eps_eff: np.ndarray, rngs: list[RngStream]):
    """Privatize each row of ``z`` from its own stream.

    Draw order per stream matches :func:`add_noise` (direction, then one
    uniform), and the inverse-CDF solves are batched into one kernel call.
    Returns ``(z_prime, radii, directions)``.
    """
    n, k = z.shape
    if len(rngs) != n or len(eps_eff) != n:
        raise ValueError("need one stream and one effective epsilon per row")
    directions = np.empty((n, k))
    u = np.empty(n)
    for i, rng in enumerate(rngs):
        directions[i] = sample_unit_direction(k, rng)
        u[i] = rng.uniform()
    eps_eff = np.asarray(eps_eff, dtype=np.float64)
    radii = np.zeros(n)
    finite = np.isfinite(eps_eff)
    if finite.any():
        if (eps_eff[finite] <= 0).any():
            raise DomainError("effective epsilon must be positive")
        # Gamma(k, rate) quantile = standard quantile / rate
        radii[finite] = gamma_inverse_cdf(u[finite], GammaParams(k, 1.0)) / eps_eff[finite]
    return z + directions * radii[:, None], radii, directions


def l2_sensitivity_estimate(codes) -> float:
    """Largest pairwise Euclidean distance among latent codes."""
    c = np.asarray(codes, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] < 2:
        raise DomainError("need at least two codes")
    best = 0.0
    for i in range(c.shape[0] - 1):
        d = np.sqrt(((c[i + 1:] - c[i]) ** 2).sum(axis=1)).max()
        if d > best:
            best = float(d)
    return best
