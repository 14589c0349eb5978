"""Gamma-family special functions and the epsilon-d_k privacy density.

The mechanism's density in R^k is ``lambda(eps, k) * exp(-eps * ||x - x0||)``.
Integrating out the direction leaves a Gamma(shape=k, rate=eps) law for the
radius, so sampling reduces to inverting the regularized incomplete gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels


class DomainError(ValueError):
    """Argument outside a function's mathematical domain."""


@dataclass(frozen=True)
class GammaParams:
    shape: int  # latent dimension k
    rate: float  # effective epsilon

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise DomainError(f"shape must be a positive integer, got {self.shape}")
        if not self.rate > 0:
            raise DomainError(f"rate must be positive, got {self.rate}")


def log_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return _kernels.log_gamma(float(x))


def gamma_cdf(r, params: GammaParams):
    """P(k, eps * r); accepts a scalar or an array of radii."""
    if np.ndim(r) == 0:
        if r < 0:
            raise DomainError(f"radius must be nonnegative, got {r}")
        return _kernels.gamma_p(float(params.shape), params.rate * float(r))
    r = np.asarray(r, dtype=np.float64)
    if (r < 0).any():
        raise DomainError("radius must be nonnegative")
    return _kernels.gamma_p_array(float(params.shape), (params.rate * r).ravel()).reshape(r.shape)


def gamma_inverse_cdf(p, params: GammaParams):
    """Radius whose Gamma(k, eps) CDF equals ``p``; scalar or array."""
    if np.ndim(p) == 0:
        if not 0.0 < p < 1.0:
            raise DomainError(f"probability must lie in (0, 1), got {p}")
        return _kernels.gamma_p_inv(float(params.shape), float(p)) / params.rate
    p = np.asarray(p, dtype=np.float64)
    if ((p <= 0.0) | (p >= 1.0)).any():
        raise DomainError("probabilities must lie in (0, 1)")
    return _kernels.gamma_p_inv_array(float(params.shape), p.ravel()).reshape(p.shape) / params.rate


def gamma_pdf(r, params: GammaParams):
    k, eps = params.shape, params.rate
    r = np.asarray(r, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logp = k * math.log(eps) + (k - 1) * np.log(r) - eps * r - log_gamma(k)
    return np.exp(logp)


def log_lambda_coefficient(eps: float, k: int) -> float:
    """Log of the normalizer: ln(1/2) + k ln(eps/sqrt(pi)) + lnG(k/2) - lnG(k)."""
    if not eps > 0:
        raise DomainError(f"epsilon must be positive, got {eps}")
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    return (
        -math.log(2.0)
        + k * (math.log(eps) - 0.5 * math.log(math.pi))
        + log_gamma(k / 2.0)
        - log_gamma(float(k))
    )


def lambda_coefficient(eps: float, k: int) -> float:
    """Normalizer of the density; raises OverflowError when only the log form is representable."""
    val = log_lambda_coefficient(eps, k)
    if val > 709.0 or val < -745.0:
        raise OverflowError(f"lambda({eps}, {k}) = exp({val:.3f}) is not representable; use log_lambda_coefficient")
    return math.exp(val)


def dprivacy_log_pdf(x0, x, eps: float) -> float:
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    x = np.asarray(x, dtype=np.float64).ravel()
    if x0.shape != x.shape:
        raise DomainError(f"dimension mismatch: {x0.shape[0]} vs {x.shape[0]}")
    return log_lambda_coefficient(eps, x.shape[0]) - eps * float(np.linalg.norm(x - x0))


def sphere_area(k: int) -> float:
    """Surface area of the unit (k-1)-sphere in R^k."""
    return 2.0 * math.pi ** (k / 2.0) / math.exp(log_gamma(k / 2.0))
