"""Pure-Python special-function kernels.

Scalar routines follow ``_gamma_ext.pyx`` line for line. The ``*_array``
routines are numpy-vectorized versions of the same iterations so that the
fallback stays usable at 10^5-sample scale.
"""

import math

import numpy as np

_EPS = 2.220446049250313e-16
_FPMIN = 1e-300
_MAXIT = 1000

_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_HALF_LOG_2PI = 0.91893853320467274178

# Acklam's inverse-normal coefficients (seed only).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def log_gamma(x):
    shift = 0.0
    prod = 1.0
    while x < 10.0:
        prod *= x
        x += 1.0
        if prod > 1e280:
            shift += math.log(prod)
            prod = 1.0
    shift += math.log(prod)
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    term = inv
    for coef in _STIRLING:
        series += coef * term
        term *= inv2
    return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + series - shift


def _log_prefactor(a, x):
    return -x + a * math.log(x) - log_gamma(a)


def _series_p(a, x):
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_MAXIT):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(_log_prefactor(a, x))


def _cf_q(a, x):
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(_log_prefactor(a, x)) * h


def gamma_p(a, x):
    if x <= 0.0:
        return 0.0
    if x == math.inf:
        return 1.0
    if x < a + 1.0:
        return _series_p(a, x)
    return 1.0 - _cf_q(a, x)


def _normal_quantile(p):
    if p < _P_LOW or p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(p if p < _P_LOW else 1.0 - p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den if p < _P_LOW else -num / den
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def _initial_guess(a, p):
    z = _normal_quantile(p)
    t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * math.sqrt(a))
    if t > 0.0 and a > 0.5:
        return a * t * t * t
    return math.exp((math.log(p) + log_gamma(a + 1.0)) / a)


def gamma_p_inv(a, p):
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return math.inf
    lo = 0.0
    x = _initial_guess(a, p)
    if not x > 0.0:
        x = a
    hi = x * 2.0 + 1.0
    while gamma_p(a, hi) < p:
        lo = hi
        hi *= 2.0
    if x >= hi or x <= lo:
        x = 0.5 * (lo + hi)
    lg = log_gamma(a)
    for _ in range(200):
        f = gamma_p(a, x) - p
        if f == 0.0:
            break
        if f < 0.0:
            lo = x
        else:
            hi = x
        dens = math.exp((a - 1.0) * math.log(x) - x - lg)
        x_new = x - f / dens if dens > 0.0 else -1.0
        if x_new <= lo or x_new >= hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4.0 * _EPS * x_new:
            x = x_new
            break
        x = x_new
    return x


# ---------------------------------------------------------------------------
# vectorized batch routines


def _gamma_p_vec(a, x, lg):
    out = np.zeros_like(x)
    pos = x > 0.0
    out[np.isinf(x)] = 1.0
    finite = pos & np.isfinite(x)
    ser = finite & (x < a + 1.0)
    cf = finite & ~ser

    if ser.any():
        xs = x[ser]
        ap = np.full_like(xs, a)
        term = np.full_like(xs, 1.0 / a)
        total = term.copy()
        active = np.ones(xs.shape, dtype=bool)
        for _ in range(_MAXIT):
            ap += 1.0
            term = np.where(active, term * xs / ap, 0.0)
            total += term
            active &= ~(np.abs(term) < np.abs(total) * _EPS)
            if not active.any():
                break
        out[ser] = total * np.exp(-xs + a * np.log(xs) - lg)

    if cf.any():
        xc = x[cf]
        b = xc + 1.0 - a
        c = np.full_like(xc, 1.0 / _FPMIN)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(xc.shape, dtype=bool)
        for i in range(1, _MAXIT):
            an = -i * (i - a)
            b = b + 2.0
            d = an * d + b
            d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
            c = b + an / c
            c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
            d = 1.0 / d
            delta = np.where(active, d * c, 1.0)
            h *= delta
            active &= ~(np.abs(delta - 1.0) < _EPS)
            if not active.any():
                break
        out[cf] = 1.0 - np.exp(-xc + a * np.log(xc) - lg) * h
    return out


def gamma_p_array(a, x):
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    return _gamma_p_vec(a, x, log_gamma(a))


def gamma_p_inv_array(a, p):
    p = np.ascontiguousarray(p, dtype=np.float64).ravel()
    out = np.zeros_like(p)
    out[p >= 1.0] = math.inf
    todo = (p > 0.0) & (p < 1.0)
    if not todo.any():
        return out
    pv = p[todo]
    lg = log_gamma(a)

    x = np.array([_initial_guess(a, q) for q in pv]) if pv.size < 64 else _initial_guess_vec(a, pv)
    x = np.where(x > 0.0, x, a)
    lo = np.zeros_like(pv)
    hi = x * 2.0 + 1.0
    short = _gamma_p_vec(a, hi, lg) < pv
    while short.any():
        lo = np.where(short, hi, lo)
        hi = np.where(short, hi * 2.0, hi)
        short = _gamma_p_vec(a, hi, lg) < pv
    x = np.where((x >= hi) | (x <= lo), 0.5 * (lo + hi), x)

    active = np.ones(pv.shape, dtype=bool)
    for _ in range(200):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xi = x[idx]
        f = _gamma_p_vec(a, xi, lg) - pv[idx]
        done = f == 0.0
        lo[idx] = np.where(f < 0.0, xi, lo[idx])
        hi[idx] = np.where(f > 0.0, xi, hi[idx])
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            dens = np.exp((a - 1.0) * np.log(xi) - xi - lg)
            x_new = np.where(dens > 0.0, xi - f / dens, -1.0)
        out_of = (x_new <= lo[idx]) | (x_new >= hi[idx])
        x_new = np.where(out_of, 0.5 * (lo[idx] + hi[idx]), x_new)
        conv = np.abs(x_new - xi) <= 4.0 * _EPS * x_new
        x[idx] = np.where(done, xi, x_new)
        active[idx[done | conv]] = False
    out[todo] = x
    return out


def _initial_guess_vec(a, p):
    z = np.empty_like(p)
    low = p < _P_LOW
    high = p > 1.0 - _P_LOW
    mid = ~(low | high)
    for mask, tail in ((low, p), (high, 1.0 - p)):
        if mask.any():
            q = np.sqrt(-2.0 * np.log(tail[mask]))
            num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
            den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
            z[mask] = num / den if mask is low else -num / den
    if mid.any():
        q = p[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        z[mid] = num / den
    t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * math.sqrt(a))
    if a > 0.5:
        wh = a * t**3
        small = np.exp((np.log(p) + log_gamma(a + 1.0)) / a)
        return np.where(t > 0.0, wh, small)
    return np.exp((np.log(p) + log_gamma(a + 1.0)) / a)
