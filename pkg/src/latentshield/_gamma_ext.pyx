# cython: language_level=3
"""Compiled special-function kernels.

Mirrors ``_gamma_py`` exactly (same algorithms, same stopping rules); the
pure-Python module is the reference the benchmark and the backend-parity
tests compare against.
"""
import numpy as np

from libc.math cimport exp, log, sqrt, fabs, INFINITY

cdef double _EPS = 2.220446049250313e-16
cdef double _FPMIN = 1e-300
cdef int _MAXIT = 1000

# Stirling-series coefficients B_2n / (2n (2n - 1)), n = 1..8.
cdef double[8] _STIRLING = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
]
cdef double _HALF_LOG_2PI = 0.91893853320467274178


cdef double c_log_gamma(double x) noexcept nogil:
    cdef double shift = 0.0
    cdef double prod = 1.0
    cdef double inv, inv2, series, term
    cdef int i
    while x < 10.0:
        prod *= x
        x += 1.0
        if prod > 1e280:
            shift += log(prod)
            prod = 1.0
    shift += log(prod)
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    term = inv
    for i in range(8):
        series += _STIRLING[i] * term
        term *= inv2
    return (x - 0.5) * log(x) - x + _HALF_LOG_2PI + series - shift


cdef double _log_prefactor(double a, double x) noexcept nogil:
    return -x + a * log(x) - c_log_gamma(a)


cdef double _series_p(double a, double x) noexcept nogil:
    cdef double ap = a
    cdef double term = 1.0 / a
    cdef double total = term
    cdef int n
    for n in range(_MAXIT):
        ap += 1.0
        term *= x / ap
        total += term
        if fabs(term) < fabs(total) * _EPS:
            break
    return total * exp(_log_prefactor(a, x))


cdef double _cf_q(double a, double x) noexcept nogil:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    cdef double b = x + 1.0 - a
    cdef double c = 1.0 / _FPMIN
    cdef double d = 1.0 / b
    cdef double h = d
    cdef double an, delta
    cdef int i
    for i in range(1, _MAXIT):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if fabs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if fabs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < _EPS:
            break
    return exp(_log_prefactor(a, x)) * h


cdef double c_gamma_p(double a, double x) noexcept nogil:
    if x <= 0.0:
        return 0.0
    if x == INFINITY:
        return 1.0
    if x < a + 1.0:
        return _series_p(a, x)
    return 1.0 - _cf_q(a, x)


cdef double _normal_quantile(double p) noexcept nogil:
    # Acklam's rational approximation; only used to seed the root finder.
    cdef double q, r
    if p < 0.02425:
        q = sqrt(-2.0 * log(p))
        return (((((-7.784894002430293e-03 * q - 3.223964580411365e-01) * q - 2.400758277161838e+00) * q
                  - 2.549732539343734e+00) * q + 4.374664141464968e+00) * q + 2.938163982698783e+00) / \
               ((((7.784695709041462e-03 * q + 3.224671290700398e-01) * q + 2.445134137142996e+00) * q
                 + 3.754408661907416e+00) * q + 1.0)
    if p > 1.0 - 0.02425:
        q = sqrt(-2.0 * log(1.0 - p))
        return -(((((-7.784894002430293e-03 * q - 3.223964580411365e-01) * q - 2.400758277161838e+00) * q
                   - 2.549732539343734e+00) * q + 4.374664141464968e+00) * q + 2.938163982698783e+00) / \
                ((((7.784695709041462e-03 * q + 3.224671290700398e-01) * q + 2.445134137142996e+00) * q
                  + 3.754408661907416e+00) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((-3.969683028665376e+01 * r + 2.209460984245205e+02) * r - 2.759285104469687e+02) * r
              + 1.383577518672690e+02) * r - 3.066479806614716e+01) * r + 2.506628277459239e+00) * q / \
           (((((-5.447609879822406e+01 * r + 1.615858368580409e+02) * r - 1.556989798598866e+02) * r
              + 6.680131188771972e+01) * r - 1.328068155288572e+01) * r + 1.0)


cdef double _initial_guess(double a, double p) noexcept nogil:
    cdef double t, z
    z = _normal_quantile(p)
    t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * sqrt(a))
    if t > 0.0 and a > 0.5:
        return a * t * t * t
    # small-x asymptote P(a, x) ~ x^a / Gamma(a + 1)
    return exp((log(p) + c_log_gamma(a + 1.0)) / a)


cdef double c_gamma_p_inv(double a, double p) noexcept nogil:
    cdef double lo = 0.0
    cdef double hi, x, f, dens, x_new, lg
    cdef int it
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return INFINITY
    x = _initial_guess(a, p)
    if not (x > 0.0):
        x = a
    hi = x * 2.0 + 1.0
    while c_gamma_p(a, hi) < p:
        lo = hi
        hi *= 2.0
    if x >= hi or x <= lo:
        x = 0.5 * (lo + hi)
    lg = c_log_gamma(a)
    for it in range(200):
        f = c_gamma_p(a, x) - p
        if f == 0.0:
            break
        if f < 0.0:
            lo = x
        else:
            hi = x
        dens = exp((a - 1.0) * log(x) - x - lg)
        if dens > 0.0:
            x_new = x - f / dens
        else:
            x_new = -1.0
        if x_new <= lo or x_new >= hi:
            x_new = 0.5 * (lo + hi)
        if fabs(x_new - x) <= 4.0 * _EPS * x_new:
            x = x_new
            break
        x = x_new
    return x


def log_gamma(double x):
    return c_log_gamma(x)


def gamma_p(double a, double x):
    return c_gamma_p(a, x)


def gamma_p_inv(double a, double p):
    return c_gamma_p_inv(a, p)


def gamma_p_array(double a, x):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    out = np.empty(xv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            ov[i] = c_gamma_p(a, xv[i])
    return out


def gamma_p_inv_array(double a, p):
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64).ravel()
    out = np.empty(pv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(pv.shape[0]):
            ov[i] = c_gamma_p_inv(a, pv[i])
    return out
