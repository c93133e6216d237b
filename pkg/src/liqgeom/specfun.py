"""Special functions used by the liquidity models.

The lower incomplete gamma function is evaluated with the classical split:
a power series for ``z < a + 1`` and a Lentz continued fraction for the
upper function otherwise.  Everything is carried in log space so that large
shape parameters do not overflow; :func:`lower_incomplete_gamma` simply
exponentiates the log value and can therefore return ``inf`` for ``a``
beyond ~170.

All functions accept scalars or array-likes and broadcast like numpy ufuncs.
"""

from __future__ import annotations

import numpy as np
from scipy import special

from .errors import DomainError

MAX_ITER = 300
_EPS = np.finfo(float).eps
_TINY = 1e-300


def _as_arrays(a, z):
    a = np.asarray(a, dtype=float)
    z = np.asarray(z, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(z))):
        raise DomainError("incomplete gamma arguments must be finite")
    if np.any(a <= 0):
        raise DomainError("shape parameter a must be > 0")
    if np.any(z < 0):
        raise DomainError("argument z must be >= 0")
    return np.broadcast_arrays(a, z)


def _unwrap(out, *inputs):
    if all(np.ndim(x) == 0 for x in inputs):
        return float(out)
    return out


def log_gamma(a):
    """ln Gamma(a) for a > 0."""
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError("log_gamma requires finite a > 0")
    return _unwrap(special.gammaln(arr), a)


def _series_terms(z, a_min):
    # enough terms for the tail ratio z / (a + n) to have crushed the sum
    return int(np.ceil(max(z - a_min, 0.0) + 40.0 * np.sqrt(z + 1.0) + 60.0))


def _log_series(a, z, chunk=4096):
    # ln of sum_{n>=0} z^n / (a (a+1) ... (a+n)), all terms at once in log space
    out = np.empty_like(a)
    for lo in range(0, a.size, chunk):
        aa = a[lo:lo + chunk]
        zz = z[lo:lo + chunk]
        k = np.arange(_series_terms(float(zz.max()), float(aa.min())), dtype=float)
        log_t = k * np.log(zz)[:, None] - np.cumsum(np.log(aa[:, None] + k), axis=1)
        peak = log_t.max(axis=1)
        out[lo:lo + chunk] = peak + np.log(np.exp(log_t - peak[:, None]).sum(axis=1))
    return out


def _guard(v):
    small = np.abs(v) < _TINY
    if small.any():
        v[small] = _TINY
    return v


def _log_upper_cf(a, z):
    # ln Gamma(a, z) via modified Lentz evaluation of the continued fraction
    b = z + 1.0 - a
    c = np.full_like(z, 1.0 / _TINY)
    d = 1.0 / _guard(b.copy())
    h = d.copy()
    for i in range(1, MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = _guard(an * d + b)
        c = _guard(b + an / c)
        d = 1.0 / d
        delta = d * c
        h *= delta
        if np.abs(delta - 1.0).max() <= _EPS:
            break
    return a * np.log(z) - z + np.log(h)


def log_lower_incomplete_gamma(a, z):
    """Natural log of the lower incomplete gamma function gamma(a, z).

    Returns ``-inf`` at ``z == 0``.
    """
    A, Z = _as_arrays(a, z)
    A = np.atleast_1d(A).astype(float)
    Z = np.atleast_1d(Z).astype(float)
    out = np.full(A.shape, -np.inf)
    series = (Z > 0) & (Z < A + 1.0)
    cf = Z >= A + 1.0
    if np.any(series):
        aa, zz = A[series], Z[series]
        out[series] = aa * np.log(zz) - zz + _log_series(aa, zz)
    if np.any(cf):
        aa, zz = A[cf], Z[cf]
        lg = special.gammaln(aa)
        q = np.exp(_log_upper_cf(aa, zz) - lg)
        out[cf] = lg + np.log1p(-q)
    out = out.reshape(np.broadcast(np.asarray(a), np.asarray(z)).shape)
    return _unwrap(out, a, z)


def lower_incomplete_gamma(a, z):
    """gamma(a, z) = integral_0^z t^(a-1) e^(-t) dt.

    Overflows to inf past ~1.8e308; use the log form there.
    """
    with np.errstate(over="ignore"):
        return _unwrap(np.exp(log_lower_incomplete_gamma(a, z)), a, z)


def regularized_lower_gamma(a, z):
    """P(a, z) = gamma(a, z) / Gamma(a), in [0, 1]."""
    A, Z = _as_arrays(a, z)
    out = np.exp(np.asarray(log_lower_incomplete_gamma(A, Z)) - special.gammaln(A))
    return _unwrap(np.minimum(out, 1.0), a, z)


def dlog_lower_gamma_da(a, z):
    """Partial derivative of ln gamma(a, z) with respect to the shape ``a``.

    Uses ln gamma(a, z) = a ln z - z + ln sum_n t_n with
    t_n = z^n / (a)_{n+1}; differentiating gives ln z minus the t-weighted
    mean of the harmonic-like sums H_n = sum_{k<=n} 1/(a+k).  All terms are
    positive, so the weighted mean is computed without cancellation.
    """
    A, Z = _as_arrays(a, z)
    shape = A.shape
    A = np.atleast_1d(A).ravel()
    Z = np.atleast_1d(Z).ravel()
    if np.any(Z <= 0):
        raise DomainError("derivative requires z > 0")
    zmax = float(Z.max())
    n_terms = int(np.ceil(max(zmax - A.min(), 0.0) + 40.0 * np.sqrt(zmax + 1.0) + 60.0))
    k = np.arange(n_terms, dtype=float)
    ak = A[:, None] + k[None, :]
    log_t = k[None, :] * np.log(Z)[:, None] - np.cumsum(np.log(ak), axis=1)
    w = np.exp(log_t - log_t.max(axis=1, keepdims=True))
    harm = np.cumsum(1.0 / ak, axis=1)
    mean_h = (w * harm).sum(axis=1) / w.sum(axis=1)
    out = (np.log(Z) - mean_h).reshape(shape)
    return _unwrap(out, a, z)


def std_normal_cdf(z):
    """Standard normal CDF, Phi(z) = erfc(-z / sqrt 2) / 2."""
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("std_normal_cdf requires finite input")
    return _unwrap(0.5 * special.erfc(-arr / np.sqrt(2.0)), z)


def std_normal_pdf(z):
    arr = np.asarray(z, dtype=float)
    return _unwrap(np.exp(-0.5 * arr * arr) / np.sqrt(2.0 * np.pi), z)
