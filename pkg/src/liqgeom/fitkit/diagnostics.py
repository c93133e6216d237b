"""Residual diagnostics and the single-scale log-slope estimate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, SeriesTooShort, TooSparse


def log_residuals(fit, ys=None):
    """ln(y) - ln(fitted) as a masked array.

    Bins where either the data or the fitted value is not strictly positive
    are masked rather than treated as errors.
    """
    ys = np.asarray(fit.ys if ys is None else ys, dtype=float)
    fitted = np.asarray(fit.fitted, dtype=float)
    bad = ~((ys > 0) & (fitted > 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        eps = np.log(np.where(bad, 1.0, ys)) - np.log(np.where(bad, 1.0, fitted))
    return np.ma.array(eps, mask=bad)


def residual_autocorr(eps, max_lag=20):
    """Sample autocorrelation at lags ``1..max_lag``.

    Lag-k covariances are averaged over their ``n - k`` products and divided
    by the lag-0 variance; masked entries are dropped first.
    """
    e = np.ma.compressed(np.ma.asarray(eps)).astype(float)
    n = e.size
    if n < max_lag + 2:
        raise SeriesTooShort(f"need at least {max_lag + 2} residuals, got {n}")
    d = e - e.mean()
    var = float(d @ d) / n
    if var <= 0:
        raise DomainError("autocorrelation undefined for zero-variance residuals")
    return np.array([float(d[:-k] @ d[k:]) / (n - k) / var for k in range(1, max_lag + 1)])


@dataclass
class LogSlope:
    x: np.ndarray
    slope: np.ndarray
    gamma: float
    lam: float
    gaps: list


def _runs(mask):
    runs = []
    k = 0
    while k < mask.size:
        if mask[k]:
            s = k
            while k < mask.size and mask[k]:
                k += 1
            runs.append((s, k - s))
        else:
            k += 1
    return runs


def logslope_diagnostic(q, x=None):
    """Per-bin d ln q / dx and the implied (gamma, lambda).

    Central differences of ln q are taken inside maximal runs of positive
    bins.  The same central-difference operator applied to ``ln x`` is the
    regressor paired with ``gamma``, so a profile of exact form
    ``C x^gamma e^(-lambda x)`` is recovered without discretisation bias.
    Zero runs are returned as ``gaps`` (0-based start, length).
    """
    q = np.asarray(getattr(q, "q", q), dtype=float)
    x = np.arange(1, q.size + 1, dtype=float) if x is None else np.asarray(x, dtype=float)
    pos = q > 0
    xs, slopes, dlx = [], [], []
    for s, length in _runs(pos):
        if length < 3:
            continue
        lq = np.log(q[s:s + length])
        lx = np.log(x[s:s + length])
        xx = x[s:s + length]
        h = xx[2:] - xx[:-2]
        slopes.append((lq[2:] - lq[:-2]) / h)
        dlx.append((lx[2:] - lx[:-2]) / h)
        xs.append(xx[1:-1])
    if not slopes:
        raise TooSparse("no run of three consecutive nonzero bins")
    xs = np.concatenate(xs)
    slopes = np.concatenate(slopes)
    dlx = np.concatenate(dlx)
    design = np.column_stack([dlx, -np.ones_like(dlx)])
    (gamma, lam), *_ = np.linalg.lstsq(design, slopes, rcond=None)
    gaps = _runs(~pos)
    return LogSlope(xs, slopes, float(gamma), float(lam), gaps)
