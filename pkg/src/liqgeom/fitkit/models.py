"""Liquidity models and their Jacobians in an unconstrained parametrisation.

Natural parameters (what callers see):

================================  ======================
integrated_gamma                  (C, gamma, lambda)
gamma_differential                (C, gamma, lambda)
cumulative_lognormal              (C, mu, sigma)
truncated_powerlaw                (C, alpha, offset)
================================  ======================

The optimiser works on ``theta``: logs of the positive parameters and a
shifted log for ``gamma`` (``gamma = -1 + GAMMA_FLOOR + exp(theta)``).
"""

from __future__ import annotations

import numpy as np

from .. import specfun
from ..errors import DomainError, ValidationError

GAMMA_FLOOR = 1e-6
_LOG_MAX = 700.0


def _exp(t):
    return np.exp(np.clip(t, -_LOG_MAX, _LOG_MAX))


class Model:
    name = ""
    param_names = ()
    cumulative = True

    @property
    def n_params(self):
        return len(self.param_names)

    def check(self, params):
        raise NotImplementedError

    def to_theta(self, params):
        raise NotImplementedError

    def from_theta(self, theta):
        raise NotImplementedError

    def value(self, params, x):
        raise NotImplementedError

    def jacobian(self, theta, x):
        """d model / d theta, shape (len(x), n_params)."""
        raise NotImplementedError

    def rescale(self, params, s):
        """Parameters of the model multiplied by ``s``."""
        p = np.array(params, dtype=float)
        p[0] *= s
        return p

    def amplitude_basis(self, params, x):
        """Columns that enter linearly (used for least-squares seeding)."""
        p = np.array(params, dtype=float)
        p[0] = 1.0
        return self.value(p, x)[:, None]

    def with_amplitudes(self, params, coef):
        p = np.array(params, dtype=float)
        p[0] = coef[0]
        return p


class _GammaFamily(Model):
    param_names = ("C", "gamma", "lambda")

    def check(self, params):
        c, g, lam = params
        if not (np.isfinite(c) and np.isfinite(g) and np.isfinite(lam)):
            raise DomainError(f"{self.name}: non-finite parameters {params}")
        if c <= 0 or lam <= 0 or g <= -1.0:
            raise DomainError(f"{self.name}: need C > 0, lambda > 0, gamma > -1; got {params}")

    def to_theta(self, params):
        c, g, lam = params
        return np.array([np.log(c), np.log(g + 1.0 - GAMMA_FLOOR), np.log(lam)])

    def from_theta(self, theta):
        return np.array([_exp(theta[0]), -1.0 + GAMMA_FLOOR + _exp(theta[1]), _exp(theta[2])])


class IntegratedGamma(_GammaFamily):
    """S(x) = C / lambda^(gamma+1) * lower_gamma(gamma+1, lambda x)."""

    name = "integrated_gamma"

    def _log_value(self, params, x):
        c, g, lam = params
        a = g + 1.0
        return np.log(c) - a * np.log(lam) + specfun.log_lower_incomplete_gamma(a, lam * x)

    def value(self, params, x):
        self.check(params)
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("integrated_gamma is defined for x > 0")
        return np.exp(self._log_value(params, x))

    def jacobian(self, theta, x):
        params = self.from_theta(theta)
        c, g, lam = params
        a = g + 1.0
        x = np.asarray(x, dtype=float)
        z = lam * x
        log_lg = specfun.log_lower_incomplete_gamma(a, z)
        s = np.exp(np.log(c) - a * np.log(lam) + log_lg)
        # d ln S / d a = d ln lower_gamma / d a - ln lambda
        dlog_a = specfun.dlog_lower_gamma_da(a, z) - np.log(lam)
        # lambda dS/dlambda = -S (a - z^a e^-z / lower_gamma(a, z))
        ratio = np.exp(a * np.log(z) - z - log_lg)
        jac = np.empty((x.size, 3))
        jac[:, 0] = s
        jac[:, 1] = s * dlog_a * (a - GAMMA_FLOOR)
        jac[:, 2] = -s * (a - ratio)
        return jac


class GammaDifferential(_GammaFamily):
    """Q(x) = C x^gamma exp(-lambda x)."""

    name = "gamma_differential"
    cumulative = False

    def value(self, params, x):
        self.check(params)
        c, g, lam = params
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("gamma_differential is defined for x > 0")
        return np.exp(np.log(c) + g * np.log(x) - lam * x)

    def jacobian(self, theta, x):
        c, g, lam = self.from_theta(theta)
        x = np.asarray(x, dtype=float)
        q = np.exp(np.log(c) + g * np.log(x) - lam * x)
        jac = np.empty((x.size, 3))
        jac[:, 0] = q
        jac[:, 1] = q * np.log(x) * (g + 1.0 - GAMMA_FLOOR)
        jac[:, 2] = -q * lam * x
        return jac


class CumulativeLognormal(Model):
    """S(x) = C Phi((ln x - mu) / sigma)."""

    name = "cumulative_lognormal"
    param_names = ("C", "mu", "sigma")

    def check(self, params):
        c, mu, sigma = params
        if not np.all(np.isfinite(params)):
            raise DomainError(f"{self.name}: non-finite parameters {params}")
        if c <= 0 or sigma <= 0:
            raise DomainError(f"{self.name}: need C > 0, sigma > 0; got {params}")

    def to_theta(self, params):
        c, mu, sigma = params
        return np.array([np.log(c), mu, np.log(sigma)])

    def from_theta(self, theta):
        return np.array([_exp(theta[0]), theta[1], _exp(theta[2])])

    def value(self, params, x):
        self.check(params)
        c, mu, sigma = params
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("cumulative_lognormal is defined for x > 0")
        return c * specfun.std_normal_cdf((np.log(x) - mu) / sigma)

    def jacobian(self, theta, x):
        c, mu, sigma = self.from_theta(theta)
        w = (np.log(np.asarray(x, dtype=float)) - mu) / sigma
        phi = specfun.std_normal_pdf(w)
        jac = np.empty((w.size, 3))
        jac[:, 0] = c * specfun.std_normal_cdf(w)
        jac[:, 1] = -c * phi / sigma
        jac[:, 2] = -c * phi * w
        return jac


class TruncatedPowerlaw(Model):
    """S(x) = offset + C sum_{u=1..x} u^(-alpha), x on the integer tick grid."""

    name = "truncated_powerlaw"
    param_names = ("C", "alpha", "offset")

    def check(self, params):
        c, alpha, off = params
        if not np.all(np.isfinite(params)):
            raise DomainError(f"{self.name}: non-finite parameters {params}")
        if c <= 0 or off < 0:
            raise DomainError(f"{self.name}: need C > 0, offset >= 0; got {params}")

    def to_theta(self, params):
        c, alpha, off = params
        return np.array([np.log(c), alpha, np.log(max(off, 1e-300))])

    def from_theta(self, theta):
        return np.array([_exp(theta[0]), theta[1], _exp(theta[2])])

    @staticmethod
    def _grid(x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 1):
            raise DomainError("truncated_powerlaw is defined on ticks x >= 1")
        xi = np.floor(x).astype(np.int64)
        u = np.arange(1, xi.max() + 1, dtype=float)
        return xi, u

    def _sums(self, alpha, x):
        xi, u = self._grid(x)
        terms = np.exp(-alpha * np.log(u))
        partial = np.cumsum(terms)
        dpartial = np.cumsum(-terms * np.log(u))
        return partial[xi - 1], dpartial[xi - 1]

    def value(self, params, x):
        self.check(params)
        c, alpha, off = params
        h, _ = self._sums(alpha, x)
        return off + c * h

    def jacobian(self, theta, x):
        c, alpha, off = self.from_theta(theta)
        h, dh = self._sums(alpha, x)
        jac = np.empty((h.size, 3))
        jac[:, 0] = c * h
        jac[:, 1] = c * dh
        jac[:, 2] = off
        return jac

    def rescale(self, params, s):
        p = np.array(params, dtype=float)
        p[0] *= s
        p[2] *= s
        return p

    def amplitude_basis(self, params, x):
        h, _ = self._sums(params[1], x)
        return np.column_stack([h, np.ones_like(h)])

    def with_amplitudes(self, params, coef):
        p = np.array(params, dtype=float)
        p[0], p[2] = coef
        return p


MODELS = {
    m.name: m
    for m in (IntegratedGamma(), GammaDifferential(), CumulativeLognormal(), TruncatedPowerlaw())
}
CUMULATIVE_MODELS = ("integrated_gamma", "cumulative_lognormal", "truncated_powerlaw")


def get_model(kind):
    if isinstance(kind, Model):
        return kind
    try:
        return MODELS[kind]
    except KeyError:
        raise ValidationError(f"unknown model {kind!r}; expected one of {sorted(MODELS)}") from None


def model_eval(kind, params, x):
    """Evaluate model ``kind`` with natural parameters ``params`` at ``x``."""
    model = get_model(kind)
    params = np.asarray(params, dtype=float)
    if params.shape != (model.n_params,):
        raise DomainError(f"{model.name} takes {model.n_params} parameters")
    out = model.value(params, x)
    return float(out) if np.ndim(x) == 0 else out
