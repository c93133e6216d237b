"""Multi-start Levenberg-Marquardt fitting and information criteria."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from ..errors import AllStartsFailed, DomainError, InsufficientData, MismatchedData
from .models import GAMMA_FLOOR, get_model

REFERENCE_MODEL = "integrated_gamma"


@dataclass
class FitOptions:
    max_iter: int = 500
    rtol: float = 1e-10
    gtol: float = 1e-8
    grid_scale: float = 2.0


@dataclass
class FitResult:
    model: str
    params: np.ndarray
    rss: float
    r2: float
    aic: float
    residuals: np.ndarray
    fitted: np.ndarray
    converged: bool
    n_iterations: int
    grad_norm: float = float("nan")
    n_starts_converged: int = 0
    xs: np.ndarray = field(default=None, repr=False)
    ys: np.ndarray = field(default=None, repr=False)

    @property
    def n_params(self):
        return get_model(self.model).n_params

    def predict(self, x):
        return get_model(self.model).value(self.params, x)


def aic(rss, n, k):
    """Gaussian-residual AIC, ``n ln(rss / n) + 2k``."""
    if not rss > 0 or n <= k or n <= 0:
        raise DomainError(f"aic needs rss > 0 and n > k (rss={rss}, n={n}, k={k})")
    return n * np.log(rss / n) + 2 * k


def r_squared(rss, ys):
    tss = float(np.sum((ys - np.mean(ys)) ** 2))
    return 1.0 - rss / tss


# ---------------------------------------------------------------------------
# Levenberg-Marquardt
# ---------------------------------------------------------------------------

@dataclass
class _Run:
    theta: np.ndarray
    rss: float
    grad_norm: float
    converged: bool
    n_iter: int


def _residual(model, theta, xs, ys):
    with np.errstate(all="ignore"):
        try:
            f = model.value(model.from_theta(theta), xs)
        except DomainError:
            return None
    if not np.all(np.isfinite(f)):
        return None
    return f - ys


def levenberg_marquardt(model, theta0, xs, ys, opts):
    """Minimise sum (f(theta) - y)^2 over unconstrained ``theta``.

    Marquardt-scaled damping with Nielsen's update of the damping factor.
    Converged when an accepted step changes RSS by less than ``rtol``
    relative, or the RSS gradient norm drops below ``gtol``.
    """
    theta = np.array(theta0, dtype=float)
    r = _residual(model, theta, xs, ys)
    if r is None:
        return None
    rss = float(r @ r)
    mu = None
    nu = 2.0
    grad_norm = np.inf
    for it in range(1, opts.max_iter + 1):
        with np.errstate(all="ignore"):
            jac = model.jacobian(theta, xs)
        if not np.all(np.isfinite(jac)):
            return _Run(theta, rss, np.inf, False, it)
        grad = jac.T @ r
        grad_norm = 2.0 * float(np.linalg.norm(grad))
        if grad_norm <= opts.gtol:
            return _Run(theta, rss, grad_norm, True, it)
        jtj_diag = np.einsum("ij,ij->j", jac, jac)
        scale = np.maximum(jtj_diag, 1e-12 * max(jtj_diag.max(), 1e-300))
        if mu is None:
            mu = 1e-3
        while True:
            aug = np.vstack([jac, np.diag(np.sqrt(mu * scale))])
            rhs = np.concatenate([-r, np.zeros(theta.size)])
            step = np.linalg.lstsq(aug, rhs, rcond=None)[0]
            cand = theta + step
            r_new = _residual(model, cand, xs, ys)
            with np.errstate(over="ignore", invalid="ignore"):
                rss_new = np.inf if r_new is None else float(r_new @ r_new)
            if not np.isfinite(rss_new):
                rss_new = np.inf
            predicted = -(step @ grad) * 2.0 - float(np.sum((jac @ step) ** 2))
            if rss_new < rss:
                gain = (rss - rss_new) / predicted if predicted > 0 else 1.0
                mu *= max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0) ** 3)
                nu = 2.0
                done = (rss - rss_new) <= opts.rtol * rss
                theta, r, rss = cand, r_new, rss_new
                if done:
                    return _Run(theta, rss, grad_norm, True, it)
                break
            mu *= nu
            nu *= 2.0
            if mu > 1e20:
                # no descent direction left at machine precision
                stalled = rss <= 1e-28 * max(float(ys @ ys), 1e-300)
                return _Run(theta, rss, grad_norm, stalled, it)
    return _Run(theta, rss, grad_norm, False, opts.max_iter)


# ---------------------------------------------------------------------------
# Initial guesses
# ---------------------------------------------------------------------------

def increment_moments(xs, ys):
    """Mean and variance of x under the normalised increments of ``ys``."""
    inc = np.clip(np.diff(ys, prepend=0.0), 0.0, None)
    if inc.sum() <= 0:
        return None
    w = inc / inc.sum()
    m = float(w @ xs)
    v = float(w @ (xs - m) ** 2)
    return m, max(v, 1e-12)


def _profile_moments(xs, ys):
    w = np.clip(ys, 0.0, None)
    if w.sum() <= 0:
        return None
    w = w / w.sum()
    m = float(w @ xs)
    return m, max(float(w @ (xs - m) ** 2), 1e-12)


def _amplitudes(model, params, xs, ys):
    basis = model.amplitude_basis(params, xs)
    if not np.all(np.isfinite(basis)):
        return None
    coef, _ = nnls(basis, ys)
    floor = 1e-3 * max(float(np.abs(ys).max()), 1e-300)
    coef = np.where(coef > 0, coef, floor)
    return model.with_amplitudes(params, coef)


def initial_guesses(model, xs, ys, grid_scale=2.0):
    """Moment-matched seed plus a 3x3 multiplicative perturbation grid."""
    factors = (1.0 / grid_scale, 1.0, grid_scale)
    seeds = []
    if model.name in ("integrated_gamma", "gamma_differential"):
        mom = increment_moments(xs, ys) if model.cumulative else _profile_moments(xs, ys)
        m, v = mom if mom else (float(np.mean(xs)), float(np.var(xs)))
        shape = max(m * m / v, 0.05)
        rate = max(m / v, 1e-3)
        for fa, fl in itertools.product(factors, factors):
            g = max(shape * fa - 1.0, -1.0 + 10 * GAMMA_FLOOR)
            seeds.append(np.array([1.0, g, rate * fl]))
    elif model.name == "cumulative_lognormal":
        mom = increment_moments(np.log(xs), ys)
        mu, var = mom if mom else (float(np.log(xs).mean()), 1.0)
        sigma = max(np.sqrt(var), 0.05)
        for fm, fs in itertools.product((-1.0, 0.0, 1.0), factors):
            seeds.append(np.array([1.0, mu + fm * sigma, sigma * fs]))
    elif model.name == "truncated_powerlaw":
        q = np.clip(np.diff(ys, prepend=0.0), 0.0, None)
        ok = q > 0
        alpha = 0.5
        if ok.sum() >= 2:
            alpha = -np.polyfit(np.log(xs[ok]), np.log(q[ok]), 1)[0]
        for shift in (-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 1.5, 2.0):
            seeds.append(np.array([1.0, alpha + shift * (grid_scale - 1.0), 0.0]))
    else:  # pragma: no cover - registry guards this
        raise DomainError(f"no seeding rule for {model.name}")
    out = []
    for s in seeds:
        p = _amplitudes(model, s, xs, ys)
        if p is not None:
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# Public fitting entry point
# ---------------------------------------------------------------------------

def fit(kind, xs, ys, opts=None):
    """Least-squares fit of model ``kind`` to ``(xs, ys)``.

    The target is divided by max|y| before optimisation, which makes the
    stopping rules scale-free; parameters are mapped back afterwards.  Every
    seed from :func:`initial_guesses` is run and the converged start with the
    lowest RSS is returned.
    """
    opts = opts or FitOptions()
    model = get_model(kind)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise MismatchedData("xs and ys must be 1-D arrays of equal length")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise InsufficientData("non-finite data")
    if xs.size < model.n_params + 2:
        raise InsufficientData(f"{model.name} needs at least {model.n_params + 2} points")
    if np.ptp(ys) == 0:
        raise InsufficientData("target has zero variance")
    scale = float(np.abs(ys).max())
    yn = ys / scale

    best = None
    n_ok = 0
    total_iter = 0
    for p0 in initial_guesses(model, xs, yn, opts.grid_scale):
        run = levenberg_marquardt(model, model.to_theta(p0), xs, yn, opts)
        if run is None:
            continue
        total_iter += run.n_iter
        if not run.converged:
            continue
        n_ok += 1
        if best is None or run.rss < best.rss:
            best = run
    if best is None:
        raise AllStartsFailed(f"{model.name}: no start converged")

    params = model.rescale(model.from_theta(best.theta), scale)
    fitted = model.value(params, xs)
    resid = ys - fitted
    rss = float(resid @ resid)
    n, k = xs.size, model.n_params
    return FitResult(
        model=model.name,
        params=params,
        rss=rss,
        r2=r_squared(rss, ys),
        aic=aic(rss, n, k) if rss > 0 else -np.inf,
        residuals=resid,
        fitted=fitted,
        converged=True,
        n_iterations=total_iter,
        grad_norm=best.grad_norm,
        n_starts_converged=n_ok,
        xs=xs,
        ys=ys,
    )


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

@dataclass
class ComparisonRow:
    model: str
    r2: float
    aic: float
    delta_aic: float


@dataclass
class Comparison:
    rows: list
    preferred: str

    def row(self, model):
        for r in self.rows:
            if r.model == model:
                return r
        return None

    def delta_aic(self, model="cumulative_lognormal"):
        r = self.row(model)
        return None if r is None else r.delta_aic


def compare(fits, reference=REFERENCE_MODEL):
    """Tabulate R^2, AIC and dAIC = AIC(reference) - AIC(model).

    Negative dAIC means the reference (integrated-gamma) model is preferred
    over that row's model.  dAIC is ``None`` when the reference is absent.
    """
    fits = list(fits)
    if not fits:
        raise MismatchedData("nothing to compare")
    base = fits[0]
    for f in fits[1:]:
        if f.xs is None or base.xs is None or not (
            np.array_equal(f.xs, base.xs) and np.array_equal(f.ys, base.ys)
        ):
            raise MismatchedData("fits were made on different data")
    ref = next((f for f in fits if f.model == reference), None)
    rows = []
    for f in fits:
        d = None if ref is None else float(ref.aic - f.aic)
        rows.append(ComparisonRow(f.model, f.r2, f.aic, d))
    preferred = min(fits, key=lambda f: f.aic).model
    return Comparison(rows, preferred)
