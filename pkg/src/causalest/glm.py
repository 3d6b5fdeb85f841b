"""Least squares and logistic regression (IRLS) with weights and offsets.

Only what the estimators need: per-observation sampling weights, a
log-odds offset, fits without an intercept and HC0 sandwich standard errors.
Fractional responses in [0, 1] are accepted by the logistic fit
(quasi-binomial), which the bounded simulated outcomes rely on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, xlogy

from .errors import ConfigError, ConvergenceError, DataError, SeparationWarning, SingularityError

FAMILIES = ("linear", "logistic")

MAX_ITER = 50
DEVIANCE_TOL = 1e-10
SCORE_TOL = 1e-8
SEPARATION_BOUND = 15.0
PROB_CLAMP = 1e-12
RANK_TOL = 1e-10


def logit(p, clamp=PROB_CLAMP):
    """Log-odds of ``p`` after clamping to ``[clamp, 1 - clamp]``."""
    p = np.clip(np.asarray(p, dtype=float), clamp, 1 - clamp)
    return np.log(p) - np.log1p(-p)


@dataclass(frozen=True)
class GlmSpec:
    family: str = "linear"
    include_intercept: bool = True
    offset: np.ndarray | None = None
    sampling_weights: np.ndarray | None = None
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.offset is not None and self.family != "logistic":
            raise ConfigError("an offset is only supported for the logistic family")
        if self.sampling_weights is not None:
            sw = np.asarray(self.sampling_weights, dtype=float)
            if np.any(sw < 0) or not np.all(np.isfinite(sw)):
                raise ConfigError("sampling weights must be finite and non-negative")


@dataclass(frozen=True)
class FittedGlm:
    family: str
    include_intercept: bool
    coefficients: np.ndarray
    fitted_values: np.ndarray
    converged: bool
    iterations: int
    final_gradient_norm: float
    column_names: tuple[str, ...]
    response: np.ndarray = field(repr=False)
    sampling_weights: np.ndarray = field(repr=False)
    offset: np.ndarray | None = field(default=None, repr=False)
    deviance: float = np.nan
    trace: tuple = field(default=(), repr=False)
    separation: bool = False
    robust_covariance: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_columns(self) -> int:
        """Number of design columns the fit expects (intercept excluded)."""
        return len(self.coefficients) - int(self.include_intercept)


def _augment(design, include_intercept):
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design.reshape(-1, 1)
    if include_intercept:
        design = np.column_stack([np.ones(design.shape[0]), design])
    return design


def _names(spec, k, design_cols):
    names = list(spec.column_names) if spec.column_names else [f"x{j}" for j in range(design_cols)]
    if len(names) != design_cols:
        raise ConfigError(f"{len(names)} column names for {design_cols} design columns")
    if spec.include_intercept:
        names = ["_cons", *names]
    return tuple(names)


def _weights(spec, n):
    if spec.sampling_weights is None:
        return np.ones(n)
    sw = np.asarray(spec.sampling_weights, dtype=float)
    if sw.shape != (n,):
        raise ConfigError(f"sampling_weights has length {sw.size}, expected {n}")
    return sw


def check_rank(x, names):
    """Raise SingularityError naming the first column in the span of earlier ones."""
    n, k = x.shape
    if k == 0:
        return
    if n < k:
        raise SingularityError(f"{n} observations for {k} parameters", column=names[-1])
    r = np.linalg.qr(x, mode="r")
    col_norms = np.linalg.norm(x, axis=0)
    for j in range(k):
        if col_norms[j] == 0 or abs(r[j, j]) <= RANK_TOL * col_norms[j]:
            raise SingularityError(
                f"design is rank deficient: column {names[j]!r} is collinear "
                "with earlier columns (or empty)", column=names[j],
            )


def fit_ols(design, response, spec: GlmSpec | None = None) -> FittedGlm:
    """(Weighted) ordinary least squares.

    Parameters
    ----------
    design : array_like, shape (n, p)
        Regressors, without the intercept column.
    response : array_like, shape (n,)
    spec : GlmSpec, optional
        Must have ``family="linear"``; defaults to an intercept model with
        unit weights.

    Returns
    -------
    FittedGlm
    """
    spec = spec or GlmSpec("linear")
    if spec.family != "linear":
        raise ConfigError("fit_ols needs a linear GlmSpec")
    y = np.asarray(response, dtype=float)
    raw = np.asarray(design, dtype=float).reshape(len(y), -1)
    x = _augment(raw, spec.include_intercept)
    names = _names(spec, x.shape[1], raw.shape[1])
    sw = _weights(spec, len(y))
    root = np.sqrt(sw)
    xw = x * root[:, None]
    check_rank(xw, names)
    beta, *_ = np.linalg.lstsq(xw, y * root, rcond=None)
    fitted = x @ beta
    grad = x.T @ (sw * (y - fitted))
    return FittedGlm(
        family="linear", include_intercept=spec.include_intercept, coefficients=beta,
        fitted_values=fitted, converged=True, iterations=1,
        final_gradient_norm=float(np.linalg.norm(grad)), column_names=names,
        response=y, sampling_weights=sw, deviance=float(np.sum(sw * (y - fitted) ** 2)),
    )


def _saturated_loglik(y, sw):
    return float(np.sum(sw * (xlogy(y, y) + xlogy(1 - y, 1 - y))))


def _bernoulli_deviance(y, eta, sw, sat=None):
    # -2 log-likelihood relative to the saturated model, stable for large |eta|
    ll = float(np.sum(sw * (y * eta - np.logaddexp(0.0, eta))))
    if sat is None:
        sat = _saturated_loglik(y, sw)
    return -2.0 * (ll - sat)


def fit_logistic(design, response, spec: GlmSpec | None = None, *, max_iter=MAX_ITER,
                 deviance_tol=DEVIANCE_TOL, score_tol=SCORE_TOL) -> FittedGlm:
    """Logistic regression by iteratively reweighted least squares.

    Newton steps on the (weighted) Bernoulli log-likelihood with step halving
    whenever the deviance increases.  Convergence requires both a relative
    deviance change below ``deviance_tol`` and a score norm below
    ``score_tol``.  Responses may be fractional in [0, 1].

    Raises
    ------
    ConvergenceError
        Not converged after ``max_iter`` iterations and no sign of separation.
    SingularityError
        Rank-deficient (weighted) design.
    """
    spec = spec or GlmSpec("logistic")
    if spec.family != "logistic":
        raise ConfigError("fit_logistic needs a logistic GlmSpec")
    y = np.asarray(response, dtype=float)
    n = len(y)
    if np.any((y < 0) | (y > 1)) or np.isnan(y).any():
        raise DataError("logistic response must lie in [0, 1]")
    raw = np.asarray(design, dtype=float).reshape(n, -1)
    x = _augment(raw, spec.include_intercept)
    names = _names(spec, x.shape[1], raw.shape[1])
    sw = _weights(spec, n)
    off = np.zeros(n) if spec.offset is None else np.asarray(spec.offset, dtype=float)
    if off.shape != (n,):
        raise ConfigError(f"offset has length {off.size}, expected {n}")
    active = sw > 0
    if spec.offset is None and np.ptp(y[active]) == 0:
        raise DataError("logistic response is constant; the fit is not identified")
    check_rank(x * np.sqrt(sw)[:, None], names)

    k = x.shape[1]
    beta = np.zeros(k)
    eta = off + x @ beta
    sat = _saturated_loglik(y, sw)
    dev = _bernoulli_deviance(y, eta, sw, sat)
    trace = []
    converged = False
    dev_change = np.inf
    it = 0
    while True:
        mu = expit(eta)
        score = x.T @ (sw * (y - mu))
        gnorm = float(np.linalg.norm(score))
        trace.append((it, dev, gnorm))
        if gnorm <= score_tol and (it == 0 or dev_change <= deviance_tol):
            converged = True
            break
        if it >= max_iter or k == 0:
            break
        info = x.T @ (x * (sw * mu * (1 - mu))[:, None])
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, score, rcond=None)[0]
        t = 1.0
        while True:
            cand = beta + t * step
            eta_new = off + x @ cand
            dev_new = _bernoulli_deviance(y, eta_new, sw, sat)
            if dev_new <= dev * (1 + 1e-12) + 1e-12 or t < 2.0 ** -30:
                break
            t *= 0.5
        dev_change = abs(dev - dev_new) / (abs(dev_new) + 0.1)
        beta, eta, dev = cand, eta_new, dev_new
        it += 1

    separated = bool(k and np.max(np.abs(beta)) > SEPARATION_BOUND)
    if not converged and not separated:
        raise ConvergenceError(
            f"IRLS did not converge in {max_iter} iterations (score norm {gnorm:.3g})",
            trace=trace,
        )
    if separated:
        warnings.warn(
            f"max |coefficient| = {np.max(np.abs(beta)):.1f} exceeds {SEPARATION_BOUND:g}: "
            "possible (quasi-)complete separation / near positivity violation",
            SeparationWarning, stacklevel=2,
        )
    return FittedGlm(
        family="logistic", include_intercept=spec.include_intercept, coefficients=beta,
        fitted_values=expit(eta), converged=converged, iterations=it,
        final_gradient_norm=gnorm, column_names=names, response=y, sampling_weights=sw,
        offset=None if spec.offset is None else off, deviance=dev, trace=tuple(trace),
        separation=separated,
    )


def fit_glm(design, response, spec: GlmSpec) -> FittedGlm:
    return fit_ols(design, response, spec) if spec.family == "linear" else fit_logistic(
        design, response, spec)


def predict(fit: FittedGlm, design, offset=None) -> np.ndarray:
    """Linear predictor (linear family) or probability (logistic family) for new rows."""
    x = np.asarray(design, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1) if fit.n_columns == 1 else x.reshape(1, -1)
    if x.shape[1] != fit.n_columns:
        raise ConfigError(f"design has {x.shape[1]} columns, fit expects {fit.n_columns}")
    eta = _augment(x, fit.include_intercept) @ fit.coefficients
    if fit.family == "linear":
        if offset is not None:
            raise ConfigError("an offset is only supported for the logistic family")
        return eta
    if offset is not None:
        eta = eta + np.asarray(offset, dtype=float)
    return expit(eta)


def robust_covariance(fit: FittedGlm, design) -> np.ndarray:
    """HC0 sandwich covariance of the coefficients."""
    x = _augment(design, fit.include_intercept)
    if x.shape != (len(fit.response), len(fit.coefficients)):
        raise ConfigError("design does not match the fitted model")
    sw = fit.sampling_weights
    mu = fit.fitted_values
    resid = fit.response - mu
    v = np.ones_like(mu) if fit.family == "linear" else mu * (1 - mu)
    check_rank(x * np.sqrt(sw * v)[:, None], fit.column_names)
    bread = np.linalg.inv(x.T @ (x * (sw * v)[:, None]))
    scores = x * (sw * resid)[:, None]
    return bread @ (scores.T @ scores) @ bread


def robust_se(fit: FittedGlm, design) -> np.ndarray:
    """HC0 sandwich standard errors, one per coefficient (intercept first)."""
    return np.sqrt(np.diag(robust_covariance(fit, design)))
