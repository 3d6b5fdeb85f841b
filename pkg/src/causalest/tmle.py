"""Targeted maximum likelihood estimation of the ATE, risk ratio and odds ratio.

The estimator follows the classic by-hand recipe: an initial logistic
outcome model, a logistic treatment model, a two-parameter fluctuation on
the clever covariates ``H1 = A/g`` and ``H0 = (1-A)/(1-g)`` with the initial
log-odds as offset, the update of both counterfactual predictions, and
influence-curve (IC) based Wald inference.

Initial models come either from a fixed design or from a small
cross-validated discrete selector over GLM designs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from . import design as _design
from .dataset import ObservationTable
from .errors import (CausalEstError, ConfigError, ConvergenceError, PositivityError,
                     SeparationWarning)
from .glm import PROB_CLAMP, GlmSpec, fit_logistic, logit, predict
from .results import EffectEstimate

TARGETS = ("outcome", "propensity")


# learners -----------------------------------------------------------------

@dataclass(frozen=True)
class FittedLearner:
    name: str
    design: _design.Design
    fit: object = field(repr=False)

    def predict(self, x) -> np.ndarray:
        return predict(self.fit, self.design.transform(x))


@dataclass(frozen=True)
class GlmLearner:
    """Logistic GLM on a fixed design (``"main"``, ``"interactions"`` or ``"saturated"``)."""

    name: str = "glm"
    terms: str = "main"

    def fit(self, x, y, names) -> FittedLearner:
        d, xd = _design.build(self.terms, x, names)
        spec = GlmSpec("logistic", include_intercept=d.include_intercept, column_names=d.names)
        return FittedLearner(self.name, d, fit_logistic(xd, y, spec))


@dataclass(frozen=True)
class _Subset:
    # main-terms design restricted to a subset of the input columns
    kind: str
    input_names: tuple
    names: tuple
    columns: tuple

    def transform(self, x):
        x = np.asarray(x, dtype=float).reshape(len(x), -1)
        return x[:, list(self.columns)]


@dataclass(frozen=True)
class StepwiseGlmLearner:
    """Forward-stepwise main-terms logistic GLM, adding columns while AIC drops.

    AIC is the Bernoulli deviance plus twice the number of coefficients.
    """

    name: str = "stepwise"
    max_terms: int | None = None

    def fit(self, x, y, names) -> FittedLearner:
        x = np.asarray(x, dtype=float).reshape(len(y), -1)
        names = tuple(names)
        chosen: list[int] = []
        best = fit_logistic(np.empty((len(y), 0)), y)
        best_aic = best.deviance + 2
        limit = x.shape[1] if self.max_terms is None else self.max_terms
        while len(chosen) < limit:
            trial = None
            for j in range(x.shape[1]):
                if j in chosen:
                    continue
                cols = chosen + [j]
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        f = fit_logistic(x[:, cols], y,
                                         GlmSpec("logistic", column_names=tuple(names[c] for c in cols)))
                except CausalEstError:
                    continue
                aic = f.deviance + 2 * (len(cols) + 1)
                if trial is None or aic < trial[0]:
                    trial = (aic, j, f)
            if trial is None or trial[0] >= best_aic:
                break
            best_aic, j, best = trial
            chosen.append(j)
        cols = tuple(chosen)
        d = _Subset("stepwise", names, tuple(names[c] for c in cols), cols)
        return FittedLearner(self.name, d, best)


def default_candidates():
    return (GlmLearner("glm", "main"), GlmLearner("glm-interactions", "interactions"),
            StepwiseGlmLearner("stepwise"))


@dataclass(frozen=True)
class LearnerMenu:
    """Ordered candidate learners and the number of CV folds.

    Ties in cross-validated risk go to the earlier candidate.
    """

    candidates: tuple = field(default_factory=default_candidates)
    v_folds: int = 10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise ConfigError("a learner menu needs at least one candidate")
        if self.v_folds < 2:
            raise ConfigError("v_folds must be at least 2")
        names = [c.name for c in self.candidates]
        if len(set(names)) != len(names):
            raise ConfigError(f"candidate names must be unique: {names}")


@dataclass(frozen=True)
class CvSelection:
    target: str
    selected: object
    risks: dict
    dropped: tuple = ()
    folds: np.ndarray | None = field(default=None, repr=False)


def fold_ids(a, v_folds: int, seed: int) -> np.ndarray:
    """Fold label per row, stratified by treatment and shuffled under ``seed``."""
    a = np.asarray(a)
    rng = np.random.default_rng(seed)
    folds = np.empty(len(a), dtype=int)
    for arm in (0, 1):
        idx = np.flatnonzero(a == arm)
        folds[rng.permutation(idx)] = np.arange(idx.size) % v_folds
    return folds


def _target_data(table: ObservationTable, target: str):
    if target == "outcome":
        return (np.column_stack([table.a, table.w]), table.y,
                (table.spec.treatment_name, *table.confounder_names))
    if target == "propensity":
        return table.w, table.a, table.confounder_names
    raise ConfigError(f"target must be one of {TARGETS}")


def _neg_loglik(y, p):
    p = np.clip(p, PROB_CLAMP, 1 - PROB_CLAMP)
    return -(y * np.log(p) + (1 - y) * np.log1p(-p))


def cv_select(table: ObservationTable, menu: LearnerMenu, target: str) -> CvSelection:
    """Discrete V-fold selector by held-out negative Bernoulli log-likelihood.

    Candidates that fail on any fold are dropped with a warning.

    Raises
    ------
    ConfigError
        Fewer than ``2 * v_folds`` rows.
    CausalEstError
        Every candidate failed.
    """
    x, y, names = _target_data(table, target)
    v = menu.v_folds
    if table.n < 2 * v:
        raise ConfigError(f"cross-validation needs n >= {2 * v}, got {table.n}")
    folds = fold_ids(table.a, v, menu.seed)
    risks, dropped = {}, []
    for cand in menu.candidates:
        loss = np.empty(table.n)
        try:
            for k in range(v):
                test = folds == k
                fitted = cand.fit(x[~test], y[~test], names)
                loss[test] = _neg_loglik(y[test], fitted.predict(x[test]))
        except (CausalEstError, np.linalg.LinAlgError) as exc:
            warnings.warn(f"learner {cand.name!r} dropped ({target}): {exc}", stacklevel=2)
            dropped.append(cand.name)
            continue
        risks[cand.name] = float(loss.mean())
    if not risks:
        raise CausalEstError(f"every candidate learner failed for the {target} model")
    best = min(risks, key=risks.get)
    selected = next(c for c in menu.candidates if c.name == best)
    return CvSelection(target, selected, risks, tuple(dropped), folds)


# estimator ----------------------------------------------------------------

@dataclass(frozen=True)
class TmleState:
    """Every intermediate quantity of one TMLE run (probability scale unless noted)."""

    a: np.ndarray
    y: np.ndarray
    qaw: np.ndarray
    q1w: np.ndarray
    q0w: np.ndarray
    g: np.ndarray
    eps1: float
    eps2: float
    qaw_star: np.ndarray
    q1w_star: np.ndarray
    q0w_star: np.ndarray

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def logit_qaw(self):
        return logit(self.qaw)

    @property
    def logit_q1w(self):
        return logit(self.q1w)

    @property
    def logit_q0w(self):
        return logit(self.q0w)

    @property
    def h1w(self):
        return self.a / self.g

    @property
    def h0w(self):
        return (1 - self.a) / (1 - self.g)

    @property
    def mu1(self) -> float:
        return float(np.mean(self.q1w_star))

    @property
    def mu0(self) -> float:
        return float(np.mean(self.q0w_star))

    @property
    def ate(self) -> float:
        return float(np.mean(self.q1w_star - self.q0w_star))

    @property
    def d1(self):
        return self.h1w * (self.y - self.q1w_star) + self.q1w_star - self.mu1

    @property
    def d0(self):
        return self.h0w * (self.y - self.q0w_star) + self.q0w_star - self.mu0

    @property
    def ic(self):
        return self.d1 - self.d0

    @property
    def var_ic(self) -> float:
        return float(np.var(self.ic))

    def scores(self) -> tuple[float, float]:
        """Mean clever-covariate scores after targeting."""
        r = self.y - self.qaw_star
        return float(np.mean(self.h1w * r)), float(np.mean(self.h0w * r))

    def check(self, tol: float = 1e-6) -> dict:
        """Structural checks: score equations, mean IC, probabilities inside (0, 1)."""
        s1, s0 = self.scores()
        mean_ic = float(np.mean(self.ic))
        inside = all(np.all((q > 0) & (q < 1)) for q in (self.q1w_star, self.q0w_star, self.qaw_star))
        return {"score1": s1, "score0": s0, "mean_ic": mean_ic, "in_unit_interval": bool(inside),
                "ok": bool(abs(s1) <= tol and abs(s0) <= tol and abs(mean_ic) <= tol and inside)}


def _initial_fits(table, learners, q_terms, g_terms):
    xq, _, q_names = _target_data(table, "outcome")
    if learners is None:
        q_learner, g_learner, info = GlmLearner("glm", q_terms), GlmLearner("glm", g_terms), {}
    else:
        q_sel = cv_select(table, learners, "outcome")
        g_sel = cv_select(table, learners, "propensity")
        q_learner, g_learner = q_sel.selected, g_sel.selected
        info = {"outcome_learner": q_learner.name, "outcome_cv_risk": q_sel.risks,
                "propensity_learner": g_learner.name, "propensity_cv_risk": g_sel.risks}
    q_fit = q_learner.fit(xq, table.y, q_names)
    x1, x0 = xq.copy(), xq.copy()
    x1[:, 0], x0[:, 0] = 1.0, 0.0
    qaw = q_fit.fit.fitted_values
    q1w, q0w = q_fit.predict(x1), q_fit.predict(x0)
    g = g_learner.fit(table.w, table.a, table.confounder_names).fit.fitted_values
    return qaw, q1w, q0w, g, info


def tmle_fit(table: ObservationTable, learners: LearnerMenu | None = None, *,
             q_terms: str = "main", g_terms: str = "main", targeting: bool = True):
    """Run the initial fits and the fluctuation; return ``(TmleState, info)``."""
    qaw, q1w, q0w, g, info = _initial_fits(table, learners, q_terms, g_terms)
    if np.any((g <= 0) | (g >= 1)):
        raise PositivityError(f"{int(np.sum((g <= 0) | (g >= 1)))} propensity scores are 0 or 1")
    a, y = table.a, table.y
    h = np.column_stack([a / g, (1 - a) / (1 - g)])
    if targeting:
        spec = GlmSpec("logistic", include_intercept=False, offset=logit(qaw),
                       column_names=("H1W", "H0W"))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=SeparationWarning)
            try:
                flux = fit_logistic(h, y, spec)
            except ConvergenceError as exc:
                raise ConvergenceError(f"fluctuation step did not converge: {exc}",
                                       trace=exc.trace) from exc
        if not flux.converged:
            raise ConvergenceError("fluctuation step diverged (separation on the clever "
                                   "covariates)", trace=flux.trace)
        eps1, eps2 = map(float, flux.coefficients)
    else:
        eps1 = eps2 = 0.0
    qaw_star = expit(logit(qaw) + eps1 * h[:, 0] + eps2 * h[:, 1])
    q1w_star = expit(logit(q1w) + eps1 / g)
    q0w_star = expit(logit(q0w) + eps2 / (1 - g))
    state = TmleState(a, y, qaw, q1w, q0w, g, eps1, eps2, qaw_star, q1w_star, q0w_star)
    return state, info


def ic_variance(state: TmleState, level: float = 0.95) -> tuple[float, float, float]:
    """Standard error ``sqrt(var(IC)/n)`` and the Wald interval for the ATE.

    The variance uses the ``1/n`` (population) normalisation.
    """
    se = float(np.sqrt(state.var_ic / state.n))
    z = norm.ppf(0.5 + level / 2)
    return se, float(state.ate - z * se), float(state.ate + z * se)


def tmle_ate(table: ObservationTable, learners: LearnerMenu | None = None, *,
             q_terms: str = "main", g_terms: str = "main", targeting: bool = True,
             level: float = 0.95) -> EffectEstimate:
    """TMLE of the average treatment effect.

    Parameters
    ----------
    table : ObservationTable
    learners : LearnerMenu, optional
        When given, the outcome and treatment models are chosen by
        :func:`cv_select`; otherwise logistic GLMs on ``q_terms`` (design on
        A and W) and ``g_terms`` (design on W) are used.
    targeting : bool
        ``False`` skips the fluctuation (eps1 = eps2 = 0), which reduces the
        estimate to pooled logistic G-computation.

    Returns
    -------
    EffectEstimate
        ``components`` holds the :class:`TmleState`.
    """
    state, info = tmle_fit(table, learners, q_terms=q_terms, g_terms=g_terms,
                           targeting=targeting)
    se, lo, hi = ic_variance(state, level)
    diag = {"eps1": state.eps1, "eps2": state.eps2, "var_ic": state.var_ic,
            "checks": state.check(), **info}
    return EffectEstimate("ATE", state.ate, "tmle", se=se, ci=(lo, hi), mu1=state.mu1,
                          mu0=state.mu0, n=table.n, diagnostics=diag, components=state)


def _ratio_estimate(estimand, log_value, ic, n, level, mu1, mu0):
    se = float(np.sqrt(np.var(ic) / n))
    z = norm.ppf(0.5 + level / 2)
    return EffectEstimate(
        estimand, float(np.exp(log_value)), "tmle", se=se,
        ci=(float(np.exp(log_value - z * se)), float(np.exp(log_value + z * se))),
        mu1=mu1, mu0=mu0, n=n, diagnostics={"log_value": float(log_value), "log_se": se},
    )


def tmle_rr_or(state: TmleState, level: float = 0.95) -> tuple[EffectEstimate, EffectEstimate]:
    """Causal risk ratio and marginal odds ratio from a targeted state.

    Intervals come from the delta-method IC on the log scale; the reported
    ``se`` is that of the log ratio.
    """
    mu1, mu0 = state.mu1, state.mu0
    if not (0 < mu0 < 1 and 0 < mu1 < 1):
        raise ConfigError(f"ratio contrasts undefined for mu1={mu1}, mu0={mu0}")
    d1, d0 = state.d1, state.d0
    rr = _ratio_estimate("RR", np.log(mu1) - np.log(mu0), d1 / mu1 - d0 / mu0,
                         state.n, level, mu1, mu0)
    log_or = (np.log(mu1) - np.log1p(-mu1)) - (np.log(mu0) - np.log1p(-mu0))
    ic_or = d1 / (mu1 * (1 - mu1)) - d0 / (mu0 * (1 - mu0))
    return rr, _ratio_estimate("OR", log_or, ic_or, state.n, level, mu1, mu0)
