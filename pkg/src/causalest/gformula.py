"""Standardisation (non-parametric G-formula) and regression-adjustment estimators."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import design as _design
from .dataset import ObservationTable
from .errors import ConfigError, PositivityError, PositivityWarning
from .glm import GlmSpec, fit_glm, fit_ols, predict, robust_se
from .results import EffectEstimate


@dataclass(frozen=True)
class StratumTable:
    """Cell summaries for every observed confounder pattern.

    Cell means of empty cells are NaN and flagged in ``empty_treated`` /
    ``empty_control``.
    """

    names: tuple[str, ...]
    keys: np.ndarray
    count: np.ndarray
    count_treated: np.ndarray
    count_control: np.ndarray
    mean_treated: np.ndarray
    mean_control: np.ndarray
    p_w: np.ndarray
    p_w_treated: np.ndarray

    @property
    def empty_treated(self):
        return self.count_treated == 0

    @property
    def empty_control(self):
        return self.count_control == 0

    def describe(self, rows) -> list[dict]:
        return [dict(zip(self.names, map(float, self.keys[i]))) for i in rows]


def stratum_table(table: ObservationTable) -> StratumTable:
    continuous = [nm for nm, k in zip(table.confounder_names, table.kinds) if k == "continuous"]
    if continuous:
        raise ConfigError(
            f"non-parametric G-formula needs discrete confounders; continuous: {continuous}"
        )
    if table.p:
        keys, inverse = np.unique(table.w, axis=0, return_inverse=True)
        inverse = inverse.ravel()
    else:
        keys, inverse = np.zeros((1, 0)), np.zeros(table.n, dtype=int)
    m = len(keys)
    a, y = table.a, table.y
    count = np.bincount(inverse, minlength=m).astype(float)
    n1 = np.bincount(inverse, weights=a, minlength=m)
    n0 = count - n1
    s1 = np.bincount(inverse, weights=a * y, minlength=m)
    s0 = np.bincount(inverse, weights=(1 - a) * y, minlength=m)
    with np.errstate(invalid="ignore", divide="ignore"):
        m1 = np.where(n1 > 0, s1 / np.where(n1 > 0, n1, 1), np.nan)
        m0 = np.where(n0 > 0, s0 / np.where(n0 > 0, n0, 1), np.nan)
    return StratumTable(
        names=table.confounder_names, keys=keys, count=count, count_treated=n1,
        count_control=n0, mean_treated=m1, mean_control=m0, p_w=count / table.n,
        p_w_treated=n1 / n1.sum(),
    )


def _att_from_strata(st: StratumTable, n: int) -> EffectEstimate:
    needed = st.count_treated > 0
    bad = np.flatnonzero(needed & st.empty_control)
    if bad.size:
        raise PositivityError(
            f"{bad.size} stratum(s) with treated but no control units: {st.describe(bad)}",
            strata=st.describe(bad),
        )
    mu1 = float(np.sum(st.mean_treated[needed] * st.p_w_treated[needed]))
    mu0 = float(np.sum(st.mean_control[needed] * st.p_w_treated[needed]))
    return EffectEstimate(
        "ATT", mu1 - mu0, "np-g", mu1=mu1, mu0=mu0, n=n,
        diagnostics={"strata": len(st.keys)}, components=st,
    )


def np_gformula_ate(table: ObservationTable, empty_cells: str = "error") -> EffectEstimate:
    """Average treatment effect by standardising cell means to P(W=w).

    Each stratum's treated-minus-control contrast is weighted by that
    stratum's marginal frequency.

    Parameters
    ----------
    table : ObservationTable
        All confounders must be discrete (binary or integer coded).
    empty_cells : {"error", "att"}
        What to do when some stratum lacks one arm.  ``"att"`` switches the
        estimand to the effect among the treated (with a warning), which only
        needs control units in strata that contain treated units.

    Raises
    ------
    PositivityError
        Some (A, W=w) cell is empty and ``empty_cells="error"``.
    """
    if empty_cells not in ("error", "att"):
        raise ConfigError("empty_cells must be 'error' or 'att'")
    st = stratum_table(table)
    bad = np.flatnonzero(st.empty_treated | st.empty_control)
    if bad.size:
        if empty_cells == "att":
            warnings.warn(
                f"{bad.size} stratum(s) miss an arm; estimating the ATT instead",
                PositivityWarning, stacklevel=2,
            )
            return _att_from_strata(st, table.n)
        raise PositivityError(
            f"{bad.size} stratum(s) with an empty treatment arm: {st.describe(bad)}",
            strata=st.describe(bad),
        )
    mu1 = float(np.sum(st.mean_treated * st.p_w))
    mu0 = float(np.sum(st.mean_control * st.p_w))
    return EffectEstimate(
        "ATE", mu1 - mu0, "np-g", mu1=mu1, mu0=mu0, n=table.n,
        diagnostics={"strata": len(st.keys)}, components=st,
    )


def np_gformula_att(table: ObservationTable) -> EffectEstimate:
    """Effect among the treated: cell contrasts weighted by P(W=w | A=1)."""
    return _att_from_strata(stratum_table(table), table.n)


@dataclass(frozen=True)
class PotentialOutcomePair:
    mu1: float
    mu0: float
    y1: np.ndarray
    y0: np.ndarray


def arm_predictions(table: ObservationTable, outcome_family: str = "linear",
                    terms: str = "main", weights=None) -> PotentialOutcomePair:
    """Fit Y ~ W separately within each arm and predict both outcomes for every row."""
    d, x = _design.build(terms, table.w, table.confounder_names)
    preds = []
    for arm in (1, 0):
        rows = table.a == arm
        spec = GlmSpec(
            outcome_family, include_intercept=d.include_intercept,
            sampling_weights=None if weights is None else np.asarray(weights)[rows],
            column_names=d.names,
        )
        fit = fit_glm(x[rows], table.y[rows], spec)
        preds.append(predict(fit, x))
    y1, y0 = preds
    return PotentialOutcomePair(float(y1.mean()), float(y0.mean()), y1, y0)


def pooled_predictions(table: ObservationTable, outcome_family: str = "logistic",
                       terms: str = "main"):
    """One outcome model Y ~ A + W; returns Q(A,W), Q(1,W), Q(0,W) for every row."""
    names = (table.spec.treatment_name, *table.confounder_names)
    x = np.column_stack([table.a, table.w])
    d, xd = _design.build(terms, x, names)
    fit = fit_glm(xd, table.y, GlmSpec(outcome_family, include_intercept=d.include_intercept,
                                       column_names=d.names))
    x1, x0 = x.copy(), x.copy()
    x1[:, 0], x0[:, 0] = 1.0, 0.0
    return fit.fitted_values, predict(fit, d.transform(x1)), predict(fit, d.transform(x0))


def parametric_gformula_ate(table: ObservationTable, outcome_family: str = "linear",
                            terms: str = "main", model: str = "per_arm") -> EffectEstimate:
    """Regression-adjustment G-computation.

    Predicts both potential outcomes for all ``n`` rows from an outcome
    model and averages their difference.

    Parameters
    ----------
    outcome_family : {"linear", "logistic"}
    terms : {"main", "interactions", "saturated"}
    model : {"per_arm", "pooled"}
        ``"per_arm"`` fits Y ~ W separately among treated and controls;
        ``"pooled"`` fits one model Y ~ A + W and sets A to 1 and 0.
    """
    if model == "per_arm":
        pair = arm_predictions(table, outcome_family, terms)
    elif model == "pooled":
        _, y1, y0 = pooled_predictions(table, outcome_family, terms)
        pair = PotentialOutcomePair(float(y1.mean()), float(y0.mean()), y1, y0)
    else:
        raise ConfigError("model must be 'per_arm' or 'pooled'")
    return EffectEstimate(
        "ATE", pair.mu1 - pair.mu0, "g-comp", mu1=pair.mu1, mu0=pair.mu0, n=table.n,
        diagnostics={"outcome_family": outcome_family, "terms": terms, "model": model},
        components=pair,
    )


def naive_regression_ate(table: ObservationTable) -> EffectEstimate:
    """Coefficient of A in the OLS regression Y ~ A + W (HC0 standard error)."""
    x = np.column_stack([table.a, table.w])
    fit = fit_ols(x, table.y)
    se = float(robust_se(fit, x)[1])
    beta = float(fit.coefficients[1])
    z = norm.ppf(0.975)
    return EffectEstimate("ATE", beta, "regression", se=se, ci=(beta - z * se, beta + z * se),
                          n=table.n)


def marginal_risk_ratio(pair) -> EffectEstimate:
    """Ratio of the standardised outcome means, mu1 / mu0."""
    mu1, mu0 = float(pair.mu1), float(pair.mu0)
    if mu0 <= 0:
        raise ConfigError("marginal risk ratio undefined: mu0 = 0")
    rr = mu1 / mu0
    return EffectEstimate(
        "RR", rr, "ratio", mu1=mu1, mu0=mu0, diagnostics={"excess_pct": 100.0 * (rr - 1.0)},
    )


def marginal_odds_ratio(pair) -> EffectEstimate:
    mu1, mu0 = float(pair.mu1), float(pair.mu0)
    if not (0 < mu0 < 1 and 0 <= mu1 < 1):
        raise ConfigError("marginal odds ratio undefined for these outcome means")
    value = (mu1 / (1 - mu1)) / (mu0 / (1 - mu0))
    return EffectEstimate("OR", value, "ratio", mu1=mu1, mu0=mu0)
