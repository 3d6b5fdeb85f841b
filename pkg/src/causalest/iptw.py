"""Propensity scores, inverse-probability weights and the weighting estimators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import design as _design
from .dataset import ObservationTable
from .errors import ConfigError, DataError, PositivityError
from .gformula import arm_predictions
from .glm import FittedGlm, GlmSpec, fit_logistic, fit_ols, robust_se
from .results import EffectEstimate
from scipy.stats import norm

POSITIVITY_BOUNDS = (0.025, 0.975)
WEIGHT_KINDS = ("unstabilized", "stabilized")


@dataclass(frozen=True)
class PropensityScores:
    """P(A=1|W) from the treatment model and P(A=1) from the intercept-only model."""

    g: np.ndarray
    g_marginal: np.ndarray
    fit: FittedGlm | None = field(default=None, repr=False)
    numerator_fit: FittedGlm | None = field(default=None, repr=False)
    bounds: tuple[float, float] = POSITIVITY_BOUNDS

    @property
    def near_violation(self) -> np.ndarray:
        lo, hi = self.bounds
        return (self.g < lo) | (self.g > hi)

    def summary(self, a=None) -> dict:
        out = {"min": float(self.g.min()), "max": float(self.g.max()),
               "mean": float(self.g.mean()), "flagged": int(self.near_violation.sum()),
               "bounds": list(self.bounds)}
        if a is not None:
            a = np.asarray(a)
            for arm in (1, 0):
                g = self.g[a == arm]
                out[f"arm{arm}"] = {"n": int(g.size), "mean": float(g.mean()),
                                    "sd": float(g.std(ddof=1)) if g.size > 1 else 0.0,
                                    "min": float(g.min()), "max": float(g.max())}
        return out


def fit_propensity(table: ObservationTable, terms: str = "main") -> PropensityScores:
    """Logistic treatment model A ~ W (denominator) and A ~ 1 (numerator)."""
    d, x = _design.build(terms, table.w, table.confounder_names)
    spec = GlmSpec("logistic", include_intercept=d.include_intercept, column_names=d.names)
    try:
        fit = fit_logistic(x, table.a, spec)
        numerator = fit_logistic(np.empty((table.n, 0)), table.a, GlmSpec("logistic"))
    except DataError as exc:
        raise PositivityError(f"treatment model cannot be fitted: {exc}") from exc
    return PropensityScores(fit.fitted_values, numerator.fitted_values, fit, numerator)


@dataclass(frozen=True)
class WeightSet:
    kind: str
    weights: np.ndarray
    bounds: tuple[float, float] | None = None
    numerator: str | None = None

    def __len__(self):
        return len(self.weights)

    def summary(self) -> dict:
        w = self.weights
        pct = np.percentile(w, [1, 5, 25, 50, 75, 95, 99])
        return {"kind": self.kind, "min": float(w.min()), "max": float(w.max()),
                "mean": float(w.mean()), "sum": float(w.sum()),
                "percentiles": dict(zip(["p1", "p5", "p25", "p50", "p75", "p95", "p99"],
                                        map(float, pct)))}


def make_weights(ps: PropensityScores, a, kind: str = "unstabilized") -> WeightSet:
    """Inverse-probability weights ``a/g + (1-a)/(1-g)``.

    Stabilized weights multiply by the marginal treatment probability of the
    observed arm, ``P(A=a)``, so their mean is close to one.
    """
    if kind not in WEIGHT_KINDS:
        raise ConfigError(f"kind must be one of {WEIGHT_KINDS}")
    a = np.asarray(a, dtype=float)
    g = np.asarray(ps.g, dtype=float)
    if a.shape != g.shape:
        raise ConfigError(f"treatment vector has {a.size} entries, propensity {g.size}")
    if np.any((g <= 0) | (g >= 1)):
        raise PositivityError(f"{int(np.sum((g <= 0) | (g >= 1)))} propensity scores are 0 or 1")
    w = a / g + (1 - a) / (1 - g)
    if kind == "unstabilized":
        return WeightSet(kind, w)
    num = a * ps.g_marginal + (1 - a) * (1 - ps.g_marginal)
    return WeightSet(kind, w * num, numerator="intercept-only logistic A ~ 1")


def truncate_weights(weights: WeightSet, lower_pct: float = 5.0, upper_pct: float = 95.0,
                     method: str = "linear") -> WeightSet:
    """Clamp weights to their empirical ``[lower_pct, upper_pct]`` percentiles.

    ``method`` is passed to :func:`numpy.quantile`; the default ``"linear"``
    is the type-7 definition.
    """
    if not 0 <= lower_pct < upper_pct <= 100:
        raise ConfigError("need 0 <= lower_pct < upper_pct <= 100")
    lo, hi = np.quantile(weights.weights, [lower_pct / 100, upper_pct / 100], method=method)
    return WeightSet("truncated", np.clip(weights.weights, lo, hi), bounds=(float(lo), float(hi)),
                     numerator=weights.numerator)


def ht_ate(table: ObservationTable, weights: WeightSet, normalized: bool = True) -> EffectEstimate:
    """Inverse-probability-weighted difference of outcome means.

    With ``normalized=True`` (Hajek) each arm's weighted mean divides by that
    arm's weight total; otherwise by ``n`` (Horvitz-Thompson).
    """
    w = np.asarray(weights.weights, dtype=float)
    if w.shape != table.a.shape:
        raise ConfigError("weights are not aligned with the table")
    if np.any(w <= 0):
        raise DataError("inverse-probability weights must be positive")
    a, y = table.a, table.y
    tot1, tot0 = np.sum(a * w), np.sum((1 - a) * w)
    if tot1 == 0 or tot0 == 0:
        raise DataError("zero total weight in a treatment arm")
    if normalized:
        mu1, mu0 = np.sum(a * w * y) / tot1, np.sum((1 - a) * w * y) / tot0
    else:
        mu1, mu0 = np.sum(a * w * y) / table.n, np.sum((1 - a) * w * y) / table.n
    return EffectEstimate(
        "ATE", float(mu1 - mu0), "iptw", mu1=float(mu1), mu0=float(mu0), n=table.n,
        diagnostics={"weights": weights.kind, "normalized": normalized},
    )


def msm_fit(table: ObservationTable, weights: WeightSet) -> EffectEstimate:
    """Marginal structural model: weighted OLS of Y on A with HC0 standard errors."""
    x = table.a.reshape(-1, 1)
    fit = fit_ols(x, table.y, GlmSpec("linear", sampling_weights=weights.weights,
                                      column_names=(table.spec.treatment_name,)))
    beta = float(fit.coefficients[1])
    se = float(robust_se(fit, x)[1])
    z = norm.ppf(0.975)
    return EffectEstimate(
        "ATE", beta, "msm", se=se, ci=(beta - z * se, beta + z * se),
        mu1=float(fit.coefficients[0] + beta), mu0=float(fit.coefficients[0]), n=table.n,
        diagnostics={"weights": weights.kind}, components=fit,
    )


def iptw_ra_ate(table: ObservationTable, weights: WeightSet, outcome_family: str = "linear",
                terms: str = "main") -> EffectEstimate:
    """Regression adjustment with per-arm outcome models fitted under the weights."""
    pair = arm_predictions(table, outcome_family, terms, weights=weights.weights)
    return EffectEstimate(
        "ATE", pair.mu1 - pair.mu0, "iptw-ra", mu1=pair.mu1, mu0=pair.mu0, n=table.n,
        diagnostics={"weights": weights.kind, "outcome_family": outcome_family},
        components=pair,
    )


def iptw_ate(table: ObservationTable, kind: str = "unstabilized",
             truncate: tuple[float, float] | None = None, terms: str = "main") -> EffectEstimate:
    """Convenience pipeline: propensity fit, weights, optional truncation, Hajek estimate."""
    ws = make_weights(fit_propensity(table, terms), table.a, kind)
    if truncate is not None:
        ws = truncate_weights(ws, *truncate)
    return ht_ate(table, ws)
