"""Augmented inverse-probability-weighted (doubly robust) ATE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ObservationTable
from .errors import ConfigError, PositivityError
from .gformula import arm_predictions, pooled_predictions
from .iptw import PropensityScores, fit_propensity, make_weights
from .results import EffectEstimate


@dataclass(frozen=True)
class AipwComponents:
    qaw: np.ndarray
    q1w: np.ndarray
    q0w: np.ndarray
    g: np.ndarray
    augmentation1: np.ndarray
    augmentation0: np.ndarray
    mu1: float
    mu0: float


def aipw_ate(table: ObservationTable, outcome_family: str = "logistic", *,
             terms: str = "main", g_terms: str = "main", q_model: str = "pooled",
             stabilized: bool = False, shared_augmentation: bool = False,
             propensity: PropensityScores | None = None,
             q_predictions=None) -> EffectEstimate:
    """AIPTW estimate mu1 - mu0.

    ``mu1 = mean(Q(1,W) + A (Y - Q(A,W)) / g)`` and
    ``mu0 = mean(Q(0,W) + (1-A) (Y - Q(A,W)) / (1-g))``, with Q from one pooled
    outcome model evaluated at A=1 and A=0.

    Parameters
    ----------
    outcome_family : {"logistic", "linear"}
    terms : {"main", "interactions", "saturated"}
        Outcome-model design on (A, W).
    g_terms : {"main", "interactions", "saturated"}
        Treatment-model design on W.
    q_model : {"pooled", "per_arm"}
        One outcome model on (A, W), or separate Y ~ W fits per arm.
    stabilized : bool
        Use stabilized weights normalised to mean one within each arm in the
        augmentation terms instead of ``1/g`` and ``1/(1-g)``.
    shared_augmentation : bool
        Reproduce a common by-hand variant: Q(A,W) from the pooled fit,
        Q(1,W) and Q(0,W) from separate per-arm fits (``q_model`` is ignored), and the stabilized-weight residual
        ``sws * (Y - Q(A,W))`` added to *both* potential-outcome columns for
        every row, so that the augmentation cancels in the contrast.
    propensity : PropensityScores, optional
        Pre-computed treatment model; overrides ``g_terms``.
    q_predictions : tuple of arrays, optional
        ``(Q(A,W), Q(1,W), Q(0,W))`` supplied directly; overrides ``q_model``.
    """
    ps = propensity if propensity is not None else fit_propensity(table, g_terms)
    g = ps.g
    if np.any((g <= 0) | (g >= 1)):
        raise PositivityError("propensity scores of exactly 0 or 1")
    a, y = table.a, table.y
    if q_predictions is not None:
        qaw, q1w, q0w = (np.asarray(q, dtype=float) for q in q_predictions)
        q_model = "supplied"
    elif q_model == "pooled":
        qaw, q1w, q0w = pooled_predictions(table, outcome_family, terms)
    elif q_model == "per_arm":
        pair = arm_predictions(table, outcome_family, terms)
        q1w, q0w = pair.y1, pair.y0
        qaw = np.where(a == 1, q1w, q0w)
    else:
        raise ConfigError("q_model must be 'pooled' or 'per_arm'")
    resid = y - qaw

    if shared_augmentation:
        qaw = pooled_predictions(table, outcome_family, terms)[0]
        resid = y - qaw
        pair = arm_predictions(table, outcome_family, terms)
        q1w, q0w = pair.y1, pair.y0
        sws = make_weights(ps, a, "stabilized").weights
        aug1 = aug0 = sws * resid
        method = "aipw-shared"
    elif stabilized:
        sws = make_weights(ps, a, "stabilized").weights
        aug1 = a * sws * resid / np.mean(a * sws) * np.mean(a)
        aug0 = (1 - a) * sws * resid / np.mean((1 - a) * sws) * np.mean(1 - a)
        method = "aipw-stabilized"
    else:
        aug1 = a * resid / g
        aug0 = (1 - a) * resid / (1 - g)
        method = "aipw"
    mu1 = float(np.mean(q1w + aug1))
    mu0 = float(np.mean(q0w + aug0))
    comp = AipwComponents(qaw, q1w, q0w, g, aug1, aug0, mu1, mu0)
    return EffectEstimate(
        "ATE", mu1 - mu0, method, mu1=mu1, mu0=mu0, n=table.n,
        diagnostics={"outcome_family": outcome_family, "terms": terms, "q_model": q_model,
                     "mean_augmentation1": float(aug1.mean()),
                     "mean_augmentation0": float(aug0.mean())},
        components=comp,
    )
