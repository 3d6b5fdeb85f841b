"""Nonparametric row bootstrap with normal, percentile and bias-corrected intervals.

Replicate ``b`` draws its rows from a Philox generator keyed by
``SeedSequence([seed, b])``, so the replicate streams do not depend on how
the replicates are scheduled across workers.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import norm

from .dataset import ObservationTable
from .errors import CausalEstError, ConfigError, InferenceError

MAX_FAILURE_FRACTION = 0.20
INTERVALS = ("normal", "percentile", "bias_corrected")


def replicate_rng(seed: int, b: int) -> np.random.Generator:
    """Generator for replicate ``b``: Philox keyed by the (seed, b) seed sequence."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, b])))


def default_workers() -> int:
    """Worker cap from ``CE_THREADS`` (1 when unset or invalid)."""
    try:
        return max(1, int(os.environ.get("CE_THREADS", "1")))
    except ValueError:
        return 1


def _check_level(level):
    if not 0 < level < 1:
        raise ConfigError(f"level must lie in (0, 1), got {level}")


def percentile_interval(replicates, level: float = 0.95) -> tuple[float, float]:
    """Equal-tailed percentile interval with type-7 (linear) quantiles."""
    _check_level(level)
    r = np.asarray(replicates, dtype=float)
    alpha = 1 - level
    lo, hi = np.quantile(r, [alpha / 2, 1 - alpha / 2], method="linear")
    return float(lo), float(hi)


def normal_interval(replicates, point: float, level: float = 0.95) -> tuple[float, float]:
    """``point +/- z * sd(replicates)`` with the n-1 standard deviation."""
    _check_level(level)
    r = np.asarray(replicates, dtype=float)
    se = float(np.std(r, ddof=1)) if r.size > 1 else 0.0
    z = norm.ppf(0.5 + level / 2)
    return float(point - z * se), float(point + z * se)


def bc_interval(replicates, point: float, level: float = 0.95) -> tuple[float, float]:
    """Bias-corrected percentile interval (no acceleration).

    ``z0 = Phi^-1(fraction of replicates below point)`` and the endpoints are
    the ``Phi(2 z0 -/+ z)`` quantiles of the replicates.  When every replicate
    lies on one side of ``point`` z0 is infinite and the percentile interval
    is returned with a warning.
    """
    _check_level(level)
    r = np.asarray(replicates, dtype=float)
    if np.ptp(r) == 0:
        return percentile_interval(r, level)
    frac = float(np.mean(r < point))
    if frac in (0.0, 1.0):
        warnings.warn("all replicates on one side of the point estimate; "
                      "bias correction undefined, using the percentile interval",
                      RuntimeWarning, stacklevel=2)
        return percentile_interval(r, level)
    z0 = norm.ppf(frac)
    z = norm.ppf(0.5 + level / 2)
    qs = norm.cdf([2 * z0 - z, 2 * z0 + z])
    lo, hi = np.quantile(r, qs, method="linear")
    return float(lo), float(hi)


@dataclass(frozen=True)
class BootstrapResult:
    """Replicate estimates and the three interval types.

    ``point`` is the estimate on the original sample; ``replicate_mean`` is
    also exposed.  Failed replicates are excluded from ``replicates`` and
    counted in ``failed``.
    """

    replicates: np.ndarray = field(repr=False)
    point: float
    se: float
    intervals: dict
    B: int
    seed: int
    failed: int = 0
    level: float = 0.95
    estimate: object = field(default=None, repr=False, compare=False)

    @property
    def replicate_mean(self) -> float:
        return float(np.mean(self.replicates))

    def to_dict(self) -> dict:
        return {
            "point": self.point, "se": self.se, "B": self.B, "seed": self.seed,
            "failed": self.failed, "level": self.level, "replicate_mean": self.replicate_mean,
            "intervals": {k: list(v) for k, v in self.intervals.items()},
        }


def _as_float(result) -> float:
    value = float(result)
    if not np.isfinite(value):
        raise InferenceError("estimator returned a non-finite value")
    return value


def bootstrap(table: ObservationTable, estimator: Callable, B: int = 1000, seed: int = 0,
              level: float = 0.95, workers: int | None = None) -> BootstrapResult:
    """Resample rows with replacement ``B`` times and re-run ``estimator``.

    Parameters
    ----------
    table : ObservationTable
    estimator : callable
        ``estimator(table)`` returning an :class:`EffectEstimate` or a number.
    B : int
        Number of replicates (at least 2).
    seed : int
        Root seed; replicate ``b`` uses :func:`replicate_rng` ``(seed, b)``.
    workers : int, optional
        Thread count; defaults to ``CE_THREADS`` or 1.  Results are merged in
        replicate order, so the output does not depend on it.

    Raises
    ------
    InferenceError
        More than 20% of the replicates failed.
    """
    if B < 2:
        raise ConfigError("B must be at least 2")
    _check_level(level)
    original = estimator(table)
    point = _as_float(original)
    n = table.n

    def one(b):
        rows = replicate_rng(seed, b).integers(0, n, size=n)
        try:
            return _as_float(estimator(table.take(rows)))
        except (CausalEstError, np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError):
            return np.nan

    workers = workers or default_workers()
    # filters are process-global, so silence them once around every worker
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                values = list(pool.map(one, range(B)))
        else:
            values = [one(b) for b in range(B)]
    values = np.asarray(values, dtype=float)
    ok = np.isfinite(values)
    failed = int(B - ok.sum())
    if failed > MAX_FAILURE_FRACTION * B:
        raise InferenceError(
            f"{failed} of {B} bootstrap replicates failed; the estimator is unstable "
            "on resampled data (positivity or separation trouble?)"
        )
    reps = values[ok]
    intervals = {
        "normal": normal_interval(reps, point, level),
        "percentile": percentile_interval(reps, level),
        "bias_corrected": bc_interval(reps, point, level),
    }
    se = float(np.std(reps, ddof=1)) if reps.size > 1 else 0.0
    return BootstrapResult(reps, point, se, intervals, B, seed, failed, level, original)
