"""Covariate balance and propensity-score overlap diagnostics."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from .dataset import ObservationTable
from .errors import ConfigError, DataError
from .iptw import PropensityScores, WeightSet

STD_DIFF_FLAG = 0.10
VAR_RATIO_FLAG = 0.5
STANDARDIZATIONS = ("arm_average", "pooled")


def weighted_mean_var(x, w) -> tuple[float, float]:
    """Weighted mean and variance ``sum w (x - m)^2 / sum w * n / (n - 1)``.

    The variance is unchanged by rescaling ``w`` and equals the usual
    ``ddof=1`` variance when all weights are equal.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    m = float(np.sum(w * x) / np.sum(w))
    n = x.size
    v = float(np.sum(w * (x - m) ** 2) / np.sum(w)) * n / (n - 1) if n > 1 else 0.0
    return m, v


@dataclass(frozen=True)
class BalanceRow:
    name: str
    std_diff_raw: float | None
    std_diff_weighted: float | None
    var_ratio_raw: float | None
    var_ratio_weighted: float | None
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class BalanceReport:
    """Per-confounder standardized differences and variance ratios (treated / control)."""

    rows: tuple[BalanceRow, ...]
    standardization: str
    weight_summary: dict | None = None

    def __getitem__(self, name) -> BalanceRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def flagged(self) -> list[str]:
        return [r.name for r in self.rows if r.flags]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([asdict(r) for r in self.rows]).set_index("name")
        frame["flags"] = frame["flags"].map(",".join)
        return frame

    def to_dict(self) -> dict:
        return {"standardization": self.standardization,
                "thresholds": {"std_diff": STD_DIFF_FLAG, "var_ratio": VAR_RATIO_FLAG},
                "rows": [dict(asdict(r), flags=list(r.flags)) for r in self.rows],
                "weights": self.weight_summary}


def _std_diff(x, a, w, standardization, pooled_sd):
    t, c = a == 1, a == 0
    m1, v1 = weighted_mean_var(x[t], w[t])
    m0, v0 = weighted_mean_var(x[c], w[c])
    scale = np.sqrt((v1 + v0) / 2) if standardization == "arm_average" else pooled_sd
    sd = None if scale == 0 else float((m1 - m0) / scale)
    ratio = None if v0 == 0 or v1 == 0 else float(v1 / v0)
    return sd, ratio


def balance_table(table: ObservationTable, weights: WeightSet | None = None,
                  standardization: str = "arm_average") -> BalanceReport:
    """Balance of every confounder before and, given ``weights``, after weighting.

    Parameters
    ----------
    table : ObservationTable
    weights : WeightSet, optional
        Without weights the weighted columns are ``None``.
    standardization : {"arm_average", "pooled"}
        Denominator of the standardized difference.  ``"arm_average"`` uses
        ``sqrt((s1^2 + s0^2) / 2)`` from the (weighted) arm variances;
        ``"pooled"`` uses the unweighted full-sample SD for both columns,
        i.e. the difference in arm means of the z-scored covariate.

    Notes
    -----
    Rows are flagged when ``|std diff| >= 0.10`` or a variance ratio is below
    0.5, and when the covariate has zero variance.
    """
    if standardization not in STANDARDIZATIONS:
        raise ConfigError(f"standardization must be one of {STANDARDIZATIONS}")
    a = table.a
    ones = np.ones(table.n)
    if weights is not None:
        w = np.asarray(weights.weights, dtype=float)
        if w.shape != a.shape:
            raise ConfigError("weights are not aligned with the table")
        if np.any(w < 0):
            raise DataError("weights must be non-negative")
    rows = []
    for name, x in zip(table.confounder_names, table.w.T):
        pooled_sd = float(np.std(x, ddof=1))
        sd_raw, vr_raw = _std_diff(x, a, ones, standardization, pooled_sd)
        sd_w = vr_w = None
        if weights is not None:
            sd_w, vr_w = _std_diff(x, a, w, standardization, pooled_sd)
        flags = []
        if pooled_sd == 0:
            flags.append("zero_variance")
        if any(d is not None and abs(d) >= STD_DIFF_FLAG for d in (sd_raw, sd_w)):
            flags.append("std_diff")
        if any(v is not None and v < VAR_RATIO_FLAG for v in (vr_raw, vr_w)):
            flags.append("var_ratio")
        rows.append(BalanceRow(name, sd_raw, sd_w, vr_raw, vr_w, tuple(flags)))
    summary = None if weights is None else weights.summary()
    return BalanceReport(tuple(rows), standardization, summary)


@dataclass(frozen=True)
class DensityCurve:
    arm: int
    grid: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    bandwidth: float

    def integral(self) -> float:
        return float(trapezoid(self.density, self.grid))

    @property
    def mode(self) -> float:
        return float(self.grid[np.argmax(self.density)])


def silverman_bandwidth(x) -> float:
    """``0.9 * min(sd, IQR / 1.34) * n^(-1/5)``, falling back to the SD or IQR if one is zero."""
    x = np.asarray(x, dtype=float)
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = [s for s in (sd, (q75 - q25) / 1.34) if s > 0]
    return 0.9 * min(spread) * x.size ** -0.2 if spread else 0.0


def _gaussian_kde(x, grid, h, reflect):
    def k(u):
        return np.exp(-0.5 * u * u) / np.sqrt(2 * np.pi)

    out = np.zeros_like(grid)
    centers = [x, -x, 2 - x] if reflect else [x]
    for c in centers:
        for chunk in np.array_split(c, max(1, c.size // 2000)):
            out += k((grid[:, None] - chunk[None, :]) / h).sum(axis=1)
    return out / (x.size * h)


def overlap_densities(ps: PropensityScores | np.ndarray, a, m: int = 512,
                      reflect: bool = True) -> tuple[DensityCurve, DensityCurve]:
    """Gaussian kernel densities of the propensity score in each arm.

    Both curves share one grid of ``m`` points spanning the pooled scores
    plus four bandwidths, clipped to [0, 1].  With ``reflect`` the kernel
    mass beyond 0 and 1 is folded back so each curve integrates to one on
    the unit interval.  A zero Silverman bandwidth (constant scores) falls
    back to ``1 / m``.

    Returns
    -------
    (DensityCurve, DensityCurve)
        Treated curve first.
    """
    g = np.asarray(ps.g if isinstance(ps, PropensityScores) else ps, dtype=float)
    a = np.asarray(a)
    if g.shape != a.shape:
        raise ConfigError("scores and treatment vector differ in length")
    if m < 2:
        raise ConfigError("grid size m must be at least 2")
    arms = [g[a == 1], g[a == 0]]
    for arm, x in zip((1, 0), arms):
        if x.size < 2:
            raise DataError(f"arm {arm} has fewer than 2 propensity scores")
    hs = [silverman_bandwidth(x) or 1.0 / m for x in arms]
    reach = 4 * max(hs)
    grid = np.linspace(max(0.0, g.min() - reach), min(1.0, g.max() + reach), m)
    return tuple(DensityCurve(arm, grid, _gaussian_kde(x, grid, h, reflect), h)
                 for arm, x, h in zip((1, 0), arms, hs))


def overlap_coefficient(c1: DensityCurve, c0: DensityCurve) -> float:
    """Integral of the pointwise minimum of two curves on their common grid."""
    if not np.array_equal(c1.grid, c0.grid):
        raise ConfigError("curves must share a grid")
    return float(trapezoid(np.minimum(c1.density, c0.density), c1.grid))


def write_density_csv(curves, path) -> None:
    """Write ``x, density, arm`` records for external plotting."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["x", "density", "arm"])
        for c in curves:
            for x, d in zip(c.grid, c.density):
                out.writerow([repr(float(x)), repr(float(d)), c.arm])
