"""Simulated cancer-epidemiology data with known potential outcomes, and a
Monte Carlo harness for the relative bias of ATE estimators.

The confounders are a deprivation quintile ``w1`` (1..5), an age indicator
``w2``, a four-level stage ``w3`` and a comorbidity score ``w4``.  Treatment
follows a logistic model with a ``w2 * w4`` interaction; the potential
outcomes are the probabilities ``Y1``, ``Y0`` themselves, so the observed
``Y`` is a bounded value in [0, 1] rather than a 0/1 draw.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping

import numpy as np
import pandas as pd
from scipy.special import expit

from .aipw import aipw_ate
from .dataset import ObservationTable
from .errors import CausalEstError, ConfigError
from .gformula import parametric_gformula_ate
from .inference import default_workers
from .iptw import fit_propensity, iptw_ate, iptw_ra_ate, make_weights
from .tmle import GlmLearner, LearnerMenu, tmle_ate

CONFOUNDERS = ("w1", "w2", "w3", "w4")
REFERENCE_N = 1_000_000


def _generator(seed) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def _round_half_up(x):
    # halves go up, as in Stata's round() for the non-negative values used here
    return np.floor(x + 0.5)


@dataclass(frozen=True)
class DgpSample:
    """One simulated data set, potential outcomes included."""

    w: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    y1: np.ndarray = field(repr=False)
    y0: np.ndarray = field(repr=False)
    seed: object = None

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def psi(self) -> np.ndarray:
        return self.y1 - self.y0

    @property
    def y(self) -> np.ndarray:
        return self.a * self.y1 + (1 - self.a) * self.y0

    @property
    def table(self) -> ObservationTable:
        return ObservationTable.from_arrays(self.y, self.a, self.w, CONFOUNDERS,
                                            outcome_type="bounded")

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.w.astype(int), columns=list(CONFOUNDERS))
        frame["A"] = self.a.astype(int)
        frame["Y1"], frame["Y0"], frame["psi"], frame["Y"] = self.y1, self.y0, self.psi, self.y
        return frame


def generate_dgp(n: int, seed=0) -> DgpSample:
    """Draw ``n`` rows from the data-generating process.

    ``w1 = round(U(1, 5))``, so the end levels 1 and 5 get half the mass of
    the middle ones; ``w2 ~ Bernoulli(0.45)``;
    ``w3 = round(U(0, 1) + 0.75 w2 + 0.8 w1)`` with levels 5 and 6 recoded
    to 1; ``w4 = round(U(0, 1) + 0.75 w2 + 0.2 w1)``;
    ``A ~ Bernoulli(expit(-1 - 0.15 w4 + 1.5 w2 + 0.75 w3 + 0.25 w1 + 0.8 w2 w4))``;
    ``Y(a) = expit(-3 + a + 0.25 w4 + 0.75 w3 + 0.8 w2 w4 + 0.05 w1)``.

    Parameters
    ----------
    n : int
    seed : int or numpy.random.SeedSequence
    """
    if n < 1:
        raise ConfigError("n must be at least 1")
    rng = _generator(seed)
    w1 = _round_half_up(rng.uniform(1, 5, n))
    w2 = (rng.uniform(size=n) < 0.45).astype(float)
    w3 = _round_half_up(rng.uniform(size=n) + 0.75 * w2 + 0.8 * w1)
    w3[(w3 == 5) | (w3 == 6)] = 1
    w4 = _round_half_up(rng.uniform(size=n) + 0.75 * w2 + 0.2 * w1)
    p_a = expit(-1 - 0.15 * w4 + 1.5 * w2 + 0.75 * w3 + 0.25 * w1 + 0.8 * w2 * w4)
    a = (rng.uniform(size=n) < p_a).astype(float)
    lin = -3 + 0.25 * w4 + 0.75 * w3 + 0.8 * w2 * w4 + 0.05 * w1
    return DgpSample(np.column_stack([w1, w2, w3, w4]), a, expit(lin + 1), expit(lin), seed)


def reference_psi(seed=0, n: int = REFERENCE_N) -> float:
    """Mean individual effect over a large reference sample (the simulated truth)."""
    return float(generate_dgp(n, seed).psi.mean())


# estimators ---------------------------------------------------------------

def _ra(sample):
    return parametric_gformula_ate(sample.table, "linear", "main")


def _iptw(sample):
    return iptw_ate(sample.table, "unstabilized")


def _iptw_ra(sample):
    t = sample.table
    return iptw_ra_ate(t, make_weights(fit_propensity(t), t.a, "stabilized"), "linear")


def _aipw(sample):
    return aipw_ate(sample.table, "linear", q_model="per_arm")


def _tmle_with(menu):
    def run(sample):
        return tmle_ate(sample.table, menu)
    return run


def default_estimators(v_folds: int = 5, cv_seed: int = 0) -> dict[str, Callable]:
    """The five estimators compared by the harness.

    RA, IPTW (normalised), IPTW-RA and AIPW use main-terms linear outcome
    models and a main-terms logistic treatment model.  TMLE chooses both
    of its initial models by ``v_folds``-fold CV between a main-terms and an
    interactions logistic GLM.
    """
    menu = LearnerMenu((GlmLearner("glm", "main"), GlmLearner("glm-interactions", "interactions")),
                       v_folds=v_folds, seed=cv_seed)
    return {"RA": _ra, "IPTW": _iptw, "IPTW-RA": _iptw_ra, "AIPW": _aipw,
            "TMLE": _tmle_with(menu)}


# harness ------------------------------------------------------------------

@dataclass(frozen=True)
class EstimatorBias:
    name: str
    mean_estimate: float | None
    true_psi: float
    relative_bias: float | None
    empirical_se: float | None
    coverage: float | None
    replications: int
    failures: int


@dataclass(frozen=True)
class BiasReport:
    """Monte Carlo summary per estimator.

    ``relative_bias = |mean estimate - psi| / psi``.  ``coverage`` is the
    share of replications whose interval contains ``psi``; it is ``None``
    with fewer than two replications or when an estimator reports no interval.
    """

    rows: tuple[EstimatorBias, ...]
    n: int
    R: int
    seed: int
    true_psi: float
    estimates: dict = field(default_factory=dict, repr=False, compare=False)

    def __getitem__(self, name) -> EstimatorBias:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def ranking(self) -> list[str]:
        """Estimator names ordered by relative bias, failures last."""
        ok = [r for r in self.rows if r.relative_bias is not None]
        return [r.name for r in sorted(ok, key=lambda r: r.relative_bias)]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows])

    def to_dict(self) -> dict:
        return {"n": self.n, "R": self.R, "seed": self.seed, "true_psi": self.true_psi,
                "estimators": [asdict(r) for r in self.rows]}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path=None) -> str:
        return self.to_frame().to_csv(path, index=False, float_format=repr) or ""


def _run_one(estimators, n, child):
    sample = generate_dgp(n, child)
    out = {}
    for name, fn in estimators.items():
        try:
            res = fn(sample)
            ci = getattr(res, "ci", None)
            out[name] = (float(res), None if ci is None else tuple(map(float, ci)))
        except (CausalEstError, np.linalg.LinAlgError):
            out[name] = None
    return out


def monte_carlo(estimators: Mapping[str, Callable] | None = None, n: int = 1000, R: int = 200,
                seed: int = 0, *, reference_n: int = REFERENCE_N, true_psi: float | None = None,
                workers: int | None = None) -> BiasReport:
    """Relative bias of each estimator over ``R`` simulated samples of size ``n``.

    Parameters
    ----------
    estimators : mapping of name to callable, optional
        Each callable receives a :class:`DgpSample` and returns an
        :class:`EffectEstimate` or a number.  Defaults to
        :func:`default_estimators`.
    seed : int
        Root of the seed tree: the reference sample uses spawn key ``(0,)``
        and replication ``r`` uses ``(1, r)``.
    true_psi : float, optional
        Skip the reference sample and use this value as the truth.
    workers : int, optional
        Thread count (defaults to ``CE_THREADS`` or 1); results do not depend on it.

    Notes
    -----
    Estimator failures are counted per replication and do not stop the run.
    """
    if R < 1:
        raise ConfigError("R must be at least 1")
    estimators = dict(estimators) if estimators is not None else default_estimators()
    if true_psi is None:
        true_psi = reference_psi(np.random.SeedSequence(seed, spawn_key=(0,)), reference_n)
    children = [np.random.SeedSequence(seed, spawn_key=(1, r)) for r in range(R)]
    workers = workers or default_workers()
    # filters are process-global, so silence them once around every worker
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                runs = list(pool.map(lambda c: _run_one(estimators, n, c), children))
        else:
            runs = [_run_one(estimators, n, c) for c in children]

    rows, estimates = [], {}
    for name in estimators:
        vals = [r[name] for r in runs]
        ok = [v for v in vals if v is not None]
        est = np.array([v[0] for v in ok])
        estimates[name] = est
        failures = R - len(ok)
        if not ok:
            rows.append(EstimatorBias(name, None, true_psi, None, None, None, R, failures))
            continue
        mean = float(est.mean())
        cis = [v[1] for v in ok]
        coverage = None
        if len(ok) >= 2 and all(c is not None for c in cis):
            coverage = float(np.mean([lo <= true_psi <= hi for lo, hi in cis]))
        rows.append(EstimatorBias(
            name, mean, true_psi, abs(mean - true_psi) / abs(true_psi),
            float(est.std(ddof=1)) if len(ok) >= 2 else None, coverage, R, failures,
        ))
    return BiasReport(tuple(rows), n, R, seed, true_psi, estimates)
