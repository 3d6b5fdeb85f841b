import os
from pathlib import Path

import numpy as np
import pytest
from scipy.special import expit

from causalest.dataset import ObservationTable

DATA_DIR = Path(__file__).parent / "data"


def rhc_path() -> Path | None:
    """Location of the RHC analytic CSV, or None when it is not available."""
    env = os.environ.get("RHC_CSV")
    for p in ([Path(env)] if env else []) + [DATA_DIR / "rhc.csv"]:
        if p.is_file():
            return p
    return None


def make_logit_table(n, seed, beta_a=(-0.3, 0.8, -0.5), beta_y=(-0.5, 0.7, 0.4, -0.6)):
    """Two confounders (binary, continuous), logistic treatment and outcome."""
    rng = np.random.default_rng(seed)
    w1 = rng.binomial(1, 0.4, n).astype(float)
    w2 = rng.normal(size=n)
    a = rng.binomial(1, expit(beta_a[0] + beta_a[1] * w1 + beta_a[2] * w2))
    y = rng.binomial(1, expit(beta_y[0] + beta_y[1] * a + beta_y[2] * w1 + beta_y[3] * w2))
    return ObservationTable.from_arrays(y, a, np.column_stack([w1, w2]), ["w1", "w2"])


def make_discrete_table(n, seed, levels=(2, 3)):
    """Integer-coded confounders; every (A, W) cell is populated for moderate n."""
    rng = np.random.default_rng(seed)
    w = np.column_stack([rng.integers(0, k, n) for k in levels]).astype(float)
    lin = -0.2 + 0.5 * w[:, 0] - 0.3 * w[:, 1]
    a = rng.binomial(1, expit(lin))
    y = rng.binomial(1, expit(-0.4 + 0.9 * a + 0.3 * w[:, 0] + 0.2 * w[:, 1] * a))
    return ObservationTable.from_arrays(y, a, w, [f"c{j}" for j in range(len(levels))])


@pytest.fixture
def logit_table():
    return make_logit_table(2000, 7)


@pytest.fixture
def discrete_table():
    return make_discrete_table(1500, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
