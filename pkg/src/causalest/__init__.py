"""Estimators of the average treatment effect of a binary treatment.

Non-parametric and parametric G-formula, inverse-probability weighting,
augmented IPW and targeted maximum likelihood, plus bootstrap inference,
balance diagnostics and a simulation harness.
"""

__version__ = "0.1.0"

from .aipw import aipw_ate
from .dataset import ColumnSpec, ObservationTable, load_csv
from .diagnostics import balance_table, overlap_coefficient, overlap_densities
from .errors import (CausalEstError, ConfigError, ConvergenceError, DataError, InferenceError,
                     PositivityError, PositivityWarning, SeparationWarning, SingularityError)
from .gformula import (marginal_odds_ratio, marginal_risk_ratio, naive_regression_ate,
                       np_gformula_ate, np_gformula_att, parametric_gformula_ate)
from .inference import bc_interval, bootstrap, normal_interval, percentile_interval
from .iptw import (fit_propensity, ht_ate, iptw_ate, iptw_ra_ate, make_weights, msm_fit,
                   truncate_weights)
from .results import EffectEstimate
from .simulate import default_estimators, generate_dgp, monte_carlo
from .tmle import LearnerMenu, cv_select, ic_variance, tmle_ate, tmle_rr_or

__all__ = [
    "CausalEstError", "ColumnSpec", "ConfigError", "ConvergenceError", "DataError",
    "EffectEstimate", "InferenceError", "LearnerMenu", "ObservationTable", "PositivityError",
    "PositivityWarning", "SeparationWarning", "SingularityError", "aipw_ate", "balance_table",
    "bc_interval", "bootstrap", "cv_select", "default_estimators", "fit_propensity",
    "generate_dgp", "ht_ate", "ic_variance", "iptw_ate", "iptw_ra_ate", "load_csv",
    "make_weights", "marginal_odds_ratio", "marginal_risk_ratio", "monte_carlo", "msm_fit",
    "naive_regression_ate", "normal_interval", "np_gformula_ate", "np_gformula_att",
    "overlap_coefficient", "overlap_densities", "parametric_gformula_ate", "percentile_interval",
    "tmle_ate", "tmle_rr_or", "truncate_weights",
]
