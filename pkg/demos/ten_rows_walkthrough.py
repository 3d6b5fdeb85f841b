"""Walk through standardisation on the ten-row toy data set.

Run from the repository root::

    python demos/ten_rows_walkthrough.py
"""

import warnings
from pathlib import Path

from causalest import ColumnSpec, load_csv
from causalest.aipw import aipw_ate
from causalest.errors import SeparationWarning
from causalest.gformula import np_gformula_ate, np_gformula_att, stratum_table
from causalest.iptw import fit_propensity, ht_ate, make_weights
from causalest.tmle import tmle_ate

# every untreated row with C=0 died, so the saturated logistic fit separates
# there; the fitted risk is 1 up to IRLS tolerance
warnings.simplefilter("ignore", SeparationWarning)

DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "ten_rows.csv"

table = load_csv(DATA, ColumnSpec("Y", "A", ("C",)))
print(f"{table.n} rows, confounder C")

# stratum-specific risks and the stratum weights P(C = c)
strata = stratum_table(table)
for (c,), p, m1, m0 in zip(strata.keys, strata.p_w, strata.mean_treated, strata.mean_control):
    print(f"  C={c:g}: P(C)={p:.2f}  E[Y|A=1,C]={m1:.3f}  E[Y|A=0,C]={m0:.3f}")

ate = np_gformula_ate(table)
att = np_gformula_att(table)
print(f"\nstandardised ATE {ate.value:+.4f} (mu1={ate.mu1:.3f}, mu0={ate.mu0:.3f})")
print(f"standardised ATT {att.value:+.4f}")

# with a saturated propensity model the weighting estimator lands on the same number
weights = make_weights(fit_propensity(table, "saturated"), table.a)
print(f"IPTW (saturated g)     {ht_ate(table, weights).value:+.4f}")
print(f"AIPW (saturated Q, g)  {aipw_ate(table, terms='saturated', g_terms='saturated').value:+.4f}")

tm = tmle_ate(table, q_terms="saturated", g_terms="saturated")
print(f"TMLE (saturated)       {tm.value:+.4f}  eps=({tm.diagnostics['eps1']:.1e}, "
      f"{tm.diagnostics['eps2']:.1e})")
