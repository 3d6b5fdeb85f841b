"""Propensity weights, truncation, balance and overlap on one simulated sample.

    python demos/weights_and_balance.py
"""

from causalest.diagnostics import balance_table, overlap_coefficient, overlap_densities
from causalest.iptw import fit_propensity, ht_ate, make_weights, truncate_weights
from causalest.simulate import generate_dgp

sample = generate_dgp(5000, seed=11)
table = sample.table
print(f"n={table.n}, treated share {table.a.mean():.3f}, sample mean effect {sample.psi.mean():.4f}")

ps = fit_propensity(table)
print("\npropensity summary:", {k: round(v, 3) for k, v in ps.summary().items()
                                if isinstance(v, float)})
print(f"scores outside {ps.bounds}: {int(ps.near_violation.sum())}")

for kind in ("unstabilized", "stabilized"):
    ws = make_weights(ps, table.a, kind)
    s = ws.summary()
    print(f"{kind:>13} weights: mean {s['mean']:.3f}  max {s['max']:.2f}  "
          f"IPTW ATE {ht_ate(table, ws).value:.4f}")

trimmed = truncate_weights(make_weights(ps, table.a), 1, 99)
print(f"truncated to {tuple(round(b, 2) for b in trimmed.bounds)}: "
      f"IPTW ATE {ht_ate(table, trimmed).value:.4f}")

print("\nbalance before and after weighting")
print(balance_table(table, make_weights(ps, table.a)).to_frame().round(4).to_string())

treated, control = overlap_densities(ps, table.a)
print(f"\noverlap coefficient of the propensity densities: "
      f"{overlap_coefficient(treated, control):.3f}")
