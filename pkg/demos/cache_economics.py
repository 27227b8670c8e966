#!/usr/bin/env python3
"""Expected compute per request as cache capacity grows.

Compares the two saturation families at equal small-capacity slope and
prints where the marginal FLOPs-per-GB payoff crosses a break-even price.
"""

import numpy as np

from tradeoffs import (
    CacheCostParams,
    ExponentialSaturation,
    PowerLaw,
    expected_compute,
    marginal_benefit,
)

cost = CacheCostParams(
    total_steps=50,
    step_cost_flops=1e9,
    reuse_depth=20,
    entry_size_gb=0.08,   # five latents at 720p
)

# Match initial slopes: d/dM at 0 is beta/s_e for exp, kappa*gamma for power.
exp_model = ExponentialSaturation(beta=0.04, entry_size_gb=cost.entry_size_gb)
pow_model = PowerLaw(kappa=0.25, gamma=2.0)

print(f"full cost {cost.full_cost_flops:g} FLOPs, "
      f"reuse saves {cost.reuse_savings_flops:g} on a hit\n")

print(f"{'GB':>6} {'hit(exp)':>9} {'E[C] exp':>10} {'hit(pow)':>9} {'E[C] pow':>10}")
for m in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0):
    a = expected_compute(cost, exp_model, m)
    b = expected_compute(cost, pow_model, m)
    print(f"{m:>6.1f} {a.hit_rate:>9.3f} {a.expected_cost_flops:>10.3g} "
          f"{b.hit_rate:>9.3f} {b.expected_cost_flops:>10.3g}")

# Where does the next GB stop paying for itself? Say memory is worth
# 2e9 FLOPs/GB to us; the exponential model crosses that line first.
PRICE = 2e9
print(f"\nmarginal FLOPs saved per extra GB (break-even at {PRICE:g}):")
for m in np.arange(0.0, 20.1, 2.5):
    me = marginal_benefit(cost, exp_model, float(m))
    mp = marginal_benefit(cost, pow_model, float(m))
    flag_e = " <-- below" if me < PRICE else ""
    flag_p = " <-- below" if mp < PRICE else ""
    print(f"  {m:5.1f} GB  exp {me:10.3g}{flag_e:12s} pow {mp:10.3g}{flag_p}")
