#!/usr/bin/env python
# Decay rate of the uniformly weighted estimate switches regimes at alpha = 1/2:
# below it the variance falls like 1/t, above it like t^(-2(1-alpha)).

import numpy as np

from contamlab.variance import uniform_factor_curve, variance_sandwich

T_MAX = 10_000
fit_ts = np.arange(100, T_MAX + 1)

print(f"{'alpha':>6} {'var@100':>10} {'var@10000':>11} {'fitted slope':>13}")
for alpha in (0.0, 0.25, 0.5, 0.75, 0.9, 1.0):
    curve = uniform_factor_curve(alpha, T_MAX)
    slope = np.polyfit(np.log(fit_ts), np.log(curve[fit_ts - 1]), 1)[0]
    print(f"{alpha:>6} {curve[99]:>10.3e} {curve[-1]:>11.3e} {slope:>13.3f}")

print()
print("sandwich check at alpha=0.75:")
for t in (10, 100, 1000, 10_000):
    lo, hi = variance_sandwich(0.75, t)
    mid = uniform_factor_curve(0.75, t)[-1]
    print(f"  t={t:>6}: {lo:.4e} <= {mid:.4e} <= {hi:.4e}")
