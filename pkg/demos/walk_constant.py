#!/usr/bin/env python
# Survival probability of the upward-drifting counting walk.  The estimate
# should sit near 2*alpha - 1 once the drift is strong enough; at alpha = 1/2
# survival is a null event.

from contamlab.walks import estimate_stall_constant

TRUNCATION = 20_000
REPLICATES = 20_000

print(f"{'alpha':>6} {'estimate':>9} {'95% ci':>9} {'2a-1':>7}")
for alpha in (0.5, 0.55, 0.6, 0.75, 0.9, 0.99):
    est = estimate_stall_constant(alpha, TRUNCATION, REPLICATES, seed=11)
    limit = max(2 * alpha - 1, 0.0)
    print(f"{alpha:>6} {est.estimate:>9.4f} {est.ci_halfwidth:>9.4f} {limit:>7.3f}")
