#!/usr/bin/env python
"""Where does anchoring extra weight on the clean first round start to pay off?

Below the crossover contamination weight the uniform average wins; above it
the anchored average wins.  The certificate re-checks the grid pointwise.
"""

from contamlab.variance import (
    anchored_factor_curve,
    find_crossover_alpha,
    uniform_factor_curve,
)

t = 10
print(f"variance factors at t = {t}")
print(f"{'alpha':>6} {'uniform':>9} {'anchored':>9} {'winner':>9}")
for k in range(11):
    alpha = k / 10
    u = uniform_factor_curve(alpha, t)[-1]
    a = anchored_factor_curve(alpha, t)[-1]
    winner = "anchored" if a < u else "uniform"
    print(f"{alpha:>6} {u:>9.4f} {a:>9.4f} {winner:>9}")

cert = find_crossover_alpha(t, 0.01)
print()
print(f"crossover alpha on a 0.01 grid: {cert.alpha_star}")
print(f"certificate verifies: {cert.verify()}")
