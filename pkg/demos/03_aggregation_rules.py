"""How each aggregation rule weighs unequal workers.

With update counts (32, 1) the three rules disagree sharply: balanced
averaging splits the say evenly, update-count weighting hands almost all of
it to the fast worker, and inverse-count normalization does the opposite.
"""

import numpy as np

from hetsgd.aggregation import RULES, aggregate, aggregation_weights

taus = [32, 1]
print(f"update counts {taus}")
for rule in RULES:
    w = aggregation_weights(rule, taus)
    print(f"  {rule:<13} weights = ({w[0]:.4f}, {w[1]:.4f})")

# a one-dimensional round: both workers start from 1.0; the fast worker's
# 32 steps reach 3.0, the slow worker's single step reaches 1.2
start = np.array([1.0])
fast_model = np.array([3.0])
slow_model = np.array([1.2])
print(f"\nround start {start[0]}, fast model {fast_model[0]}, slow model {slow_model[0]}")
for rule in RULES:
    out = aggregate(rule, [fast_model, slow_model], taus, round_start=start)
    print(f"  {rule:<13} next global = {out[0]:.4f}")

print("""
Update-count weighting keeps nearly all of the fast worker's progress;
inverse normalization discards most of it, which is why it drags
convergence when every worker samples the same distribution.
""")

# degeneration: equal update counts make every weighting balanced
taus_eq = [16, 16, 16]
for rule in ("balanced", "tau_weighted"):
    print(f"equal counts, {rule:<13}: {aggregation_weights(rule, taus_eq)}")
