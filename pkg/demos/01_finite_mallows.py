# %% [markdown]
# Finite stable matchings and the Mallows law
#
# Males and females are both indexed by 0..n-1; a higher index is more
# attractive.  Each male/female pair is compatible independently with
# probability p.  Processing males from the top down, each one takes the
# best compatible female still free; that gives the unique stable matching.

# %%
from collections import Counter
from fractions import Fraction

import numpy as np

from mallows_match import EdgeOracle, stable_match_finite
from mallows_match.analysis import all_permutations, exact_conditional_law, mallows_pmf
from mallows_match.oracle import trial_seeds
from mallows_match.samplers import finite_batch, perfect_match_probability

# %%
m = stable_match_finite(range(6), range(6), EdgeOracle(0.5, seed=7))
print("pairs:", m.pairs())
print("perfect:", m.is_perfect_on_window())

# %% [markdown]
# How often is the matching perfect?  The closed form is prod_k (1 - q^k).

# %%
n, p = 6, 0.5
res = finite_batch(range(n), range(n), p, trial_seeds(1, 50_000))
perfect = (res >= 0).all(axis=1)
print(f"Monte Carlo {perfect.mean():.4f}   formula {perfect_match_probability(n, 1 - p):.4f}")

# %% [markdown]
# Conditional on being perfect, the permutation should be Mallows(q).

# %%
n = 4
res = finite_batch(range(n), range(n), p, trial_seeds(2, 100_000))
rows = res[(res >= 0).all(axis=1)]
freq = Counter(map(tuple, rows))
print("perm          empirical  mallows")
for perm in sorted(all_permutations(n), key=lambda t: -mallows_pmf(t, 1 - p))[:8]:
    print(f"{perm}  {freq[perm] / len(rows):.4f}     {mallows_pmf(perm, 1 - p):.4f}")

# %% [markdown]
# For n = 3 we can do it exactly: 512 edge sets, rational weights.

# %%
law = exact_conditional_law(3, Fraction(1, 2))
print("P(perfect) =", law.perfect_prob)
print(all(w == mallows_pmf(k, Fraction(1, 2)) for k, w in law.conditional.items()))
