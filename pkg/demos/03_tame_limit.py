# %% [markdown]
# Tame stable matchings of Z
#
# For each integer flow n there is a stable perfect matching of the whole
# line obtained as a limit of half-line matchings.  We sample it on a window
# with a quantified error bound, then look at its structure.

# %%
import numpy as np

from mallows_match import EdgeOracle, TameSampleConfig, flow_of, shift_ladder_check
from mallows_match.core import crossing_arrays
from mallows_match.samplers import tame_limit

oracle = EdgeOracle(0.5, seed=11)
r0 = tame_limit(TameSampleConfig(0, (-15, 15), 1e-6), oracle)
r1 = tame_limit(TameSampleConfig(1, (-15, 15), 1e-6), oracle)
print("m used:", r0.m, " error bound:", r0.error_bound)
print("flow of sigma_1 at 0.5:", flow_of(r1.matching, 0.5))

# %%
rep = shift_ladder_check(r0.matching, r1.matching)
print("exceptions:", rep.exceptions)
print("violations:", rep.violations or "none")
for i in rep.exceptions[:6]:
    print(i, r0.matching.forward[i], r1.matching.forward[i])

# %% [markdown]
# Crossing lengths grow at most logarithmically.

# %%
big = tame_limit(TameSampleConfig(0, (-2000, 2000), 1e-6), EdgeOracle(0.5, seed=12)).matching
pos, _, _, mx = crossing_arrays(big)
for lo, hi in [(10, 100), (100, 1000), (1000, 2000)]:
    sel = (pos > lo) & (pos < hi)
    print(f"i in ({lo}, {hi}): max M = {mx[sel].max()}, max M/log i = {(mx[sel] / np.log(pos[sel])).max():.2f}")
