# %% [markdown]
# Wild stable matchings
#
# A greedy construction that keeps pairing people with partners beyond
# everyone matched so far produces stable matchings whose edges grow
# exponentially long.

# %%
import numpy as np

from mallows_match import EdgeOracle, WildConfig, build_wild, build_wild_sharp
from mallows_match.wild import audit, fitted_slope

oracle = EdgeOracle(0.3, seed=5)
for variant in ("NotPerfect", "NotLocallyFinite", "LocallyFiniteWild"):
    res = build_wild(WildConfig(variant, steps=10), oracle)
    edges = [s.edge for s in res.steps if s.edge]
    print(f"{variant:18s} problems={len(audit(res, oracle))} edges={edges[:5]}")

# %% [markdown]
# Different rank sequences give different matchings.

# %%
for a in [(1,), (2,), (1, 3)]:
    res = build_wild(WildConfig("LocallyFiniteWild", a, 4), oracle)
    print(a, [s.edge for s in res.steps])

# %% [markdown]
# The sharp construction: log H_n grows roughly linearly in n.

# %%
q = 0.5
slopes = []
for seed in range(40):
    res = build_wild_sharp(14, EdgeOracle(1 - q, seed))
    slopes.append(fitted_slope(res.h_trace[1:]))
print("one trace:", res.h_trace)
print(f"median slope {np.nanmedian(slopes):.3f}, reference 2 log(1/q) = {2 * np.log(1 / q):.3f}")
