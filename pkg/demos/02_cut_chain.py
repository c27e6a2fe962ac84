# %% [markdown]
# Cuts in the semi-infinite matching
#
# On the half-line (-inf, 0] the stable matching is built from the top.
# A cut at i + 1/2 is a place no matching edge crosses.  Counting the males
# left single so far gives a Markov chain U; a cut appears when U drops to 0.

# %%
import numpy as np

from mallows_match import EdgeOracle, cut_positions, sample_semiinfinite
from mallows_match.qseries import euler_phi
from mallows_match.samplers import run_cut_chain

q = 0.5
m = sample_semiinfinite(0, (-30, 0), EdgeOracle(1 - q, seed=3))
cuts, _ = cut_positions(m)
print("cuts in [-30, 0]:", cuts)

# %% [markdown]
# Long-run cut frequency against (q)_inf, with both chain backends.

# %%
graph = run_cut_chain(50_000, EdgeOracle(1 - q, seed=4))
dist = run_cut_chain(50_000, np.random.default_rng(4), q=q)
print(f"graph-coupled {graph.cuts[1000:].mean():.4f}")
print(f"distributional {dist.cuts[1000:].mean():.4f}")
print(f"(q)_inf        {euler_phi(q):.4f}")

# %% [markdown]
# The conditional chance of a cut given U = u.

# %%
u, c = graph.u_before, graph.cuts
for k in range(4):
    want = (1 - q) * np.prod([1 - q**j for j in range(1, k + 1)])
    print(f"u={k}: {c[u == k].mean():.4f} vs {want:.4f}  ({(u == k).sum()} visits)")
