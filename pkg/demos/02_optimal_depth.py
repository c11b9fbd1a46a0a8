"""Optimal twirling depth under noise.

Run with ``python demos/02_optimal_depth.py`` (about ten seconds).
"""

# %% [markdown]
# Deeper circuits bring a dense Pauli's shadow norm from 3^k towards 2^k,
# but every layer adds noise.  The MPS engine evaluates the infinite chain,
# so we can scan depth directly.

# %%
import math

from shadow_twirl.meanfield import tstar_limit, tstar_meanfield
from shadow_twirl.mps import optimal_depth, shadow_norms_vs_depth, t_max

q, f, k = 2, 0.99, 16
norms = shadow_norms_vs_depth(q, f, k, 8)
for t, norm in enumerate(norms):
    print(f"t = {t}: ln(norm) / k = {math.log(norm) / k:.4f}")

# %% [markdown]
# The bulk of a very large operator gives an operator-independent bound
# t_max: no operator benefits from going deeper.

# %%
for f in (0.999, 0.99, 0.97, 0.95, 0.93):
    print(f"f = {f}: t_max = {t_max(q, f)}")

# %% [markdown]
# Small operators are dominated by their edges and want shallower circuits;
# t* grows with k and saturates at or below t_max.

# %%
f = 0.99
bound = t_max(q, f)
for k in (1, 2, 4, 8, 16, 32):
    scan = optimal_depth(q, f, k)
    print(f"k = {k:2d}: t* = {scan.t_best} (t_max = {bound})")

# %% [markdown]
# The mean-field estimate reproduces the trend, not the numbers.

# %%
for k in (10, 100, 1000, math.inf):
    print(f"k = {k}: mean-field t* = {tstar_meanfield(q, f, k).t_star:.2f}")
print(f"k -> inf limit: {tstar_limit(q, f):.2f}")
