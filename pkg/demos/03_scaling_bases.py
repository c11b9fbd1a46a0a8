"""Exponential scaling of the sample complexity at optimal depth.

Run with ``python demos/03_scaling_bases.py`` (under a minute).
"""

# %% [markdown]
# At optimal depth the shadow norm still grows like b^k for Paulis and like
# b^(2|A|) for the purity.  Noise pushes b from the noiseless value towards
# the local-twirling value at threshold.

# %%
import math

from shadow_twirl.closed_form import pauli_threshold, renyi_threshold
from shadow_twirl.mps import optimal_depth, renyi_optimal_depth
from shadow_twirl.scaling import fit_base

q = 2
ks = list(range(12, 25))
for f in (1.0, 0.98, 0.96, pauli_threshold(q) + 1e-3):
    norms = [min(optimal_depth(q, f, k).table) for k in ks]
    print(f"Pauli, f = {f:.4f}: b = {fit_base(ks, norms):.3f}")

# %%
sizes = list(range(2, 13))
for f in (1.0, renyi_threshold(q, 2) + 1e-3):
    norms = [min(renyi_optimal_depth(q, f, 2, A, t_cap=8).table) for A in sizes]
    print(f"purity, f = {f:.4f}: b = {fit_base(sizes, norms, per_site=2):.3f}")

# %% [markdown]
# The same numbers come out of the command line:
#
#     shadow-twirl scan --q 2 --f 1,0.98,0.96,th+0.001 --k 2:24 --t opt --fit --fit-min 12
