"""When does one entangling layer stop paying off?

Run with ``python demos/01_noise_thresholds.py``.
"""

# %% [markdown]
# Local twirling (depth 0) gives a weight-k Pauli the shadow norm (q+1)^k.
# A single brickwork layer spreads the operator but also exposes it to one
# more round of noise.  Filled gate pairs gain from the layer, lone sites
# lose, so for dense operators there is a critical damping f_th below which
# depth 0 wins.

# %%
from shadow_twirl.closed_form import (
    pauli_threshold,
    renyi_threshold,
    shadow_norm_t0,
    shadow_norm_t1,
)

q = 2
f_th = pauli_threshold(q)
print(f"qubit threshold for dense operators: f_th = {f_th:.8f}")
print(f"check f^6 (f+2)^2 = {f_th**6 * (f_th + 2) ** 2:.12f} (should be 5)")

# %% [markdown]
# Compare depth 0 and depth 1 for three filled pairs (k = 6) on both sides of
# the threshold.

# %%
for f in (f_th - 0.01, f_th, f_th + 0.01):
    t0 = shadow_norm_t0(q, 6)
    t1 = shadow_norm_t1(q, f, 0, 3)
    print(f"f = {f:.4f}: depth 0 -> {t0:8.1f}   depth 1 -> {t1:8.1f}")

# %% [markdown]
# Renyi-entropy estimators sum over many Pauli terms of the SWAP operator,
# which makes them slightly more fragile: their thresholds sit higher.

# %%
print("q   pauli   " + "  ".join(f"n={n}  " for n in range(2, 6)))
for q in range(2, 7):
    row = [pauli_threshold(q)] + [renyi_threshold(q, n) for n in range(2, 6)]
    print(f"{q}   " + "  ".join(f"{v:.4f}" for v in row))
