"""Noisy classical-shadow sample complexity on qudit chains.

Engines for the shadow norm of Pauli strings and Renyi-entropy estimators
under shallow brickwork twirling circuits with depolarizing-type noise:
an exact enumeration oracle (:mod:`.exact`), an infinite-chain MPS engine
(:mod:`.mps`), closed forms at depth 0 and 1 (:mod:`.closed_form`), a
mean-field depth estimate (:mod:`.meanfield`) and a Monte Carlo
cross-check (:mod:`.monte_carlo`).
"""

from .closed_form import pauli_threshold, renyi_threshold, shadow_norm_t0, shadow_norm_t1
from .errors import (
    DepthCapReached,
    InputError,
    NonConvergenceError,
    NumericalDegeneracyError,
    ShadowTwirlError,
)
from .exact import CircuitParams, WeightVector, beta_pair, shadow_norm_pauli_exact
from .meanfield import lambert_w, tstar_meanfield
from .monte_carlo import McConfig, estimate_beta
from .mps import optimal_depth, renyi_shadow_norm, shadow_norm_pauli, t_max
from .noise import DiagonalNoiseSpec, effective_f, load_channel

__version__ = "0.1.0"

__all__ = [
    "CircuitParams",
    "DepthCapReached",
    "DiagonalNoiseSpec",
    "InputError",
    "McConfig",
    "NonConvergenceError",
    "NumericalDegeneracyError",
    "ShadowTwirlError",
    "WeightVector",
    "beta_pair",
    "effective_f",
    "estimate_beta",
    "lambert_w",
    "load_channel",
    "optimal_depth",
    "pauli_threshold",
    "renyi_shadow_norm",
    "renyi_threshold",
    "shadow_norm_pauli",
    "shadow_norm_pauli_exact",
    "shadow_norm_t0",
    "shadow_norm_t1",
    "t_max",
    "tstar_meanfield",
]
