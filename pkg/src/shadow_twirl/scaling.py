"""Exponential scaling bases of shadow norms at optimal depth."""

import math

import numpy as np

from .errors import InputError
from .mps import DEFAULT_CHI, optimal_depth, renyi_optimal_depth

__all__ = ["fit_base", "pauli_base", "renyi_base"]


def fit_base(sizes, norms, per_site=1):
    """Least-squares base ``b`` of ``norm ~ b**(per_site * size)``.

    Parameters
    ----------
    sizes : sequence of int
        Operator or region sizes, at least two distinct values.
    norms : sequence of float
        Positive shadow norms at those sizes.
    per_site : int
        Exponent multiplier; 2 for the second Renyi entropy, whose variance
        grows like ``b**(2 |A|)``.
    """
    x = np.asarray(sizes, dtype=float)
    y = np.log(np.asarray(norms, dtype=float))
    if x.size < 2 or np.ptp(x) == 0:
        raise InputError("a scaling fit needs at least two distinct sizes")
    if not np.all(np.isfinite(y)):
        raise InputError("shadow norms must be positive and finite")
    slope = np.polyfit(x, y, 1)[0]
    return math.exp(slope / per_site)


def pauli_base(q, f, ks, chi=DEFAULT_CHI, t_cap=16):
    """Fitted base of contiguous-Pauli shadow norms, each at its own optimal depth."""
    norms = [min(optimal_depth(q, f, k, chi, t_cap).table) for k in ks]
    return fit_base(ks, norms)


def renyi_base(q, f, n, sizes, chi=DEFAULT_CHI, t_cap=8):
    """Fitted per-site base of the order-``n`` Renyi variance bound at optimal depth."""
    norms = [min(renyi_optimal_depth(q, f, n, A, chi, t_cap).table) for A in sizes]
    return fit_base(sizes, norms, per_site=n)
