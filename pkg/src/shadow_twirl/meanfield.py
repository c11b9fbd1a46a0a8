"""Mean-field estimate of the optimal depth ``t*(k, f)``.

The operator is modelled as a block of ``k + 2 v_B t`` sites, each occupied
with the relaxing bulk density ``n(t)``.  Balancing one more layer against
noise and edge growth gives ``exp(-gamma t) t**-1.5 = coeff_bulk + coeff_edge / k``,
solved with the Lambert W function.  ``coeff_bulk`` is the noise-vs-relaxation
constant and ``coeff_edge`` the growth-vs-relaxation constant.
"""

import math
from dataclasses import dataclass

from .errors import InputError
from .noise import check_damping, qudit_constants

__all__ = [
    "MeanFieldCoeffs",
    "MeanFieldDepth",
    "bulk_density",
    "lambert_w",
    "meanfield_coeffs",
    "tstar_meanfield",
    "tstar_limit",
]

_BRANCH = -1.0 / math.e


def lambert_w(x, tol=1e-15, maxiter=64):
    """Principal branch ``W0(x)`` for real ``x >= -1/e`` by Halley iteration."""
    x = float(x)
    if math.isnan(x) or x < _BRANCH:
        raise InputError(f"Lambert W is real only for x >= -1/e, got {x}")
    if x == 0.0:
        return 0.0
    if x == math.inf:
        return math.inf
    if x < -0.25:
        # branch-point series in p = sqrt(2 (e x + 1))
        p = math.sqrt(max(0.0, 2.0 * (math.e * x + 1.0)))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    elif x < 3.0:
        w = math.log1p(x) * (1.0 - math.log1p(math.log1p(x)) / (2.0 + math.log1p(x)))
    else:
        lx = math.log(x)
        w = lx - math.log(lx)
    for _ in range(maxiter):
        ew = math.exp(w)
        r = w * ew - x
        if r == 0.0 or w == -1.0:
            break
        wp1 = w + 1.0
        step = r / (ew * wp1 - (w + 2.0) * r / (2.0 * wp1))
        w -= step
        if abs(step) <= tol * (1.0 + abs(w)):
            break
    return w


def bulk_density(q, t):
    """Average occupation ``(1 - q**-2) + c t**-1.5 exp(-gamma t)`` of a relaxing dense operator.

    The tail is the large-``t`` asymptote; ``n(0) = 1`` is returned for the
    fully occupied initial block.
    """
    k = qudit_constants(q)
    if t < 0:
        raise InputError(f"depth t must be >= 0, got {t}")
    if t == 0:
        return 1.0
    return (1.0 - q**-2.0) + k.c_coeff * t**-1.5 * math.exp(-k.gamma * t)


@dataclass(frozen=True)
class MeanFieldCoeffs:
    q: int
    f: float
    coeff_bulk: float
    coeff_edge: float
    gamma: float
    c_coeff: float
    v_B: float


def meanfield_coeffs(q, f):
    f = check_damping(f)
    k = qudit_constants(q)
    q2 = q * q
    denom = (
        -2.0 * (f - 1.0) * q2 / (f * (q2 - 1) + 1.0)
        + (q2 / (q + 1.0) + 2.0 * (f - (q + 1.0)) * q2 / ((q + 1.0) * (f * (q - 1) + 1.0)))
        * (1.0 - math.exp(-k.gamma))
    ) * k.c_coeff
    if denom == 0.0:
        raise InputError(f"mean-field denominator vanishes at f = {f!r}")
    bulk = 2.0 * math.log((f * (q2 - 1) + 1.0) / q2) / denom + 0.0  # no -0.0 at f = 1
    edge = 2.0 * k.v_B * (2.0 * math.log((f * (q - 1) + 1.0) / q2) - math.log(1.0 / q)) / denom
    return MeanFieldCoeffs(q, f, bulk, edge, k.gamma, k.c_coeff, k.v_B)


@dataclass(frozen=True)
class MeanFieldDepth:
    """``t_star`` is 0 with ``valid = False`` where the mean field predicts no benefit."""

    t_star: float
    valid: bool
    coeffs: MeanFieldCoeffs


def _tstar(gamma, rhs):
    return 1.5 / gamma * lambert_w((2.0 * gamma / 3.0) * rhs ** (-2.0 / 3.0))


def tstar_meanfield(q, f, k):
    """Mean-field optimal depth for a contiguous weight-``k`` operator (``k = inf`` allowed)."""
    if not k > 0:
        raise InputError(f"operator size k must be positive, got {k}")
    c = meanfield_coeffs(q, f)
    rhs = c.coeff_bulk + (0.0 if math.isinf(k) else c.coeff_edge / k)
    if rhs <= 0.0:
        return MeanFieldDepth(0.0, False, c)
    return MeanFieldDepth(_tstar(c.gamma, rhs), True, c)


def tstar_limit(q, f):
    """``k -> inf`` limit of :func:`tstar_meanfield`; infinite without noise."""
    c = meanfield_coeffs(q, f)
    if c.coeff_bulk <= 0.0:
        return math.inf
    return _tstar(c.gamma, c.coeff_bulk)
