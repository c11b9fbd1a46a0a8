"""Closed-form shadow norms at depth 0 and 1, and the noise thresholds.

Below the threshold ``f_th`` a single noisy entangling layer already costs
more than it saves, so local twirling (depth 0) is optimal.  Thresholds are
found by bisection on closed-form depth-0/depth-1 comparisons.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NonConvergenceError
from .noise import check_damping, qudit_constants

__all__ = [
    "ThresholdQuery",
    "SwapPattern",
    "bisect",
    "shadow_norm_t0",
    "shadow_norm_t1",
    "beta_pair_closed",
    "pauli_threshold",
    "swap_weight_count",
    "renyi_variance_t0",
    "renyi_variance_t1",
    "renyi_alpha",
    "renyi_threshold",
    "threshold",
    "swap_pattern_sum",
]


@dataclass(frozen=True)
class ThresholdQuery:
    """``kind`` is ``"pauli"`` or ``"renyi"``; ``n`` is the Renyi order."""

    q: int
    kind: str = "pauli"
    n: int = None

    def __post_init__(self):
        qudit_constants(self.q)
        if self.kind not in ("pauli", "renyi"):
            raise InputError(f"threshold kind must be 'pauli' or 'renyi', got {self.kind!r}")
        if self.kind == "renyi" and (self.n is None or self.n < 2):
            raise InputError(f"Renyi thresholds need an order n >= 2, got {self.n}")


@dataclass(frozen=True)
class SwapPattern:
    """Occupations ``w[j][s]`` of region site ``j`` in copy ``s``."""

    w: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(bool(b)) for b in row) for row in self.w)
        if rows and len({len(r) for r in rows}) != 1:
            raise InputError("every site of a SWAP pattern needs the same number of copies")
        object.__setattr__(self, "w", rows)

    @property
    def n_copies(self):
        return len(self.w[0]) if self.w else 0


def bisect(fun, lo, hi, tol=1e-12, maxiter=200):
    """Root of ``fun`` in ``[lo, hi]`` by bisection; endpoints must bracket it."""
    flo, fhi = fun(lo), fun(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NonConvergenceError(f"no sign change on [{lo}, {hi}]")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fmid = fun(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def shadow_norm_t0(q, k):
    """Depth-0 (local twirling, noiseless) shadow norm ``(q + 1)**k``."""
    qudit_constants(q)
    if k < 0:
        raise InputError(f"operator size k must be >= 0, got {k}")
    return float(q + 1) ** k


def _pair_factor(q, f):
    a = qudit_constants(q).a
    x = f / (q + 1.0)
    return 2.0 * a * x + (1.0 - 2.0 * a) * x * x


def shadow_norm_t1(q, f, k1, k2):
    """Depth-1 shadow norm of a Pauli whose first layer sees ``k1`` half-filled and ``k2`` filled pairs."""
    f = check_damping(f)
    if k1 < 0 or k2 < 0 or k1 + k2 == 0:
        raise InputError(f"need k1, k2 >= 0 and not both zero, got k1={k1}, k2={k2}")
    ratio = _pair_factor(q, 1.0) / _pair_factor(q, f) ** 2
    return f ** (-2 * (k1 + 2 * k2)) * ratio ** (k1 + k2)


def beta_pair_closed(q, f, k, t, t0_noiseless=True):
    """``(beta, beta_eps)`` of a contiguous weight-``k`` Pauli aligned with the first layer.

    Only depths 0 and 1 have closed forms.
    """
    f = check_damping(f)
    qudit_constants(q)
    if k < 1:
        raise InputError(f"operator size k must be >= 1, got {k}")
    if t == 0:
        beta = float(q + 1) ** -k
        return beta, (beta if t0_noiseless else beta * f**k)
    if t == 1:
        pairs = k // 2 + k % 2
        return _pair_factor(q, 1.0) ** pairs, f**k * _pair_factor(q, f) ** pairs
    raise InputError(f"closed forms exist only for t in {{0, 1}}, got t = {t}")


def _pauli_poly(q, f):
    return f**6 * (f * (q - 1) + 2) ** 2 - (q * q + 1)


def pauli_threshold(q, tol=1e-12):
    """Noise threshold for arbitrary operators (dense pairs, ``k1 -> 0``)."""
    qudit_constants(q)
    return bisect(lambda f: _pauli_poly(q, f), 0.0, 1.0, tol)


def swap_weight_count(q, n, pattern):
    """Number of Pauli terms of the cyclic-shift operator with occupation ``pattern``."""
    qudit_constants(q)
    if not isinstance(pattern, SwapPattern):
        pattern = SwapPattern(pattern)
    if pattern.w and pattern.n_copies != n:
        raise InputError(f"pattern has {pattern.n_copies} copies, expected n = {n}")
    Q = q * q - 1
    count = 1
    for row in pattern.w:
        s = sum(row)
        num = Q**s + Q * (-1) ** s
        if num % (q * q):
            raise ArithmeticError("non-integral SWAP term count")
        count *= num // (q * q)
    return count


def _renyi_t0_site(q, n):
    Q = q * q - 1
    return (Q * (-q) ** n + ((q + 1) * Q + 1) ** n) / q ** (2 * n)


def renyi_variance_t0(q, n, A_size):
    """Depth-0 variance bound for ``Tr(rho_A**n)``; a pure power of ``|A|``."""
    qudit_constants(q)
    if n < 2 or A_size < 0:
        raise InputError(f"need n >= 2 and |A| >= 0, got n={n}, |A|={A_size}")
    return _renyi_t0_site(q, n) ** A_size


def renyi_alpha(q, f):
    """Depth-1 shadow norm of a half-filled pair times ``f**2``."""
    f = check_damping(f)
    return (q + 1) ** 2 * (q * q + 1) / (f * f * (f * (q - 1) + 2) ** 2)


def _renyi_t1_pair(q, n, f):
    Q = q * q - 1
    x = renyi_alpha(q, f) / f**2
    g = 1.0 / f**2
    return (
        (1.0 + x * Q * (2.0 + Q * g)) ** n
        + 2.0 * Q * (1.0 + x * (q * q - 2 - Q * g)) ** n
        + Q * Q * (1.0 + x * (g - 2.0)) ** n
    )


def renyi_variance_t1(q, n, A_size, f):
    """Depth-1 variance bound for ``Tr(rho_A**n)`` with ``|A|`` even."""
    qudit_constants(q)
    if n < 2 or A_size < 0:
        raise InputError(f"need n >= 2 and |A| >= 0, got n={n}, |A|={A_size}")
    if A_size % 2:
        raise InputError(f"depth-1 closed form needs an even region size, got |A| = {A_size}")
    return (_renyi_t1_pair(q, n, f) / float(q) ** (4 * n)) ** (A_size // 2)


def renyi_threshold(q, n, tol=1e-12):
    """Noise threshold for the order-``n`` Renyi entropy.

    Both variances are pure powers of ``|A|``, so comparing a single pair of
    sites is exact.
    """
    ThresholdQuery(q, "renyi", n)
    target = math.log(renyi_variance_t0(q, n, 2))

    def gap(f):
        return math.log(renyi_variance_t1(q, n, 2, f)) - target

    lo = 0.5
    while gap(lo) <= 0.0:
        lo *= 0.5
        if lo < 1e-6:
            raise NonConvergenceError(f"no Renyi threshold bracket for q={q}, n={n}")
    return bisect(gap, lo, 1.0, tol)


def threshold(query):
    if query.kind == "pauli":
        return pauli_threshold(query.q)
    return renyi_threshold(query.q, query.n)


def swap_pattern_sum(q, n, A_size, ratio):
    """Brute-force variance bound from per-copy shadow norms ``ratio(bits) -> float``.

    Enumerates all ``2**(n*|A|)`` occupation patterns; used as a check on the
    sign-transform evaluation.
    """
    total = 0.0
    norm = float(q) ** (-2 * (n - 1) * A_size)
    for flat in range(1 << (n * A_size)):
        grid = np.array([(flat >> b) & 1 for b in range(n * A_size)]).reshape(A_size, n)
        c = swap_weight_count(q, n, SwapPattern(grid.tolist()))
        if c:
            total += c * math.prod(ratio(tuple(grid[:, s])) for s in range(n))
    return total * norm
