"""Brute-force evolution of the weight-configuration distribution.

The full vector over all ``2**L`` weight configurations is kept in memory and
pushed through the brickwork dynamics gate by gate.  Configuration ``w`` is
stored at index ``sum(w[j] << j)``.  This is the oracle every other engine is
checked against, so it favours transparency over speed.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InputError
from .noise import check_damping, qudit_constants

__all__ = [
    "WeightVector",
    "CircuitParams",
    "NoisyDistribution",
    "evolve_distribution",
    "beta_pair",
    "shadow_norm_pauli_exact",
    "MAX_SITES",
]

MAX_SITES = 22


@dataclass(frozen=True)
class WeightVector:
    """Occupation pattern of a Pauli string (``True`` = non-identity site)."""

    bits: tuple

    def __post_init__(self):
        bits = tuple(bool(b) for b in self.bits)
        if not bits:
            raise InputError("a weight vector needs at least one site")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def contiguous(cls, k, offset=0, length=None):
        """``k`` occupied sites starting at ``offset``, padded to ``length``."""
        if k < 1:
            raise InputError(f"operator size k must be >= 1, got {k}")
        length = offset + k if length is None else length
        if length < offset + k:
            raise InputError("length too short for the requested operator")
        return cls(tuple(offset <= j < offset + k for j in range(length)))

    @classmethod
    def from_string(cls, s):
        """Parse ``"0110"`` / ``"o••o"`` style strings."""
        table = {"0": False, "1": True, "o": False, "∘": False, "x": True, "•": True}
        try:
            return cls(tuple(table[c] for c in s))
        except KeyError as exc:
            raise InputError(f"invalid weight character {exc.args[0]!r}") from None

    @property
    def L(self):
        return len(self.bits)

    @property
    def weight(self):
        return sum(self.bits)

    @property
    def mask(self):
        return sum(1 << j for j, b in enumerate(self.bits) if b)

    def __str__(self):
        return "".join("1" if b else "0" for b in self.bits)


@dataclass(frozen=True)
class CircuitParams:
    """Twirling-circuit parameters.

    ``alignment`` is the site (0 or 1, in the operator's own coordinates) at
    which the first layer's gate pairing starts.  With ``t0_noiseless`` the
    depth-zero circuit carries no noise at all, which is the convention the
    threshold comparisons use; for ``t >= 1`` the flag has no effect.
    """

    q: int
    f: float = 1.0
    t: int = 0
    boundary: str = "open"
    alignment: int = 0
    t0_noiseless: bool = True

    def __post_init__(self):
        qudit_constants(self.q)
        check_damping(self.f)
        if self.t < 0:
            raise InputError(f"depth t must be >= 0, got {self.t}")
        if self.boundary not in ("open", "periodic"):
            raise InputError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        if self.alignment not in (0, 1):
            raise InputError(f"alignment must be 0 or 1, got {self.alignment}")

    def with_f(self, f):
        return CircuitParams(self.q, f, self.t, self.boundary, self.alignment, self.t0_noiseless)


@dataclass(frozen=True)
class NoisyDistribution:
    """Trajectory-summed, noise-attenuated weight distribution after ``t`` layers.

    ``offset`` is the number of padding sites inserted to the left of the
    initial operator (open boundary); ``weights`` holds the popcount of every
    configuration index.
    """

    amplitudes: np.ndarray
    q: int
    f: float
    layers_applied: int
    L: int
    offset: int

    @property
    def weights(self):
        return _popcounts(self.L)

    def entry(self, w):
        """Amplitude of a configuration given in the padded chain's coordinates."""
        if isinstance(w, WeightVector):
            if w.L != self.L:
                raise InputError(f"configuration has {w.L} sites, chain has {self.L}")
            w = w.mask
        return float(self.amplitudes[w])

    def total(self):
        return float(self.amplitudes.sum())


@lru_cache(maxsize=8)
def _popcounts(L):
    idx = np.arange(1 << L, dtype=np.int64)
    counts = np.zeros(1 << L, dtype=np.int64)
    for j in range(L):
        counts += (idx >> j) & 1
    counts.setflags(write=False)
    return counts


def _layout(init, params):
    """Return the chain length, the padded initial mask and the left padding."""
    if params.boundary == "periodic":
        if init.L % 2:
            raise InputError(f"periodic boundary needs an even chain length, got L = {init.L}")
        return init.L, init.mask, 0
    # the light cone grows by at most one site per layer on each side
    reach = params.t + 1
    left = reach + (reach % 2)
    L = left + init.L + reach
    return L, init.mask << left, left


def _pairs(L, offset, periodic):
    if periodic:
        return [(j, (j + 1) % L) for j in range(offset, L + offset, 2)]
    return [(j, j + 1) for j in range(offset, L - 1, 2)]


def _apply_gate(x, L, i, j, a):
    """Average one two-site random gate over the pair (i, j) in place.

    An empty pair stays empty; an occupied pair ends as (o, x), (x, o) or (x, x)
    with probabilities a, a, 1 - 2a.
    """
    # site s lives on tensor axis L - 1 - s
    v = np.moveaxis(x.reshape((2,) * L), (L - 1 - i, L - 1 - j), (0, 1))
    occupied = v[0, 1] + v[1, 0] + v[1, 1]
    v[0, 1] = a * occupied
    v[1, 0] = a * occupied
    v[1, 1] = (1.0 - 2.0 * a) * occupied


def evolve_distribution(init, params, max_sites=MAX_SITES):
    """Evolve the point mass on ``init`` through ``params.t`` noisy layers.

    Each layer averages every gate of its pairing and is followed by the noise
    factor ``f**|w|`` of the resulting configuration; the initial configuration
    also picks up ``f**|w(0)|`` (skipped at ``t = 0`` when ``t0_noiseless``).
    """
    if init.weight == 0:
        raise InputError("initial weight vector must have at least one occupied site")
    L, mask, left = _layout(init, params)
    if L > max_sites:
        raise InputError(f"chain of {L} sites exceeds the exact-engine cap of {max_sites}")
    a = qudit_constants(params.q).a
    f = params.f
    noise = f ** _popcounts(L).astype(float) if f != 1.0 else None

    x = np.zeros(1 << L)
    x[mask] = 1.0
    if noise is not None and not (params.t == 0 and params.t0_noiseless):
        x *= noise
    periodic = params.boundary == "periodic"
    for layer in range(params.t):
        for i, j in _pairs(L, (params.alignment + left + layer) % 2, periodic):
            _apply_gate(x, L, i, j, a)
        if noise is not None:
            x *= noise
    x.setflags(write=False)
    return NoisyDistribution(x, params.q, f, params.t, L, left)


def _kappa_sum(dist):
    return float(np.dot(dist.amplitudes, (dist.q + 1.0) ** -dist.weights.astype(float)))


def beta_pair(init, params, max_sites=MAX_SITES):
    """Noiseless and noisy shadow-channel eigenvalues ``(beta, beta_eps)``."""
    noisy = _kappa_sum(evolve_distribution(init, params, max_sites))
    if params.f == 1.0:
        return noisy, noisy
    clean = _kappa_sum(evolve_distribution(init, params.with_f(1.0), max_sites))
    return clean, noisy


def shadow_norm_pauli_exact(init, params, max_sites=MAX_SITES):
    """Squared shadow norm ``beta / beta_eps**2`` of a Pauli with weight ``init``."""
    beta, beta_eps = beta_pair(init, params, max_sites)
    return beta / beta_eps**2
