"""Backward evolution of the kappa vector as an infinite two-site MPS.

The vector ``kappa_w = (q + 1)**-|w|`` is a product state.  Pulling it back
through the brickwork layers (each one noise-dressed, see :func:`build_gate`)
gives a translation-invariant MPS with a two-site unit cell ``(A, B)``.
Contracting that MPS against a weight pattern, with the boundary fixed points
of the empty transfer matrix ``A[0] @ B[0]`` at both ends, yields the shadow
channel eigenvalue of any Pauli string on the infinite chain.

Tensor layout is ``(physical, left bond, right bond)`` with physical index
0 = identity site, 1 = occupied site.  The contraction cell ``(A, B)`` is the
pair acted on by the first forward layer of the circuit.
"""

import logging
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import DepthCapReached, InputError, NonConvergenceError, NumericalDegeneracyError
from .exact import WeightVector
from .noise import check_damping, qudit_constants

logger = logging.getLogger(__name__)

__all__ = [
    "TransferGate",
    "EvolvedKappa",
    "FixedPointPair",
    "DepthScan",
    "build_gate",
    "evolve_kappa",
    "kappa_series",
    "boundary_fixpoint",
    "beta_pattern",
    "beta_patterns",
    "pauli_pattern",
    "beta_pair_pauli",
    "shadow_norm_pauli",
    "shadow_norms_vs_depth",
    "occupied_rate",
    "t_max",
    "optimal_depth",
    "renyi_shadow_norm",
    "renyi_optimal_depth",
    "DEFAULT_CHI",
]

DEFAULT_CHI = 512
# singular values below this fraction of the largest one are exact zeros up to rounding
SVD_CUTOFF = 1e-14
POWER_TOL = 1e-12
POWER_MAXITER = 20000
RENYI_MAX_SITES = 12
# each layer costs O(chi**3); deeper circuits are far past any optimum
MAX_DEPTH = 256


@dataclass(frozen=True)
class TransferGate:
    """Noise-dressed two-site weight update over the basis (oo, ox, xo, xx).

    ``entries[n, m]`` is the weight carried from input configuration ``m`` to
    output ``n``: random-gate averaging followed by one noise layer.
    """

    entries: np.ndarray
    q: int
    f: float


def build_gate(q, f):
    a = qudit_constants(q).a
    f = check_damping(f)
    occupied = np.array([0.0, f * a, f * a, f * f * (1.0 - 2.0 * a)])
    entries = np.zeros((4, 4))
    entries[0, 0] = 1.0
    entries[:, 1:] = occupied[:, None]
    entries.setflags(write=False)
    return TransferGate(entries, q, f)


@dataclass(frozen=True)
class EvolvedKappa:
    """Unit cell of the kappa MPS pulled back through ``layers`` layers.

    ``parity`` is the pairing the next pull-back step of the underlying ladder
    would act on (0 = inside the stored cell, 1 = across cells); it equals
    ``layers % 2``.  ``truncation_log`` holds the discarded fraction of squared
    singular-value weight for every step.
    """

    A: np.ndarray
    B: np.ndarray
    q: int
    f: float
    chi: int
    layers: int
    parity: int
    truncation_log: tuple = field(default=())

    @property
    def bond_dims(self):
        return self.A.shape[1], self.A.shape[2]


@dataclass(frozen=True)
class FixedPointPair:
    """Dominant left/right eigenvectors of ``A[0] @ B[0]``, with ``E_l @ E_r = 1``."""

    E_l: np.ndarray
    E_r: np.ndarray
    mu_empty: float
    iterations: int = 0


def _initial_tensor(q):
    t = np.array([1.0, 1.0 / (q + 1.0)]).reshape(2, 1, 1)
    return t


def _pull_back_pair(X, Y, gate_t, chi, layer):
    """Apply the transposed gate to the pair ``X Y`` and split it again by SVD."""
    dl, dr = X.shape[1], Y.shape[2]
    theta = np.einsum("alb,cbr->aclr", X, Y).reshape(4, dl, dr)
    theta = np.tensordot(gate_t, theta, axes=(1, 0)).reshape(2, 2, dl, dr)
    mat = theta.transpose(0, 2, 1, 3).reshape(2 * dl, 2 * dr)
    try:
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        raise NumericalDegeneracyError(layer) from None
    if not np.all(np.isfinite(s)):
        raise NumericalDegeneracyError(layer, "non-finite singular values")
    if s[0] == 0.0:
        raise NumericalDegeneracyError(layer, "vanishing two-site tensor")
    keep = int(np.count_nonzero(s > SVD_CUTOFF * s[0]))
    keep = max(1, min(keep, chi))
    weight = s @ s
    discarded = float(s[keep:] @ s[keep:] / weight)
    root = np.sqrt(s[:keep])
    X_new = (u[:, :keep] * root).reshape(2, dl, keep)
    Y_new = (root[:, None] * vh[:keep]).reshape(keep, 2, dr).transpose(1, 0, 2)
    return np.ascontiguousarray(X_new), np.ascontiguousarray(Y_new), discarded


class _Ladder:
    """Incrementally pulled-back kappa MPS; depth ``t`` is read off after ``t`` steps.

    The initial product state is invariant under one-site translations, so
    starting every depth with the intra-cell pairing only relabels the two
    sublattices: after an even number of steps the roles of ``A`` and ``B``
    are swapped.  One ladder therefore serves every depth.
    """

    def __init__(self, q, f, chi):
        self.q, self.f, self.chi = q, f, chi
        self.gate_t = build_gate(q, f).entries.T.copy()
        A = _initial_tensor(q)
        self.A, self.B = A, A.copy()
        self.log = []
        self.rungs = [self._snapshot()]
        self.lock = threading.Lock()

    def _snapshot(self):
        t = len(self.log)
        if t % 2:
            A, B = self.A, self.B
        else:
            A, B = self.B, self.A
        A, B = A.copy(), B.copy()
        A.setflags(write=False)
        B.setflags(write=False)
        return EvolvedKappa(A, B, self.q, self.f, self.chi, t, t % 2, tuple(self.log))

    def get(self, t):
        with self.lock:
            while len(self.rungs) <= t:
                layer = len(self.log) + 1
                if layer % 2:
                    self.A, self.B, d = _pull_back_pair(self.A, self.B, self.gate_t, self.chi, layer)
                else:
                    self.B, self.A, d = _pull_back_pair(self.B, self.A, self.gate_t, self.chi, layer)
                self.log.append(d)
                self.rungs.append(self._snapshot())
            return self.rungs[t]


_LADDERS = {}
_LADDERS_LOCK = threading.Lock()


def _ladder(q, f, chi):
    key = (q, float(f), int(chi))
    with _LADDERS_LOCK:
        ladder = _LADDERS.get(key)
        if ladder is None:
            if len(_LADDERS) > 64:
                _LADDERS.clear()
            ladder = _LADDERS[key] = _Ladder(q, float(f), int(chi))
    return ladder


def _check_chi(chi):
    if chi < 4:
        raise InputError(f"bond dimension cap chi must be >= 4, got {chi}")
    return int(chi)


def evolve_kappa(q, f, t, chi=DEFAULT_CHI):
    """Kappa MPS pulled back through ``t`` noisy layers, bond dimension <= ``chi``.

    Results are memoized per ``(q, f, chi)``; the returned tensors are read-only.
    """
    qudit_constants(q)
    f = check_damping(f)
    if not 0 <= t <= MAX_DEPTH:
        raise InputError(f"depth t must lie in [0, {MAX_DEPTH}], got {t}")
    return _ladder(q, f, _check_chi(chi)).get(t)


def kappa_series(q, f, t_last, chi=DEFAULT_CHI):
    """``[evolve_kappa(q, f, t, chi) for t in 0..t_last]`` sharing one ladder."""
    if not 0 <= t_last <= MAX_DEPTH:
        raise InputError(f"depth t must lie in [0, {MAX_DEPTH}], got {t_last}")
    ladder = _ladder(q, check_damping(f), _check_chi(chi))
    return [ladder.get(t) for t in range(t_last + 1)]


def _power_iteration(M, tol=POWER_TOL, maxiter=POWER_MAXITER):
    D = M.shape[0]
    v = np.linspace(1.0, 2.0, D)
    v /= np.linalg.norm(v)
    mu = 0.0
    for it in range(1, maxiter + 1):
        w = M @ v
        mu = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            raise NonConvergenceError("power iteration collapsed onto the null space")
        if np.linalg.norm(w - mu * v) <= tol * nw:
            return w / nw, mu, it
        v = w / nw
    raise NonConvergenceError(f"power iteration did not converge in {maxiter} iterations")


_FIXPOINTS = {}


def boundary_fixpoint(ek):
    """Left/right fixed points of the empty transfer matrix ``A[0] @ B[0]``.

    Cached per kappa object; ladder rungs are long-lived and read-only.
    """
    hit = _FIXPOINTS.get(id(ek))
    if hit is not None and hit[0] is ek:
        return hit[1]
    fp = _boundary_fixpoint(ek)
    if len(_FIXPOINTS) > 4096:
        _FIXPOINTS.clear()
    _FIXPOINTS[id(ek)] = (ek, fp)
    return fp


def _boundary_fixpoint(ek):
    M = ek.A[0] @ ek.B[0]
    if not np.all(np.isfinite(M)):
        raise NonConvergenceError("empty transfer matrix has non-finite entries")
    E_r, mu_r, it_r = _power_iteration(M)
    E_l, mu_l, it_l = _power_iteration(M.T)
    overlap = E_l @ E_r
    if abs(overlap) < 1e-300:
        raise NonConvergenceError("left and right fixed points are orthogonal")
    return FixedPointPair(E_l / overlap, E_r, mu_r, max(it_r, it_l))


def pauli_pattern(k, alignment=0):
    """Weight bits of a contiguous size-``k`` operator, padded to whole cells."""
    bits = [False] * alignment + [True] * k
    if len(bits) % 2:
        bits.append(False)
    return WeightVector(tuple(bits))


def _bits(pattern):
    if isinstance(pattern, WeightVector):
        return pattern.bits
    if isinstance(pattern, str):
        return WeightVector.from_string(pattern).bits
    return tuple(bool(b) for b in pattern)


def beta_pattern(ek, fp, pattern, f):
    """``f**|w| <E_l| prod_j A[w_2j] B[w_2j+1] |E_r>`` for a cell-aligned pattern.

    Each cell's transfer matrix is divided by ``mu_empty`` so the empty
    pattern evaluates to exactly 1.
    """
    bits = _bits(pattern)
    if len(bits) % 2:
        raise InputError(
            f"pattern of length {len(bits)} does not tile the two-site unit cell; pad it with identity sites"
        )
    vec = fp.E_l
    for j in range(0, len(bits), 2):
        vec = (vec @ ek.A[int(bits[j])]) @ ek.B[int(bits[j + 1])] / fp.mu_empty
    return float(f ** sum(bits) * (vec @ fp.E_r))


def beta_patterns(ek, fp, n_sites, f):
    """Evaluate :func:`beta_pattern` for all ``2**n_sites`` patterns at once.

    Returns an array of shape ``(2,) * n_sites`` whose axis ``j`` is the
    occupation of site ``j``; an odd trailing site is padded with identity.
    """
    vecs = fp.E_l[None, :]
    for j in range(0, n_sites, 2):
        second = (0, 1) if j + 1 < n_sites else (0,)
        blocks = [
            vecs @ (ek.A[w1] @ ek.B[w2]) / fp.mu_empty for w1 in (0, 1) for w2 in second
        ]
        vecs = np.stack(blocks, axis=1).reshape(-1, vecs.shape[1])
    vals = (vecs @ fp.E_r).reshape((2,) * n_sites)
    weight = np.zeros((2,) * n_sites)
    for j in range(n_sites):
        shape = [1] * n_sites
        shape[j] = 2
        weight = weight + np.arange(2).reshape(shape)
    return vals * f**weight


def _eigen_pair(q, f, t, chi):
    """Evolved kappa and boundary fixed points at depth ``t`` (memoized upstream)."""
    ek = evolve_kappa(q, f, t, chi)
    return ek, boundary_fixpoint(ek)


def beta_pair_pauli(q, f, k, t, chi=DEFAULT_CHI, alignment=0, t0_noiseless=True):
    """Noiseless and noisy eigenvalues ``(beta, beta_eps)`` of a contiguous weight-``k`` Pauli."""
    f = check_damping(f)
    if k < 1:
        raise InputError(f"operator size k must be >= 1, got {k}")
    pattern = pauli_pattern(k, alignment)
    beta = beta_pattern(*_eigen_pair(q, 1.0, t, chi), pattern, 1.0)
    if f == 1.0 or (t == 0 and t0_noiseless):
        return beta, beta
    return beta, beta_pattern(*_eigen_pair(q, f, t, chi), pattern, f)


def shadow_norm_pauli(q, f, k, t, chi=DEFAULT_CHI, alignment=0, t0_noiseless=True):
    """Squared shadow norm of a contiguous weight-``k`` Pauli on the infinite chain."""
    beta, beta_eps = beta_pair_pauli(q, f, k, t, chi, alignment, t0_noiseless)
    return beta / beta_eps**2


def shadow_norms_vs_depth(q, f, k, t_last, chi=DEFAULT_CHI, alignment=0, t0_noiseless=True):
    """Shadow norms for depths ``0..t_last`` as a list."""
    return [shadow_norm_pauli(q, f, k, t, chi, alignment, t0_noiseless) for t in range(t_last + 1)]


def _dominant_eigenvalue(M, what):
    ev = np.linalg.eigvals(M)
    if not np.all(np.isfinite(ev)):
        raise NonConvergenceError(f"eigen-solver failed for the {what} transfer matrix")
    order = np.argsort(-np.abs(ev))
    lead = ev[order[0]]
    if len(ev) > 1 and abs(ev[order[1]]) >= abs(lead) * (1.0 - 1e-9) and abs(ev[order[1]] - lead) > 0:
        logger.warning("near-degenerate dominant eigenvalues %s, %s (%s)", lead, ev[order[1]], what)
    if abs(lead.imag) > 1e-9 * abs(lead) or lead.real <= 0:
        raise NonConvergenceError(f"dominant eigenvalue {lead} of the {what} transfer matrix is not positive")
    return float(lead.real)


def occupied_rate(ek_noisy, ek_noiseless, f):
    """Per-site log shadow-norm growth rate of a dense operator of diverging size.

    ``0.5 * ln(mu) - ln(mu_eps) - 2 * ln(f)`` where ``mu``/``mu_eps`` are the
    dominant eigenvalues of ``A[1] @ B[1]`` (two sites) of the noiseless and
    noisy MPS, each normalized by the empty-sector eigenvalue.  The ``-2 ln f``
    term is the initial noise layer.
    """
    if ek_noisy.layers != ek_noiseless.layers:
        raise InputError("noisy and noiseless kappa must be evolved to the same depth")
    rates = []
    for ek in (ek_noiseless, ek_noisy):
        mu0 = boundary_fixpoint(ek).mu_empty
        rates.append(_dominant_eigenvalue(ek.A[1] @ ek.B[1], "occupied") / mu0)
    mu, mu_eps = rates
    return 0.5 * math.log(mu) - math.log(mu_eps) - 2.0 * math.log(f)


@dataclass(frozen=True)
class DepthScan:
    """Result of a depth scan: the optimum and every value evaluated."""

    t_best: int
    table: tuple
    capped: bool = False


def _rate_at(q, f, t, chi, t0_noiseless):
    if t == 0 and t0_noiseless:
        return math.log(q + 1.0)
    return occupied_rate(evolve_kappa(q, f, t, chi), evolve_kappa(q, 1.0, t, chi), f)


def t_max(q, f, chi=DEFAULT_CHI, t_cap=64, patience=3, t0_noiseless=True):
    """Depth minimizing :func:`occupied_rate`; bounds the optimal depth of any operator.

    The scan stops once the rate has risen above the running minimum for
    ``patience`` consecutive depths.  Ties go to the smaller depth; 0 is
    returned when one layer already costs more than local twirling.

    Raises
    ------
    DepthCapReached
        When the minimum is not bracketed before ``t_cap``; always the case
        without noise, whose rate decreases forever.
    """
    qudit_constants(q)
    f = check_damping(f)
    if f == 1.0:
        raise DepthCapReached(t_cap, best_t=None, table=())
    table = []
    best_t, best = 0, math.inf
    for t in range(t_cap + 1):
        r = _rate_at(q, f, t, chi, t0_noiseless)
        table.append(r)
        if r < best:
            best_t, best = t, r
        elif t - best_t >= patience:
            return best_t
    raise DepthCapReached(t_cap, best_t=best_t, table=tuple(table))


def optimal_depth(q, f, k, chi=DEFAULT_CHI, t_cap=16, alignment=0, t0_noiseless=True):
    """Depth ``t*`` minimizing the shadow norm of a contiguous weight-``k`` Pauli.

    The scan covers ``0..min(t_cap, t_max + 2)``; without noise ``t_max`` is
    unbounded and the whole range up to ``t_cap`` is scanned.
    """
    f = check_damping(f)
    try:
        bound = t_max(q, f, chi, t_cap=max(t_cap, 64), t0_noiseless=t0_noiseless)
    except DepthCapReached:
        bound = None
    t_last = t_cap if bound is None else min(t_cap, bound + 2)
    table = tuple(shadow_norms_vs_depth(q, f, k, t_last, chi, alignment, t0_noiseless))
    t_best = int(np.argmin(table))
    if bound is not None and t_best > bound:
        raise AssertionError(f"optimal depth {t_best} exceeds t_max = {bound}")
    capped = bound is None and t_best == t_last
    return DepthScan(t_best, table, capped)


def renyi_shadow_norm(q, f, n, A_size, t, chi=DEFAULT_CHI, t0_noiseless=True):
    """Variance bound for estimating ``Tr(rho_A**n)`` of a contiguous region ``A``.

    Sums, over all occupation patterns of the ``n`` SWAP copies, the number of
    Pauli terms with that pattern times the product of per-copy shadow norms.
    The count factorizes over sites into a transform with kernel
    ``[[1, q**2 - 1], [1, -1]]``, leaving a sum over per-site signs.
    """
    f = check_damping(f)
    if n < 2:
        raise InputError(f"Renyi order n must be >= 2, got {n}")
    if A_size < 0 or A_size > RENYI_MAX_SITES:
        raise InputError(f"region size |A| must lie in [0, {RENYI_MAX_SITES}], got {A_size}")
    if A_size == 0:
        return 1.0
    ek, fp = _eigen_pair(q, 1.0, t, chi)
    beta = beta_patterns(ek, fp, A_size, 1.0)
    if f == 1.0 or (t == 0 and t0_noiseless):
        beta_eps = beta
    else:
        beta_eps = beta_patterns(*_eigen_pair(q, f, t, chi), A_size, f)
    ratio = beta / beta_eps**2

    Q = q * q - 1
    kernel = np.array([[1.0, Q], [1.0, -1.0]])
    s = ratio
    for j in range(A_size):
        s = np.moveaxis(np.tensordot(kernel, s, axes=(1, j)), 0, j)
    signs = np.zeros((2,) * A_size)
    for j in range(A_size):
        shape = [1] * A_size
        shape[j] = 2
        signs = signs + np.arange(2).reshape(shape)
    terms = (float(Q) ** signs * s**n).ravel()
    return math.fsum(terms.tolist()) / float(q) ** (2 * n * A_size)


def renyi_optimal_depth(q, f, n, A_size, chi=DEFAULT_CHI, t_cap=16, t0_noiseless=True):
    """Depth minimizing :func:`renyi_shadow_norm`, scanned like :func:`optimal_depth`."""
    f = check_damping(f)
    try:
        bound = t_max(q, f, chi, t_cap=max(t_cap, 64), t0_noiseless=t0_noiseless)
    except DepthCapReached:
        bound = None
    t_last = t_cap if bound is None else min(t_cap, bound + 2)
    table = tuple(renyi_shadow_norm(q, f, n, A_size, t, chi, t0_noiseless) for t in range(t_last + 1))
    t_best = int(np.argmin(table))
    return DepthScan(t_best, table, bound is None and t_best == t_last)
