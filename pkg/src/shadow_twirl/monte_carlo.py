"""Monte Carlo sampling of weight trajectories.

Each trajectory resamples every occupied gate pair to (o, x), (x, o) or
(x, x) with probabilities ``a``, ``a``, ``1 - 2a`` and records the total
weight it accumulated.  Averaging ``f**w_tot * (q + 1)**-|w(t)|`` gives an
unbiased estimate of the noisy eigenvalue, independent of the deterministic
engines.

Samples are drawn in fixed-size batches, each from its own Philox stream
keyed by ``(seed, batch index)``, so estimates do not depend on how many
worker threads run the batches.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .exact import _layout, _pairs
from .noise import qudit_constants

__all__ = ["McConfig", "McEstimate", "sample_trajectory", "estimate_beta", "estimate_betas",
           "estimate_series", "rng_for_batch"]

BATCH = 8192


@dataclass(frozen=True)
class McConfig:
    """Sampling configuration; ``params`` is the default circuit when none is passed."""

    samples: int = 100_000
    seed: int = 0
    params: object = None
    threads: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise InputError(f"need at least one sample, got {self.samples}")
        if not 0 <= self.seed < 2**64:
            raise InputError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class McEstimate:
    """Sample means and standard errors of the noiseless and noisy eigenvalues.

    ``log_norm_stderr`` propagates both errors, including their covariance,
    to ``ln(beta) - 2 ln(beta_eps)``.
    """

    beta: float
    beta_stderr: float
    beta_eps: float
    beta_eps_stderr: float
    log_norm: float
    log_norm_stderr: float
    samples: int

    @property
    def shadow_norm(self):
        return math.exp(self.log_norm)

    @property
    def relative_error(self):
        """Relative standard error of the shadow norm."""
        return self.log_norm_stderr


def rng_for_batch(seed, batch):
    ss = np.random.SeedSequence(seed, spawn_key=(batch,))
    return np.random.Generator(np.random.Philox(ss))


def sample_trajectory(init, params, rng):
    """One trajectory: ``(w_tot, final_weight)``, with ``w_tot`` summed over layers 0..t."""
    if init.weight == 0:
        raise InputError("initial weight vector must have at least one occupied site")
    L, mask, left = _layout(init, params)
    x = np.array([(mask >> j) & 1 for j in range(L)], dtype=bool)
    a = qudit_constants(params.q).a
    periodic = params.boundary == "periodic"
    w_tot = int(x.sum())
    for layer in range(params.t):
        for i, j in _pairs(L, (params.alignment + left + layer) % 2, periodic):
            if x[i] or x[j]:
                u = rng.random()
                x[i] = u >= a
                x[j] = not (a <= u < 2 * a)
        w_tot += int(x.sum())
    return w_tot, int(x.sum())


def _run_batch(init_bits, pair_layers, a, q, f, t0_noiseless, rng, size):
    """Per-depth sums of (c, c*c, n, n*n, c*n) with c, n the clean and noisy weights.

    Row ``d`` describes the same trajectories truncated after ``d`` layers.
    """
    x = np.tile(init_bits, (size, 1))
    weight = x.sum(axis=1)
    w_tot = weight.astype(np.int64)
    rows = []
    for d in range(len(pair_layers) + 1):
        if d:
            i, j = pair_layers[d - 1]
            occ = x[:, i] | x[:, j]
            u = rng.random(occ.shape)
            x[:, i] = occ & (u >= a)
            x[:, j] = occ & ~((u >= a) & (u < 2 * a))
            weight = x.sum(axis=1)
            w_tot += weight
        clean = (q + 1.0) ** -weight.astype(float)
        noisy = clean if (d == 0 and t0_noiseless) else clean * f ** w_tot.astype(float)
        rows.append([
            math.fsum(clean),
            math.fsum(clean * clean),
            math.fsum(noisy),
            math.fsum(noisy * noisy),
            math.fsum(clean * noisy),
        ])
    return rows


def _summarize(sums, n):
    s_c, s_cc, s_n, s_nn, s_cn = sums
    mean_c, mean_n = s_c / n, s_n / n
    denom = max(n - 1, 1)
    var_c = max(s_cc - n * mean_c**2, 0.0) / denom
    var_n = max(s_nn - n * mean_n**2, 0.0) / denom
    cov = (s_cn - n * mean_c * mean_n) / denom
    # delta method on ln(beta) - 2 ln(beta_eps)
    var_log = (var_c / mean_c**2 + 4.0 * var_n / mean_n**2 - 4.0 * cov / (mean_c * mean_n)) / n
    return McEstimate(
        beta=mean_c,
        beta_stderr=math.sqrt(var_c / n),
        beta_eps=mean_n,
        beta_eps_stderr=math.sqrt(var_n / n),
        log_norm=math.log(mean_c) - 2.0 * math.log(mean_n),
        log_norm_stderr=math.sqrt(max(var_log, 0.0)),
        samples=n,
    )


def estimate_series(init, params, mc):
    """Estimates at every depth ``0..params.t`` from one shared set of trajectories.

    Sharing the trajectories makes differences between neighbouring depths
    far less noisy than independent runs would, which is what a depth scan
    needs.
    """
    params = mc.params if params is None else params
    if params is None:
        raise InputError("no circuit parameters given")
    if init.weight == 0:
        raise InputError("initial weight vector must have at least one occupied site")
    L, mask, left = _layout(init, params)
    init_bits = np.array([(mask >> j) & 1 for j in range(L)], dtype=bool)
    periodic = params.boundary == "periodic"
    pair_layers = []
    for layer in range(params.t):
        pairs = _pairs(L, (params.alignment + left + layer) % 2, periodic)
        pair_layers.append((np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])))
    a = qudit_constants(params.q).a

    sizes = [BATCH] * (mc.samples // BATCH)
    if mc.samples % BATCH:
        sizes.append(mc.samples % BATCH)

    def job(b):
        return _run_batch(init_bits, pair_layers, a, params.q, params.f, params.t0_noiseless,
                          rng_for_batch(mc.seed, b), sizes[b])

    if mc.threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=mc.threads) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(b) for b in range(len(sizes))]
    n = mc.samples
    return [
        _summarize([math.fsum(p[d][c] for p in parts) for c in range(5)], n)
        for d in range(params.t + 1)
    ]


def estimate_betas(init, params, mc):
    """Estimate both eigenvalues at depth ``params.t``."""
    return estimate_series(init, params, mc)[-1]


def estimate_beta(init, params, mc):
    """``(mean, standard_error)`` of the noisy eigenvalue at ``params.f``."""
    est = estimate_betas(init, params, mc)
    return est.beta_eps, est.beta_eps_stderr
