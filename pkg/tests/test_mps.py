import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadow_twirl.closed_form import renyi_variance_t0, renyi_variance_t1, swap_pattern_sum
from shadow_twirl.errors import DepthCapReached, InputError
from shadow_twirl.exact import CircuitParams, WeightVector, beta_pair, shadow_norm_pauli_exact
from shadow_twirl.mps import (
    beta_pattern,
    beta_patterns,
    boundary_fixpoint,
    build_gate,
    evolve_kappa,
    kappa_series,
    occupied_rate,
    optimal_depth,
    renyi_optimal_depth,
    renyi_shadow_norm,
    shadow_norm_pauli,
    t_max,
)


@pytest.mark.parametrize(
    "q, f, column",
    [(2, 1.0, (0, 0.2, 0.2, 0.6)), (3, 1.0, (0, 0.1, 0.1, 0.8)), (2, 0.5, (0, 0.1, 0.1, 0.15))],
)
def test_gate_columns(q, f, column):
    g = build_gate(q, f).entries
    np.testing.assert_allclose(g[:, 0], (1, 0, 0, 0))
    for c in (1, 2, 3):
        np.testing.assert_allclose(g[:, c], column, atol=1e-15)
    if f == 1.0:
        np.testing.assert_allclose(g.sum(axis=0), 1.0)


def test_initial_mps():
    ek = evolve_kappa(2, 1.0, 0)
    assert ek.bond_dims == (1, 1)
    np.testing.assert_allclose(ek.A[:, 0, 0], (1, 1 / 3))
    fp = boundary_fixpoint(ek)
    assert fp.mu_empty == 1.0
    np.testing.assert_allclose(fp.E_l * fp.E_r, 1.0)


def test_one_layer_is_exact():
    ek = evolve_kappa(2, 0.9, 1, chi=4)
    assert max(ek.bond_dims) <= 4
    assert ek.truncation_log == (0.0,)


def test_tensors_are_read_only():
    ek = evolve_kappa(2, 1.0, 2)
    with pytest.raises(ValueError):
        ek.A[0, 0, 0] = 1.0


@pytest.mark.parametrize("f", [1.0, 0.95, 0.8])
def test_empty_sector_eigenvalue_is_one(f):
    for ek in kappa_series(2, f, 10):
        assert boundary_fixpoint(ek).mu_empty == pytest.approx(1.0, abs=1e-10)


def test_simple_patterns():
    ek = evolve_kappa(2, 1.0, 1)
    fp = boundary_fixpoint(ek)
    assert beta_pattern(ek, fp, "11", 1.0) == pytest.approx(0.2, abs=1e-14)
    assert beta_pattern(ek, fp, "0000", 1.0) == pytest.approx(1.0, abs=1e-14)
    ek0 = evolve_kappa(2, 1.0, 0)
    assert beta_pattern(ek0, boundary_fixpoint(ek0), "10", 1.0) == pytest.approx(1 / 3)
    with pytest.raises(InputError, match="tile"):
        beta_pattern(ek, fp, "1", 1.0)


def test_shadow_norm_examples():
    assert shadow_norm_pauli(2, 1.0, 1, 0) == pytest.approx(3.0)
    assert shadow_norm_pauli(2, 1.0, 2, 1) == pytest.approx(5.0)


def test_depth_three_matches_exact_on_twelve_sites():
    ek = evolve_kappa(2, 1.0, 3, chi=256)
    fp = boundary_fixpoint(ek)
    rng = np.random.default_rng(3)
    for _ in range(10):
        bits = tuple(rng.integers(0, 2, 4).astype(bool))
        if not any(bits):
            continue
        # 4 operator sites inside a 12-site window once the exact engine pads it
        ref = beta_pair(WeightVector(bits), CircuitParams(2, 1.0, 3))[0]
        assert beta_pattern(ek, fp, bits, 1.0) == pytest.approx(ref, rel=1e-8)


patterns = st.lists(st.booleans(), min_size=1, max_size=8).filter(any)


@given(patterns, st.sampled_from([2, 3]), st.sampled_from([0.9, 0.95, 1.0]), st.integers(0, 4))
def test_matches_exact_engine_on_arbitrary_patterns(bits, q, f, t):
    if len(bits) % 2:
        bits = bits + [False]
    params = CircuitParams(q, f, t)
    ref = beta_pair(WeightVector(tuple(bits)), params)
    ek_clean = evolve_kappa(q, 1.0, t, chi=256)
    got_clean = beta_pattern(ek_clean, boundary_fixpoint(ek_clean), bits, 1.0)
    assert got_clean == pytest.approx(ref[0], rel=1e-8)
    if t > 0:
        ek = evolve_kappa(q, f, t, chi=256)
        assert beta_pattern(ek, boundary_fixpoint(ek), bits, f) == pytest.approx(ref[1], rel=1e-8)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 3), st.sampled_from([0.9, 1.0]))
def test_light_cone_factorization(k1, k2, t, f):
    ek = evolve_kappa(2, f, t)
    fp = boundary_fixpoint(ek)
    left = [True] * k1 + [False] * (k1 % 2)
    right = [True] * k2 + [False] * (k2 % 2)
    gap = 2 * (t + 1)
    joint = beta_pattern(ek, fp, left + [False] * gap + right, f)
    apart = beta_pattern(ek, fp, left, f) * beta_pattern(ek, fp, right, f)
    assert joint == pytest.approx(apart, rel=1e-8)


def test_batched_patterns_match_single():
    ek = evolve_kappa(3, 0.93, 3)
    fp = boundary_fixpoint(ek)
    table = beta_patterns(ek, fp, 6, 0.93)
    for idx in np.ndindex(*table.shape):
        assert table[idx] == pytest.approx(beta_pattern(ek, fp, idx, 0.93), rel=1e-12)
    odd = beta_patterns(ek, fp, 5, 0.93)
    assert odd[1, 0, 1, 1, 0] == pytest.approx(beta_pattern(ek, fp, (1, 0, 1, 1, 0, 0), 0.93))


@pytest.mark.slow
@pytest.mark.parametrize("q, f, t", [(2, 1.0, 10), (2, 0.95, 10), (3, 0.97, 8)])
def test_chi_doubling_is_stable(q, f, t):
    for k in (4, 9, 16):
        a = shadow_norm_pauli(q, f, k, t, chi=512)
        b = shadow_norm_pauli(q, f, k, t, chi=1024)
        assert abs(a - b) <= 1e-8 * abs(b)


def test_rates():
    ek = evolve_kappa(2, 1.0, 0)
    assert occupied_rate(ek, ek, 1.0) == pytest.approx(math.log(3))
    ekn = evolve_kappa(2, 0.9, 0)
    assert occupied_rate(ekn, ek, 0.9) == pytest.approx(math.log(3) - 2 * math.log(0.9))
    deep = evolve_kappa(2, 1.0, 14)
    assert occupied_rate(deep, deep, 1.0) == pytest.approx(math.log(2), abs=0.02)
    rates = [occupied_rate(evolve_kappa(2, 0.9, t), evolve_kappa(2, 1.0, t), 0.9) for t in range(2, 10)]
    assert all(b > a for a, b in zip(rates, rates[1:]))


def test_rate_needs_matching_depths():
    with pytest.raises(InputError):
        occupied_rate(evolve_kappa(2, 0.9, 2), evolve_kappa(2, 1.0, 3), 0.9)


def test_t_max_values():
    assert t_max(2, 0.99) == 3
    with pytest.raises(DepthCapReached, match="unbounded"):
        t_max(2, 1.0)
    assert t_max(2, 0.9154) >= 1 or t_max(2, 0.92) >= 1
    assert t_max(2, 0.8) == 0


def test_optimal_depth_examples():
    assert optimal_depth(2, 1.0, 1, t_cap=8).t_best == 0
    assert optimal_depth(2, 0.9, 12).t_best == 0
    depths = [optimal_depth(2, 1.0, k, t_cap=10).t_best for k in (2, 4, 8, 16, 24)]
    assert depths == sorted(depths)
    scan = optimal_depth(2, 0.98, 10)
    assert scan.t_best <= t_max(2, 0.98)
    ref = shadow_norm_pauli_exact(WeightVector.contiguous(1), CircuitParams(2, 1.0, 0))
    assert scan.table[0] == pytest.approx(ref**10)


def test_renyi_examples():
    assert renyi_shadow_norm(2, 1.0, 2, 1, 0) == pytest.approx(7.0)
    assert renyi_shadow_norm(2, 0.9, 3, 0, 2) == 1.0
    with pytest.raises(InputError):
        renyi_shadow_norm(2, 1.0, 2, 13, 1)
    with pytest.raises(InputError):
        renyi_shadow_norm(2, 1.0, 1, 2, 1)


@pytest.mark.parametrize("q", [2, 3, 4])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_renyi_depth_zero_matches_closed_form(q, n):
    for A in range(1, 5):
        assert renyi_shadow_norm(q, 0.9, n, A, 0) == pytest.approx(renyi_variance_t0(q, n, A), rel=1e-12)


@pytest.mark.parametrize("q, n, f", [(2, 2, 1.0), (2, 3, 0.95), (3, 2, 0.9)])
def test_renyi_depth_one_matches_closed_form(q, n, f):
    for A in (2, 4):
        assert renyi_shadow_norm(q, f, n, A, 1) == pytest.approx(renyi_variance_t1(q, n, A, f), rel=1e-8)


@pytest.mark.parametrize("q, n, A, t, f", [(2, 2, 3, 2, 0.95), (3, 2, 2, 3, 1.0), (2, 3, 3, 1, 0.9)])
def test_renyi_transform_matches_brute_force(q, n, A, t, f):
    ek_c, ek_n = evolve_kappa(q, 1.0, t), evolve_kappa(q, f, t)
    fp_c, fp_n = boundary_fixpoint(ek_c), boundary_fixpoint(ek_n)

    def ratio(bits):
        return beta_patterns(ek_c, fp_c, A, 1.0)[bits] / beta_patterns(ek_n, fp_n, A, f)[bits] ** 2

    brute = swap_pattern_sum(q, n, A, ratio)
    assert renyi_shadow_norm(q, f, n, A, t) == pytest.approx(brute, rel=1e-10)


def test_renyi_optimal_depth_below_threshold_is_local():
    assert renyi_optimal_depth(2, 0.9, 2, 6).t_best == 0
    assert renyi_optimal_depth(2, 1.0, 2, 8, t_cap=6).t_best > 0
