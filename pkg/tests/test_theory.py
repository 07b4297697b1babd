import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gl_lab.errors import DegenerateLogArgument, EmptyColumnSupport, ZeroRow
from gl_lab.theory import (SupportSet, bmin, column_overlaps, ordinary_lasso_complexity,
                           psi_bounds, psi_two_by_two, sample_complexity_theta,
                           sparsity_overlap, zeta)
from oracles import jacobi_eigenvalues, random_spd, spd_with_spectrum

R2 = 1 / math.sqrt(2)
seeds = st.integers(0, 2**32 - 1)


def overlap_oracle(B_S, Sigma_SS):
    Z = B_S / np.linalg.norm(B_S, axis=1, keepdims=True)
    M = Z.T @ np.linalg.inv(Sigma_SS) @ Z
    return jacobi_eigenvalues(0.5 * (M + M.T))[-1]


# ---------------------------------------------------------------- SupportSet

def test_support_set_invariants():
    S = SupportSet((1, 3), 5)
    assert list(S) == [1, 3] and len(S) == 2 and 3 in S
    assert S.complement().indices == (0, 2, 4)
    assert SupportSet.from_iterable([3, 1, 1], 5) == S
    with pytest.raises(ValueError):
        SupportSet((3, 1), 5)
    with pytest.raises(ValueError):
        SupportSet((0, 5), 5)


# ---------------------------------------------------------------- zeta

def test_zeta_examples():
    np.testing.assert_allclose(zeta([[3, 4]]), [[0.6, 0.8]], atol=1e-15)
    np.testing.assert_array_equal(zeta([[1, 0]]), [[1, 0]])
    np.testing.assert_array_equal(zeta([[-2], [5]]), [[-1], [1]])


def test_zeta_zero_row():
    with pytest.raises(ZeroRow) as info:
        zeta([[1, 1], [0, 1e-13]])
    assert info.value.row == 1


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), seeds)
def test_zeta_unit_parallel_rows(s, K, seed):
    B = np.random.default_rng(seed).standard_normal((s, K))
    Z = zeta(B)
    np.testing.assert_allclose(np.linalg.norm(Z, axis=1), 1.0, atol=1e-12)
    assert np.all(np.sum(Z * B, axis=1) > 0)


# ---------------------------------------------------------------- sparsity overlap

def test_overlap_named_examples():
    I4 = np.eye(4)
    assert sparsity_overlap(R2 * np.ones((4, 2)), I4) == pytest.approx(4, abs=1e-10)
    orth = R2 * np.column_stack([np.ones(4), [1, -1, 1, -1]])
    assert sparsity_overlap(orth, I4) == pytest.approx(2, abs=1e-10)
    disjoint = np.array([[1, 0], [1, 0], [0, 1], [0, 1]], float)
    assert sparsity_overlap(disjoint, I4) == pytest.approx(2, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), seeds)
def test_overlap_matches_eigen_oracle(s, K, seed):
    rng = np.random.default_rng(seed)
    B, Sigma = rng.standard_normal((s, K)), random_spd(s, rng)
    assert sparsity_overlap(B, Sigma) == pytest.approx(overlap_oracle(B, Sigma), rel=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), seeds)
def test_overlap_row_rescaling_invariance(s, K, seed):
    rng = np.random.default_rng(seed)
    B, Sigma = rng.standard_normal((s, K)), random_spd(s, rng)
    D = rng.uniform(0.1, 10, size=(s, 1))
    assert sparsity_overlap(D * B, Sigma) == pytest.approx(sparsity_overlap(B, Sigma), rel=1e-9)


def eigen_bounds_trial(seed):
    rng = np.random.default_rng(seed)
    s, K = int(rng.integers(1, 8)), int(rng.integers(1, 4))
    lo = rng.uniform(0.1, 1.0)
    hi = lo * rng.uniform(1.0, 10.0)
    Sigma = spd_with_spectrum(s, lo, hi, rng)
    B = rng.standard_normal((s, K))
    lower, upper = psi_bounds(s, K, lo, hi)
    psi = sparsity_overlap(B, Sigma)
    return lower * (1 - 1e-9) <= psi <= upper * (1 + 1e-9)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_eigen_bounds_bracket_overlap(seed):
    assert eigen_bounds_trial(seed)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), seeds)
def test_orthogonal_columns_give_largest_column_norm(k, seed):
    # random row signs on the orthonormal pattern keep the columns orthogonal
    rng = np.random.default_rng(seed)
    s = 2 * k
    signs = rng.choice([-1.0, 1.0], size=(s, 1))
    Z = signs * np.column_stack([np.ones(s), np.tile([1, -1], k)]) * R2
    assert np.abs(Z[:, 0] @ Z[:, 1]) < 1e-12
    psi = sparsity_overlap(Z, np.eye(s))
    assert psi == pytest.approx(max(np.sum(Z ** 2, axis=0)), abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(1, 4), seeds)
def test_group_overlap_at_most_max_column_support(s, K, seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((s, K)) * (rng.random((s, K)) < 0.6)
    B[np.linalg.norm(B, axis=1) == 0, 0] = 1.0
    s_k = max(np.count_nonzero(B[:, k]) for k in range(K))
    assert sparsity_overlap(B, np.eye(s)) <= s_k * (1 + 1e-9)


def disjoint_trial(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(2, 4))
    sizes = rng.integers(1, 4, size=K)
    s = int(sizes.sum())
    B = np.zeros((s, K))
    start = 0
    for k, size in enumerate(sizes):
        B[start:start + size, k] = rng.standard_normal(size)
        start += size
    B = B[rng.permutation(s)]
    Sigma = random_spd(s, rng, rng.uniform(0.1, 2))
    psi = sparsity_overlap(B, Sigma)
    per_col = column_overlaps(B, Sigma, on_union=True)
    return max(per_col) * (1 - 1e-9) <= psi <= sum(per_col) * (1 + 1e-9)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_disjoint_support_sandwich(seed):
    assert disjoint_trial(seed)


@pytest.mark.parametrize("alpha", np.linspace(0, np.pi, 13))
def test_b1_family_closed_form(alpha):
    block = np.array([[R2, R2], [math.cos(math.pi / 4 + alpha), math.sin(math.pi / 4 + alpha)]])
    s = 8
    B = np.tile(block, (s // 2, 1))
    assert sparsity_overlap(B, np.eye(s)) == pytest.approx(s / 2 * (1 + abs(math.cos(alpha))),
                                                           abs=1e-10)


# ---------------------------------------------------------------- theta

def test_theta_examples():
    p, s, psi = 64, 8, 3.0
    assert sample_complexity_theta(2 * psi * math.log(p - s), p, s, psi) == pytest.approx(1.0)
    assert sample_complexity_theta(1774, 256, 16, 16) == pytest.approx(1774 / (32 * math.log(240)))
    assert sample_complexity_theta(1774, 256, 16, 16) == pytest.approx(10.1152, abs=1e-4)
    assert sample_complexity_theta(500, p, s, psi / 2) == pytest.approx(
        2 * sample_complexity_theta(500, p, s, psi))


def test_theta_degenerate_log():
    with pytest.raises(DegenerateLogArgument):
        sample_complexity_theta(100, 10, 9, 1.0)


def test_psi_bounds_examples():
    assert psi_bounds(4, 2, 1, 1) == (2, 4)
    assert psi_bounds(7, 1, 1, 1) == (7, 7)
    assert psi_bounds(8, 2, 0.5, 2) == (2, 16)


# ---------------------------------------------------------------- 2x2 example

def test_two_by_two_examples():
    r = psi_two_by_two(math.pi / 4, math.pi / 4, 0.0)
    assert (r.mu_plus, r.mu_minus, r.psi_group) == pytest.approx((2, 0, 2))
    assert psi_two_by_two(0.0, math.pi / 2, 0.0).psi_group == pytest.approx(1.0)
    assert psi_two_by_two(0.3, 0.3, 0.9).psi_group == pytest.approx(3.8)


def explicit_two_by_two(t1, t2, rho):
    """(B_S, Sigma_SS) with inverse covariance [[1, rho], [rho, 1]]."""
    B = np.array([[math.cos(t1), math.sin(t1)], [math.cos(t2), math.sin(t2)]])
    Sigma = np.linalg.inv(np.array([[1.0, rho], [rho, 1.0]]))
    return B, Sigma


def column_oracle(B, Sigma, k):
    # sign vector padded with zeros on the union support
    col = B[:, k]
    z = np.where(np.abs(col) > 1e-12, np.sign(col), 0.0)
    return float(z @ np.linalg.inv(Sigma) @ z)


@pytest.mark.parametrize("rho", [0.0, 0.9, -0.9])
def test_two_by_two_matches_explicit(rho):
    grid = np.linspace(0, np.pi, 7)
    for t1 in grid:
        for t2 in grid:
            r = psi_two_by_two(t1, t2, rho)
            B, Sigma = explicit_two_by_two(t1, t2, rho)
            assert r.psi_group == pytest.approx(sparsity_overlap(B, Sigma), abs=1e-9)
            assert r.psi_col1 == pytest.approx(column_oracle(B, Sigma, 0), abs=1e-9)
            assert r.psi_col2 == pytest.approx(column_oracle(B, Sigma, 1), abs=1e-9)


def test_union_column_overlaps_differ_from_restricted():
    B, Sigma = explicit_two_by_two(0.0, math.pi / 2, 0.9)
    assert column_overlaps(B, Sigma, on_union=True) == pytest.approx([1.0, 1.0])
    assert column_overlaps(B, Sigma) == pytest.approx([1 - 0.81, 1 - 0.81])


def test_two_by_two_rejects_rho():
    with pytest.raises(ValueError):
        psi_two_by_two(0, 0, 1.0)


# ---------------------------------------------------------------- ordinary lasso comparator

def test_ordinary_lasso_examples():
    I = np.eye(64)
    B = np.zeros((64, 2))
    B[:4] = R2
    assert ordinary_lasso_complexity(B, I) == pytest.approx(4 * math.log(60), rel=1e-10)
    b = np.zeros((64, 1))
    b[:5, 0] = [1, -2, 3, -4, 5]
    assert ordinary_lasso_complexity(b, I) == pytest.approx(5 * math.log(59), rel=1e-10)
    D = np.zeros((64, 2))
    D[:2, 0] = 1
    D[2:4, 1] = 1
    assert ordinary_lasso_complexity(D, I) == pytest.approx(2 * math.log(62), rel=1e-10)


def test_ordinary_lasso_empty_column():
    B = np.zeros((10, 2))
    B[0, 0] = 1
    with pytest.raises(EmptyColumnSupport) as info:
        ordinary_lasso_complexity(B, np.eye(10))
    assert info.value.column == 1


def test_bmin_examples():
    assert bmin(np.eye(3)) == 1
    assert bmin([[3, 4], [0.3, 0.4]]) == pytest.approx(0.5)
    assert bmin(R2 * np.array([[1, 1], [1, -1]])) == pytest.approx(1.0)
