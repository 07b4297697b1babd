import hashlib
import math

import numpy as np
import pytest

from gl_lab.ensembles import (EnsembleSpec, assemble_observations, check_assumptions,
                              draw_design, make_coefficients, sample_design, sample_noise,
                              sample_standard_design, toeplitz_covariance)
from gl_lab.errors import BadFamilyShape, NotPositiveDefinite, ShapeMismatch
from gl_lab.rng import mix_seed, stream
from gl_lab.theory import SupportSet, bmin, sparsity_overlap, zeta

R2 = 1 / math.sqrt(2)


def digest(A):
    return hashlib.sha256(np.ascontiguousarray(A).tobytes()).hexdigest()


# ---------------------------------------------------------------- coefficients

@pytest.mark.parametrize("family,col2,psi", [
    ("identical", [1, 1, 1, 1], 4),
    ("orthonormal", [1, -1, 1, -1], 2),
    ("intermediate", [1, 1, 1, -1], 3),
])
def test_named_families_s4(family, col2, psi):
    B, S = make_coefficients(EnsembleSpec(p=10, s=4, family=family))
    assert S.indices == (0, 1, 2, 3)
    np.testing.assert_allclose(B[:4, 0], R2)
    np.testing.assert_allclose(B[:4, 1], R2 * np.array(col2))
    assert not B[4:].any()
    assert sparsity_overlap(B[:4], np.eye(4)) == pytest.approx(psi, abs=1e-10)


@pytest.mark.parametrize("family,factor", [("identical", 1.0), ("orthonormal", 0.5),
                                           ("intermediate", 0.75)])
@pytest.mark.parametrize("s", [4, 8, 16, 32])
def test_named_family_overlap_and_bmin(family, factor, s):
    B, S = make_coefficients(EnsembleSpec(p=2 * s + 3, s=s, family=family))
    B_S = B[S.as_array()]
    assert bmin(B_S) == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(zeta(B_S), B_S, atol=1e-15)
    assert sparsity_overlap(B_S, np.eye(s)) == pytest.approx(factor * s, abs=1e-10)


@pytest.mark.parametrize("alpha", np.linspace(0, np.pi / 2, 7))
def test_b1_family_rows_and_overlap(alpha):
    spec = EnsembleSpec(p=30, s=10, family="b1_alpha", alpha=alpha)
    B, S = make_coefficients(spec)
    B_S = B[S.as_array()]
    np.testing.assert_allclose(B_S[0::2], R2)
    second = [math.cos(math.pi / 4 + alpha), math.sin(math.pi / 4 + alpha)]
    np.testing.assert_allclose(B_S[1::2], np.tile(second, (5, 1)))
    assert sparsity_overlap(B_S, np.eye(10)) == pytest.approx(5 * (1 + abs(math.cos(alpha))),
                                                              abs=1e-10)


def test_custom_family_and_random_placement():
    B_S = np.arange(1.0, 7.0).reshape(3, 2)
    spec = EnsembleSpec(p=20, s=3, family="custom", B_S=B_S, support_placement="random",
                        placement_seed=4)
    B, S = make_coefficients(spec)
    np.testing.assert_array_equal(B[S.as_array()], B_S)
    assert np.count_nonzero(np.linalg.norm(B, axis=1)) == 3
    assert make_coefficients(spec)[1] == S


@pytest.mark.parametrize("kwargs", [
    dict(p=20, s=6, family="identical"),
    dict(p=20, s=8, K=3, family="orthonormal"),
    dict(p=20, s=5, family="b1_alpha", alpha=0.1),
    dict(p=20, s=4, family="b1_alpha"),
    dict(p=20, s=2, family="custom"),
    dict(p=20, s=2, family="custom", B_S=np.ones((3, 2))),
    dict(p=3, s=4, family="identical"),
    dict(p=20, s=4, family="nope"),
])
def test_bad_family_shapes(kwargs):
    with pytest.raises(BadFamilyShape):
        EnsembleSpec(**kwargs)


# ---------------------------------------------------------------- design and noise

def test_design_moments_identity():
    n, p = 4000, 6
    X = sample_design(n, np.eye(p), seed=7)
    assert np.all(np.abs(X.mean(axis=0)) <= 4 / math.sqrt(n))
    assert np.all(np.abs(X.var(axis=0) - 1) <= 5 * math.sqrt(2 / n))


def test_design_single_row_is_raw_draw():
    raw = stream(3, "design").standard_normal((1, 5))
    np.testing.assert_array_equal(sample_design(1, np.eye(5), 3), raw)
    np.testing.assert_array_equal(sample_standard_design(1, 5, 3), raw)


def test_design_covariance_moment():
    X = sample_design(10_000, np.diag([4.0, 1.0]), seed=1)
    assert np.cov(X.T)[0, 0] == pytest.approx(4.0, rel=0.05)


def test_standard_design_shortcut_agrees():
    np.testing.assert_array_equal(sample_standard_design(50, 7, 9), sample_design(50, np.eye(7), 9))


def test_design_rejects_non_pd():
    with pytest.raises(NotPositiveDefinite):
        sample_design(3, [[1, 2], [2, 1]], 0)


def test_noise_examples():
    assert not sample_noise(5, 2, 0.0, 1).any()
    W = sample_noise(50_000, 2, 0.1, 2)
    assert W.std() == pytest.approx(0.1, rel=0.02)


def test_assemble_observations():
    X = np.random.default_rng(0).standard_normal((6, 4))
    B = np.random.default_rng(1).standard_normal((4, 2))
    W = np.random.default_rng(2).standard_normal((6, 2))
    assert not assemble_observations(X, np.zeros((4, 2)), np.zeros((6, 2))).any()
    np.testing.assert_array_equal(assemble_observations(np.eye(4), B, np.zeros((4, 2))), B)
    Y = assemble_observations(X, B, W)
    np.testing.assert_array_equal(Y - X @ B, (X @ B + W) - X @ B)
    with pytest.raises(ShapeMismatch):
        assemble_observations(X, B, np.zeros((5, 2)))


def test_determinism_and_seed_sensitivity():
    spec = EnsembleSpec(p=40, s=8, family="orthonormal")
    a = [digest(draw_design(spec, 30, 5)), digest(sample_noise(30, 2, 0.1, 5))]
    b = [digest(draw_design(spec, 30, 5)), digest(sample_noise(30, 2, 0.1, 5))]
    c = [digest(draw_design(spec, 30, 6)), digest(sample_noise(30, 2, 0.1, 6))]
    assert a == b
    assert a[0] != c[0] and a[1] != c[1]


def test_design_and_noise_streams_independent():
    X = sample_standard_design(200, 1, 11)
    W = sample_noise(200, 1, 1.0, 11)
    assert abs(np.corrcoef(X[:, 0], W[:, 0])[0, 1]) < 0.3


def test_mix_seed_distinct():
    seeds = {mix_seed(0, g, t) for g in range(20) for t in range(50)}
    assert len(seeds) == 1000


# ---------------------------------------------------------------- assumptions

def test_assumptions_identity():
    r = check_assumptions(np.eye(8), SupportSet((0, 1, 2), 8))
    assert (r.cmin, r.cmax, r.incoherence_gamma, r.dmax) == pytest.approx((1, 1, 1, 1))
    assert r.a1_ok and r.a2_ok and r.a3_ok


def test_assumptions_block_diagonal():
    Sigma = np.eye(6)
    Sigma[3:, 3:] = toeplitz_covariance(3, 0.5)
    r = check_assumptions(Sigma, SupportSet((0, 1, 2), 6))
    assert r.incoherence_gamma == 1.0


def test_assumptions_toeplitz():
    Sigma = toeplitz_covariance(16, 0.3)
    r = check_assumptions(Sigma, SupportSet(range(4), 16))
    assert 0 < r.incoherence_gamma < 1 and r.a2_ok
    eig = np.linalg.eigvalsh(Sigma[:4, :4])
    assert (r.cmin, r.cmax) == pytest.approx((eig[0], eig[-1]), rel=1e-8)
    assert r.dmax == pytest.approx(np.max(np.abs(np.linalg.inv(Sigma[:4, :4])).sum(axis=1)))


def test_assumptions_incoherence_violated():
    # a non-support column nearly duplicating two support columns
    Sigma = np.eye(3)
    Sigma[2, :2] = Sigma[:2, 2] = 0.7
    r = check_assumptions(Sigma, SupportSet((0, 1), 3))
    assert r.incoherence_gamma < 0 and not r.a2_ok


def test_assumptions_rejects_non_pd():
    with pytest.raises(NotPositiveDefinite):
        check_assumptions(np.ones((3, 3)), SupportSet((0,), 3))
