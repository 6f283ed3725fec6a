import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contmem.basis import BasisFamily, design_matrix, eval_psi
from contmem.errors import InvalidArgumentError, OutOfDomainError, SingularMatrixError
from contmem.numerics import uniform_grid
from contmem.signal import (ContinuousSignal, FrameChunk, evaluate, evaluate_many, fit,
                            frame_times, pool_patches)


# -- basis -------------------------------------------------------------------

def test_rectangular_psi():
    b = BasisFamily("rectangular", 4)
    np.testing.assert_array_equal(eval_psi(b, 0.3), [0, 1, 0, 0])
    np.testing.assert_array_equal(eval_psi(b, 1.0), [0, 0, 0, 1])
    np.testing.assert_array_equal(eval_psi(b, 0.0), [1, 0, 0, 0])
    np.testing.assert_array_equal(eval_psi(b, 0.25), [0, 1, 0, 0])


def test_gaussian_psi_direct_formula():
    b = BasisFamily("gaussian", 2, width=0.5)
    psi = eval_psi(b, 0.25)
    # centers at 0.25 and 0.75; exp(-(0.5)^2 / (2 * 0.25)) = exp(-0.5)
    assert psi[0] == 1.0
    assert psi[1] == pytest.approx(np.exp(-0.5), rel=1e-15)


def test_gaussian_default_width():
    assert BasisFamily("gaussian", 8).width == pytest.approx(1 / 8)


@pytest.mark.parametrize("t", [-0.01, 1.0000001, np.nan])
def test_psi_domain(t):
    with pytest.raises(InvalidArgumentError):
        eval_psi(BasisFamily("rectangular", 4), t)


def test_design_matrix_domain():
    with pytest.raises(OutOfDomainError):
        design_matrix(BasisFamily("gaussian", 4), [0.2, 1.5])


def test_design_matrix_examples():
    np.testing.assert_array_equal(design_matrix(BasisFamily("rectangular", 2), [0.25, 0.75]), np.eye(2))
    np.testing.assert_array_equal(design_matrix(BasisFamily("rectangular", 2), [0.1, 0.2, 0.6]),
                                  [[1, 1, 0], [0, 0, 1]])
    g = BasisFamily("gaussian", 3)
    np.testing.assert_array_equal(design_matrix(g, [0.5])[:, 0], eval_psi(g, 0.5))


@pytest.mark.parametrize("kind", ["rectangular", "gaussian"])
@given(times=st.lists(st.floats(0, 1), min_size=1, max_size=40), n=st.integers(1, 50))
def test_columns_bit_identical(kind, times, n):
    b = BasisFamily(kind, n)
    F = design_matrix(b, times)
    for i, t in enumerate(times):
        assert np.array_equal(F[:, i], eval_psi(b, t))
    if kind == "gaussian":
        assert np.all(F > 0) or n > 1  # far bumps may underflow only with many functions


@given(times=st.lists(st.floats(0, 1), min_size=1, max_size=60), n=st.integers(1, 64))
def test_rectangular_partition_and_gram(times, n):
    b = BasisFamily("rectangular", n)
    F = design_matrix(b, times)
    assert np.all(F.sum(axis=0) == 1.0)
    gram = F @ F.T
    assert np.array_equal(gram, np.diag(np.diag(gram)))
    counts = np.bincount(np.minimum((np.asarray(times) * n).astype(int), n - 1), minlength=n)
    np.testing.assert_array_equal(np.diag(gram), counts)


def test_bad_basis():
    with pytest.raises(InvalidArgumentError):
        BasisFamily("spline", 4)
    with pytest.raises(InvalidArgumentError):
        BasisFamily("rectangular", 0)
    with pytest.raises(InvalidArgumentError):
        BasisFamily("gaussian", 4, width=-1.0)


# -- signal ------------------------------------------------------------------

def test_pool_single_patch_is_identity():
    emb = np.random.default_rng(0).standard_normal((5, 1, 3))
    np.testing.assert_array_equal(pool_patches(FrameChunk(emb)), emb[:, 0])


def test_pool_two_patches():
    chunk = FrameChunk(np.array([[[1.0, 3.0], [3.0, 5.0]]]))
    np.testing.assert_array_equal(pool_patches(chunk), [[2.0, 4.0]])


def test_pool_against_loop():
    emb = np.random.default_rng(1).standard_normal((3, 4, 8))
    expected = np.zeros((3, 8))
    for m in range(3):
        for c in range(8):
            total = 0.0
            for p in range(4):
                total += emb[m, p, c]
            expected[m, c] = total / 4
    np.testing.assert_allclose(pool_patches(FrameChunk(emb)), expected, atol=1e-15)


def test_chunk_validation():
    with pytest.raises(InvalidArgumentError):
        FrameChunk(np.zeros((0, 1, 3)))
    with pytest.raises(InvalidArgumentError):
        FrameChunk(np.full((2, 1, 3), np.inf))


def test_frame_times():
    np.testing.assert_array_equal(frame_times(2), [0.25, 0.75])
    np.testing.assert_array_equal(frame_times(1), [0.5])
    np.testing.assert_array_equal(frame_times(4), [0.125, 0.375, 0.625, 0.875])


def test_fit_identity_design():
    X = np.random.default_rng(2).standard_normal((6, 3))
    sig = fit(X, frame_times(6), BasisFamily("rectangular", 6), 0.0)
    np.testing.assert_allclose(sig.coefficients, X, atol=1e-12)
    for t, x in zip(frame_times(6), X):
        np.testing.assert_allclose(evaluate(sig, t), x, atol=1e-10)


def _mp_ridge(X, F, lam):
    # B = (F F^T + lam I)^{-1} F X at 40 digits
    mpmath.mp.dps = 40
    Fm, Xm = mpmath.matrix(F.tolist()), mpmath.matrix(X.tolist())
    A = Fm * Fm.T + lam * mpmath.eye(F.shape[0])
    return np.array((A ** -1 * Fm * Xm).tolist(), dtype=float)


def test_fit_matches_extended_precision_oracle():
    X = np.random.default_rng(3).standard_normal((4, 3))
    times = frame_times(4)
    basis = BasisFamily("rectangular", 2)
    B = fit(X, times, basis, 0.1).coefficients
    expected = _mp_ridge(X, design_matrix(basis, times), mpmath.mpf("0.1"))
    np.testing.assert_allclose(B, expected, rtol=1e-9)


def test_fit_gaussian_dual_form_matches_oracle():
    # N > S: dual (S x S) system; oracle solves the primal N x N system exactly
    X = np.random.default_rng(4).standard_normal((5, 2))
    times = frame_times(5)
    basis = BasisFamily("gaussian", 9)
    B = fit(X, times, basis, 0.05).coefficients
    expected = _mp_ridge(X, design_matrix(basis, times), mpmath.mpf("0.05"))
    np.testing.assert_allclose(B, expected, rtol=1e-9, atol=1e-12)


def test_fit_more_boxes_than_frames():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((256, 4))
    lam = 1e-3
    sig = fit(X, frame_times(256), BasisFamily("rectangular", 1024), lam)
    B = sig.coefficients
    occupied = np.minimum((frame_times(256) * 1024).astype(int), 1023)
    empty = np.setdiff1d(np.arange(1024), occupied)
    assert empty.size == 768
    assert np.all(B[empty] == 0)
    np.testing.assert_allclose(B[occupied], X / (1 + lam), rtol=1e-12)


def test_fit_singular_without_ridge():
    with pytest.raises(SingularMatrixError):
        fit(np.ones((2, 1)), [0.1, 0.2], BasisFamily("rectangular", 2), 0.0)
    with pytest.raises(SingularMatrixError):
        fit(np.ones((2, 1)), [0.1, 0.9], BasisFamily("rectangular", 4), 0.0)


def test_fit_rejects_bad_input():
    basis = BasisFamily("rectangular", 2)
    with pytest.raises(InvalidArgumentError):
        fit(np.array([[np.nan]]), [0.5], basis)
    with pytest.raises(InvalidArgumentError):
        fit(np.ones((2, 1)), [0.6, 0.4], basis)
    with pytest.raises(InvalidArgumentError):
        fit(np.ones((2, 1)), [0.5], basis)


def test_constant_signal():
    c = np.array([1.5, -2.0, 0.25])
    sig = fit(np.tile(c, (64, 1)), frame_times(64), BasisFamily("rectangular", 32), 1e-6)
    t = np.linspace(0, 1, 201)
    np.testing.assert_allclose(evaluate_many(sig, t), np.tile(c, (t.size, 1)), atol=1e-3)


def test_constant_signal_gaussian_ripple():
    # bumps are cut off at 0 and 1, so a least-squares constant ripples (about 1 %
    # in the interior at width 1/N, worse at the very ends)
    sig = fit(np.ones((64, 1)), frame_times(64), BasisFamily("gaussian", 32), 1e-6)
    t = np.linspace(0.1, 0.9, 161)
    assert np.max(np.abs(evaluate_many(sig, t) - 1)) < 0.02


def test_evaluate_box_lookup():
    sig = ContinuousSignal(np.array([[1.0, 0.0], [5.0, 0.0]]), BasisFamily("rectangular", 2))
    np.testing.assert_array_equal(evaluate(sig, 0.1), [1, 0])
    np.testing.assert_array_equal(evaluate(sig, 0.9), [5, 0])
    with pytest.raises(OutOfDomainError):
        evaluate(sig, 1.2)


@pytest.mark.parametrize("kind", ["rectangular", "gaussian"])
def test_evaluate_matches_matrix_product(kind):
    rng = np.random.default_rng(6)
    basis = BasisFamily(kind, 20)
    sig = ContinuousSignal(rng.standard_normal((20, 5)), basis)
    g = uniform_grid(0, 1, 1000)
    F = design_matrix(basis, g.points)
    expected = np.array([[sum(F[j, k] * sig.coefficients[j, c] for j in range(20)) for c in range(5)]
                         for k in range(0, 1000, 37)])
    np.testing.assert_allclose(evaluate_many(sig, g.points)[::37], expected, atol=1e-12)


@settings(max_examples=30)
@given(seed=st.integers(0, 2**31), S=st.integers(1, 40), N=st.integers(1, 40),
       kind=st.sampled_from(["rectangular", "gaussian"]))
def test_fit_linearity_and_shrinkage(seed, S, N, kind):
    rng = np.random.default_rng(seed)
    X1, X2 = rng.standard_normal((2, S, 3))
    t, basis = frame_times(S), BasisFamily(kind, N)
    B1, B2 = fit(X1, t, basis, 1e-3).coefficients, fit(X2, t, basis, 1e-3).coefficients
    B12 = fit(0.7 * X1 - 1.3 * X2, t, basis, 1e-3).coefficients
    scale = max(1.0, np.abs(B1).max(), np.abs(B2).max())
    np.testing.assert_allclose(B12, 0.7 * B1 - 1.3 * B2, atol=1e-9 * scale)
    norms = [np.linalg.norm(fit(X1, t, basis, lam).coefficients) for lam in (1e-6, 1e-3, 1.0)]
    assert norms[0] >= norms[1] * (1 - 1e-12) and norms[1] >= norms[2] * (1 - 1e-12)


@given(seed=st.integers(0, 2**31), S=st.integers(1, 128))
def test_rectangular_interpolation(seed, S):
    X = np.random.default_rng(seed).standard_normal((S, 4))
    sig = fit(X, frame_times(S), BasisFamily("rectangular", S), 1e-12)
    assert np.max(np.abs(evaluate_many(sig, frame_times(S)) - X)) <= 1e-8


def test_signal_validation():
    with pytest.raises(InvalidArgumentError):
        ContinuousSignal(np.zeros((3, 2)), BasisFamily("rectangular", 4))
    with pytest.raises(InvalidArgumentError):
        ContinuousSignal(np.full((4, 2), np.nan), BasisFamily("rectangular", 4))
