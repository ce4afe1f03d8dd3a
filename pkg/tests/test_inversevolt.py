import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iontool.errors import InfeasibleError, InvalidArgumentError
from iontool.fieldsolve import axis_basis_matrix
from iontool.inversevolt import (BasisMatrix, WaveformConfig, auto_alpha, fitted_curvature, harmonic_target, svd,
                                 tikhonov_solve, tikhonov_solve_anchored, tikhonov_solve_weighted,
                                 transport_waveforms, truncation_factors)

DC = ["dc1", "dc2", "dc3", "dc4", "dc5"]
DELTA = 0.03e6  # 0.03 V/mm^2 in V/m^2


@pytest.fixture(scope="module")
def basis(trap):
    geom, system, _ = trap
    x = np.linspace(-6e-3, 6e-3, 241)
    return BasisMatrix(axis_basis_matrix(system, geom, x, DC), x, DC)


# --- SVD ---------------------------------------------------------------------

def test_svd_diagonal():
    U, S, V = svd(np.diag([3.0, 1.0]))
    assert np.allclose(S, [3, 1])
    assert np.allclose(np.abs(U), np.eye(2))
    assert np.allclose(np.abs(V), np.eye(2))


def test_svd_rank_one():
    u, v = np.array([1.0, 2.0, 2.0]), np.array([3.0, 4.0])
    _, S, _ = svd(np.outer(u, v))
    assert S[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-14)
    assert S[1] <= 1e-14 * S[0]


def test_svd_reconstruction_and_orthogonality(rng):
    A = rng.normal(size=(40, 5))
    U, S, V = svd(A)
    assert np.linalg.norm(U @ np.diag(S) @ V.T - A) <= 1e-10 * np.linalg.norm(A)
    assert np.allclose(U.T @ U, np.eye(5), atol=1e-10)
    assert np.allclose(V.T @ V, np.eye(5), atol=1e-10)
    assert np.all(S >= 0) and np.all(np.diff(S) <= 0)


def test_svd_rejects_nonfinite():
    with pytest.raises(InvalidArgumentError):
        svd(np.array([[1.0, np.nan]]))


# --- Tikhonov ----------------------------------------------------------------

def test_scalar_examples():
    A, phi = np.array([[2.0]]), np.array([4.0])
    assert tikhonov_solve(A, phi, 0.0) == pytest.approx([2.0])
    assert tikhonov_solve(A, phi, 2.0) == pytest.approx([1.0])
    assert tikhonov_solve_anchored(A, phi, 2.0, [3.0]) == pytest.approx([2.5])
    # weighted at alpha = 0 still satisfies A u = phi
    assert tikhonov_solve_weighted(A, phi, 0.0, None, [0.5]) == pytest.approx([2.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=8), st.floats(0, 1e3))
def test_truncation_identity(s, alpha):
    s = np.array(s)
    sp, d = truncation_factors(s, alpha)
    assert np.allclose(s * sp + d, 1.0, rtol=0, atol=1e-14)


def test_alpha_zero_square_inverse(rng):
    A = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    phi = rng.normal(size=4)
    u = tikhonov_solve(A, phi, 0.0)
    ref = np.linalg.solve(A, phi)
    assert np.linalg.norm(u - ref) <= 1e-10 * np.linalg.norm(ref)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 10.0))
def test_matches_normal_equations(seed, alpha):
    r = np.random.default_rng(seed)
    A = r.normal(size=(20, 5))
    phi = r.normal(size=20)
    u = tikhonov_solve(A, phi, alpha)
    ref = np.linalg.solve(A.T @ A + alpha ** 2 * np.eye(5), A.T @ phi)
    assert np.linalg.norm(u - ref) <= 1e-8 * np.linalg.norm(ref)


def test_anchored_alpha_zero_reduces(rng):
    A = rng.normal(size=(10, 3))
    phi = rng.normal(size=10)
    assert np.allclose(tikhonov_solve_anchored(A, phi, 0.0, [5.0, -1.0, 2.0]), tikhonov_solve(A, phi, 0.0))


def test_anchored_dead_electrode_keeps_anchor(rng):
    A = rng.normal(size=(12, 4))
    A[:, 2] = 0.0
    phi = rng.normal(size=12)
    u0 = np.array([0.0, 1.0, 5.0, -2.0])
    for alpha in (0.0, 0.1, 3.0):
        assert tikhonov_solve_anchored(A, phi, alpha, u0)[2] == 5.0


def test_weights_one_equals_anchored(rng):
    A = rng.normal(size=(10, 3))
    phi = rng.normal(size=10)
    u0 = np.array([1.0, 2.0, 3.0])
    a = tikhonov_solve_weighted(A, phi, 0.7, u0, np.ones(3))
    assert np.allclose(a, tikhonov_solve_anchored(A, phi, 0.7, u0), rtol=1e-13)


def test_small_weight_suppresses_electrode(rng):
    A = rng.normal(size=(15, 3))
    phi = rng.normal(size=15)
    alpha = 1.0
    plain = tikhonov_solve(A, phi, alpha)
    w = tikhonov_solve_weighted(A, phi, alpha, None, [1.0, 0.1, 1.0])
    assert abs(w[1]) < abs(plain[1])


@pytest.mark.parametrize("bad", [[1.0, 0.0], [1.0, -0.5], [1.0, 1.5]])
def test_weights_must_lie_in_unit_interval(bad):
    with pytest.raises(InvalidArgumentError):
        tikhonov_solve_weighted(np.ones((3, 2)), np.ones(3), 0.1, None, bad)


def test_negative_alpha_rejected():
    with pytest.raises(InvalidArgumentError):
        tikhonov_solve(np.ones((2, 1)), np.ones(2), -1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_monotone_in_alpha_random(seed):
    r = np.random.default_rng(seed)
    A = r.normal(size=(25, 5)) @ np.diag(10.0 ** -np.arange(5))
    phi = r.normal(size=25)
    alphas = np.logspace(-6, 2, 30)
    us = [tikhonov_solve(A, phi, a) for a in alphas]
    norms = np.array([np.linalg.norm(u) for u in us])
    res = np.array([np.linalg.norm(A @ u - phi) for u in us])
    assert np.all(np.diff(norms) <= 1e-12 * norms.max())
    assert np.all(np.diff(res) >= -1e-12 * res.max())


def test_trap_alpha_sweep_against_brute_force(basis):
    rows = basis.rows(0.0, 3e-3)
    A = basis.A[rows]
    phi = harmonic_target(basis.x[rows], 0.0, DELTA).values
    alphas = np.logspace(-4, 0, 9)[::-1]  # alpha decreasing
    norms, res = [], []
    for a in alphas:
        u = tikhonov_solve(A, phi, a)
        ref = np.linalg.solve(A.T @ A + a ** 2 * np.eye(5), A.T @ phi)
        assert np.linalg.norm(u - ref) <= 1e-6 * np.linalg.norm(ref)
        norms.append(np.linalg.norm(u))
        res.append(np.linalg.norm(A @ u - phi))
    assert np.all(np.diff(res) <= 0)
    assert np.all(np.diff(norms) >= 0)


# --- auto alpha / waveforms --------------------------------------------------

def test_auto_alpha_realizable_target(rng):
    A = rng.normal(size=(10, 3))
    u_true = np.array([1.0, -2.0, 0.5])
    u, a = auto_alpha(A, A @ u_true, bounds=(-10, 10))
    assert a == pytest.approx(1e-8 * np.linalg.norm(A, 2))
    assert np.allclose(u, u_true, atol=1e-6)


def test_auto_alpha_infeasible_anchor():
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    with pytest.raises(InfeasibleError):
        auto_alpha(A, np.array([50.0, 50.0, 100.0]), u0=np.array([20.0, 20.0]), bounds=(-10, 10))


def test_auto_alpha_returns_smallest_feasible(rng):
    A = rng.normal(size=(10, 3))
    phi = A @ np.array([30.0, -5.0, 0.0])
    u, a = auto_alpha(A, phi, bounds=(-10, 10), rtol=1e-9)
    assert np.all(np.abs(u) <= 10)
    assert np.max(np.abs(tikhonov_solve(A, phi, a * (1 - 1e-6)))) > 10 - 1e-6


def test_trap_well_within_bounds(basis):
    cfg = WaveformConfig(bounds=(-10, 10), roi_halfwidth=3e-3)
    wf = transport_waveforms(basis, [0.0], DELTA, cfg)
    u = wf.voltages[0]
    assert np.all(np.abs(u) <= 10)
    assert fitted_curvature(basis, u, 0.0, 3e-3) == pytest.approx(DELTA, rel=0.05)


def test_constant_path_gives_constant_waveform(basis):
    wf = transport_waveforms(basis, np.full(6, 0.5e-3), DELTA, WaveformConfig())
    assert np.allclose(wf.voltages[1:], wf.voltages[1], atol=1e-6)


def test_ramp_respects_step_cap(basis):
    cap = 0.05
    centers = np.linspace(-1e-3, 1e-3, 100)
    u_start = transport_waveforms(basis, centers[:1], DELTA).voltages[0]
    wf = transport_waveforms(basis, centers, DELTA, WaveformConfig(max_step=cap, u_start=u_start))
    steps = np.max(np.abs(np.diff(wf.voltages, axis=0)), axis=1)
    assert np.all(steps <= cap * (1 + 1e-9))
    assert np.all(np.abs(wf.voltages) <= 10)


def test_waveform_rejects_centres_off_axis(basis):
    with pytest.raises(InvalidArgumentError):
        transport_waveforms(basis, [10e-3], DELTA)


def test_infeasible_step_is_named(basis):
    with pytest.raises(InfeasibleError, match="step 0"):
        transport_waveforms(basis, [0.0], DELTA, WaveformConfig(bounds=(-0.01, 0.01), u_start=np.full(5, 50.0)))


def test_basis_matrix_shape_checked():
    with pytest.raises(InvalidArgumentError):
        BasisMatrix(np.ones((3, 3)), np.arange(3.0))
