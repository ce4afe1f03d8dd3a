import numpy as np
import pytest
import scipy.linalg
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from iontool.errors import InvalidArgumentError, NormalizationError, NotEnoughStatesError, StepSizeError, TruncationWarning
from iontool.qdyn import (SpatialGrid, WaveFunction, apply_kinetic, bessel_j, chebyshev_coefficients, eigenstates,
                          gaussian, grid_hamiltonian, hamiltonian_matrix, harmonic_ground_state, kinetic_matrix,
                          kinetic_spectrum, numerov_eigenvalues, numerov_integrate, numerov_state,
                          optimal_grid_points, propagate_chebyshev, propagate_split_operator, spectral_bounds)

HO = np.arange(10) + 0.5


def harmonic_grid(L=20.0, beta=0.9):
    return SpatialGrid.for_potential(L, 0.5 * (L / 2) ** 2, beta=beta)


# --- grid sizing -------------------------------------------------------------

def test_optimal_grid_points_harmonic_formula():
    # m w L^2 / h = 64 with hbar = m = w = 1
    L = np.sqrt(64 * 2 * np.pi)
    V_max = 0.5 * (L / 2) ** 2
    assert optimal_grid_points(V_max, L, beta=1.0) == 64
    assert optimal_grid_points(V_max, L, beta=0.5) == 128
    assert optimal_grid_points(4 * V_max, L, beta=1.0) == 128


def test_optimal_grid_points_validation():
    with pytest.raises(InvalidArgumentError):
        optimal_grid_points(-1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        SpatialGrid(1.0, 7)


def test_momentum_grid_ordering():
    g = SpatialGrid(2 * np.pi, 8)
    assert np.array_equal(g.k, [0, 1, 2, 3, 4, -3, -2, -1])
    assert g.dx == pytest.approx(g.L / g.N)
    assert g.K == pytest.approx(g.beta * np.pi / g.dx)


def test_wavefunction_normalization():
    g = SpatialGrid.centered(20.0, 128)
    wf = WaveFunction(3.0 * gaussian(g), g).normalized()
    assert wf.norm == pytest.approx(1.0, abs=1e-12)
    assert wf.overlap(wf) == pytest.approx(1.0, abs=1e-12)
    assert WaveFunction(gaussian(g, 1.5), g).expectation_x() == pytest.approx(1.5, abs=1e-10)
    with pytest.raises(NormalizationError):
        WaveFunction(np.zeros(128), g).normalized()


# --- Numerov -----------------------------------------------------------------

def test_numerov_free_equation_linear():
    dx = 0.1
    psi = numerov_integrate(np.zeros(50), 0.0, dx, dx)
    assert np.allclose(psi, dx * np.arange(50), rtol=1e-14, atol=1e-15)


def test_numerov_plane_wave():
    k, dx = 1.0, 0.1
    n = 101
    x = dx * np.arange(n)
    psi = numerov_integrate(np.full(n, -k ** 2), 0.0, np.sin(k * dx), dx)
    ref = np.sin(k * x)
    big = np.abs(ref) > 0.1
    assert np.max(np.abs(psi[big] - ref[big]) / np.abs(ref[big])) <= 1e-8


def test_numerov_plane_wave_matches_discrete_recurrence():
    # the scheme solves sin(n theta) exactly, cos theta = (1 - 5 (k dx)^2/12) / (1 + (k dx)^2/12)
    k, dx = 1.0, 0.1
    n = 101
    th = np.arccos((1 - 5 * (k * dx) ** 2 / 12) / (1 + (k * dx) ** 2 / 12))
    psi = numerov_integrate(np.full(n, -k ** 2), 0.0, np.sin(k * dx), dx)
    ref = np.sin(th * np.arange(n)) * np.sin(k * dx) / np.sin(th)
    assert np.max(np.abs(psi - ref)) <= 1e-13
    # local phase error is sixth order in k dx
    assert abs(th - k * dx) <= (k * dx) ** 6 / 40


def test_numerov_backward_matches_reversed_forward():
    g = np.linspace(-1, 1, 40)
    a = numerov_integrate(g, 0.0, 1e-3, 0.05, "backward")
    b = numerov_integrate(g[::-1], 0.0, 1e-3, 0.05)[::-1]
    assert np.allclose(a, b, rtol=1e-14)


def test_numerov_step_size_error():
    with pytest.raises(StepSizeError):
        numerov_integrate(np.full(10, 2000.0), 0.0, 1.0, 0.1)


def test_numerov_ground_state_has_no_node():
    x = np.linspace(-8, 8, 1601)
    V = 0.5 * x ** 2
    psi = numerov_state(x, V, 0.5)
    core = np.abs(x) < 4
    assert np.all(psi[core] > 0)
    gauss = np.exp(-x ** 2 / 2) / np.pi ** 0.25
    assert np.max(np.abs(psi - gauss)) < 1e-4


def test_numerov_harmonic_levels():
    x = np.linspace(-10, 10, 2001)
    E = numerov_eigenvalues(x, 0.5 * x ** 2, E_range=(0.1, 6.2), n_states=6, n_scan=400)
    assert np.allclose(E, HO[:6], rtol=1e-6)


def test_numerov_infinite_well_ratios():
    x = np.linspace(-1.2, 1.2, 2401)
    V = np.where(np.abs(x) < 1.0, 0.0, 1e5)
    E = numerov_eigenvalues(x, V, E_range=(0.1, 60.0), n_states=4, n_scan=600)
    assert np.allclose(E / E[0], (np.arange(4) + 1) ** 2, rtol=1e-3)


def test_numerov_not_enough_states():
    x = np.linspace(-8, 8, 801)
    with pytest.raises(NotEnoughStatesError):
        numerov_eigenvalues(x, 0.5 * x ** 2, E_range=(0.1, 2.0), n_states=3)


@pytest.mark.parametrize("V", [lambda x: 0.1 * x ** 4, lambda x: 0.5 * x ** 2 + 0.05 * x ** 4,
                               lambda x: 0.5 * x ** 2 + 0.05 * x ** 3 + 0.02 * x ** 4])
def test_numerov_against_fourier(V):
    g = SpatialGrid.centered(16.0, 256)
    ef = eigenstates(g, V(g.x), n_states=5).energies
    x = np.linspace(-8, 8, 3201)
    en = numerov_eigenvalues(x, V(x), E_range=(float(V(x).min()) + 1e-6, 1.3 * ef[4]), n_states=5, n_scan=500)
    assert np.allclose(en, ef, rtol=1e-6)


# --- Fourier grid ------------------------------------------------------------

def test_free_spectrum():
    g = SpatialGrid(2 * np.pi * 4, 64)
    E = np.linalg.eigvalsh(hamiltonian_matrix(g, np.zeros(64)))
    assert abs(E[0]) < 1e-9
    assert E[1] == pytest.approx(E[2], abs=1e-9)
    assert E[1] == pytest.approx(0.5 * g.dk ** 2, rel=1e-9)


def test_kinetic_matrix_symmetric():
    T = kinetic_matrix(SpatialGrid(10.0, 50))
    assert np.array_equal(T, T.T)


def test_harmonic_fourier_levels():
    g = harmonic_grid(20.0)
    sol = eigenstates(g, 0.5 * g.x ** 2, n_states=10)
    assert np.allclose(sol.energies, HO, rtol=1e-8)
    V = sol.vectors
    assert np.allclose(V.T @ V * g.dx, np.eye(10), atol=1e-9)
    H = hamiltonian_matrix(g, 0.5 * g.x ** 2)
    res = np.linalg.norm(H @ V - V * sol.energies, axis=0) * np.sqrt(g.dx)
    assert np.all(res <= 1e-9 * np.linalg.norm(H, 2))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 256), st.floats(1.0, 100.0), st.integers(0, 2 ** 32 - 1))
def test_fft_kinetic_equals_dense(half_n, L, seed):
    N = 2 * half_n
    g = SpatialGrid(L, N)
    r = np.random.default_rng(seed)
    psi = r.normal(size=N) + 1j * r.normal(size=N)
    a = apply_kinetic(psi, g)
    b = kinetic_matrix(g) @ psi
    assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(b)


def test_kinetic_plane_wave_and_constant():
    g = SpatialGrid(2 * np.pi, 32)
    for n in (1, 5, -7):
        k = n * g.dk
        pw = np.exp(1j * k * g.x)
        assert np.allclose(apply_kinetic(pw, g), 0.5 * k ** 2 * pw, atol=1e-11)
    assert np.allclose(apply_kinetic(np.ones(32), g), 0.0, atol=1e-13)


def test_nyquist_fidelity():
    g = harmonic_grid(20.0)
    V = 0.5 * g.x ** 2
    sol = eigenstates(g, V, n_states=60)
    top = np.abs(g.k) >= 0.9 * g.k_max
    for n in np.nonzero(sol.energies <= 0.8 * V.max())[0]:
        p = np.abs(np.fft.fft(sol.state(n))) ** 2
        assert p[top].sum() / p.sum() < 1e-6


def test_spectral_bounds():
    g = SpatialGrid(10.0, 64)
    lo, hi = spectral_bounds(g, np.zeros(64))
    assert lo == 0.0
    assert hi == pytest.approx(0.5 * g.k_max ** 2 * 1.01)
    gh = harmonic_grid(20.0)
    V = 0.5 * gh.x ** 2
    lo, hi = spectral_bounds(gh, V)
    E = np.linalg.eigvalsh(hamiltonian_matrix(gh, V))
    assert lo <= E.min() and E.max() <= hi
    fam = np.array([V, V + 3.0, V - 1.0])
    lo2, hi2 = spectral_bounds(gh, fam)
    assert lo2 == pytest.approx(V.min() - 1.0)
    assert hi2 > hi


# --- Chebyshev ---------------------------------------------------------------

def test_bessel_against_scipy():
    for z in (0.5, 7.0, 30.0, 120.0):
        J = bessel_j(80, z)
        assert np.allclose(J, scipy.special.jv(np.arange(81), z), atol=1e-13)


def test_chebyshev_coefficients_trivial_and_identity():
    a = chebyshev_coefficients(0.0)
    assert a[0] == 1.0 and np.all(a[1:] == 0)
    for z in (0.3, 5.0, 30.0):
        a = chebyshev_coefficients(z)
        # T_n(1) = 1 for all n
        assert abs(a.sum() - np.exp(-1j * z)) <= 1e-13


def test_chebyshev_coefficient_decay_at_z30():
    a = np.abs(chebyshev_coefficients(30.0))
    assert a[45] < 1e-5
    assert a[25] > 1e-2
    assert np.all(np.diff(a[40:]) < 0)


def test_chebyshev_truncation_warning():
    with pytest.warns(TruncationWarning):
        chebyshev_coefficients(30.0, n_max=20)


@pytest.fixture(scope="module")
def ho():
    g = harmonic_grid(20.0)
    V = 0.5 * g.x ** 2
    lo, hi = spectral_bounds(g, V)
    return g, V, grid_hamiltonian(g, V), lo, hi


def test_chebyshev_eigenstate_phase(ho):
    g, V, H, lo, hi = ho
    sol = eigenstates(g, V, n_states=3)
    dt = 0.1
    for n in range(3):
        psi = sol.state(n).astype(complex)
        out = propagate_chebyshev(psi, H, lo, hi, dt, 1)
        assert np.max(np.abs(out - np.exp(-1j * sol.energies[n] * dt) * psi)) <= 1e-10 * np.max(np.abs(psi))


def test_chebyshev_dt_zero_identity(ho):
    g, V, H, lo, hi = ho
    psi = gaussian(g, 1.0)
    assert np.array_equal(propagate_chebyshev(psi, H, lo, hi, 0.0, 5), psi)


def test_chebyshev_matches_dense_exponential(ho, rng):
    g, V, H, lo, hi = ho
    psi = normalize_random(g, rng)
    dt = 0.05
    U = scipy.linalg.expm(-1j * dt * hamiltonian_matrix(g, V))
    out = propagate_chebyshev(psi, H, lo, hi, dt, 1)
    assert np.linalg.norm(out - U @ psi) <= 1e-10 * np.linalg.norm(psi)
    assert g.norm(out) == pytest.approx(1.0, abs=1e-12)


def normalize_random(g, rng):
    psi = rng.normal(size=g.N) + 1j * rng.normal(size=g.N)
    return psi / g.norm(psi)


def test_chebyshev_detects_bad_bounds(ho, rng):
    # a random state populates the whole grid spectrum, most of it above E_hi
    g, V, H, lo, hi = ho
    with pytest.raises(NormalizationError, match="spectral bounds"):
        propagate_chebyshev(normalize_random(g, rng), H, lo, 0.2 * hi, 0.05, 50)


def test_chebyshev_against_extrapolated_split_operator(ho):
    g, V, H, lo, hi = ho
    psi = gaussian(g, 1.5, 0.5)
    T = 10.0
    cheb = propagate_chebyshev(psi, H, lo, hi, T / 1000, 1000)
    s1 = propagate_split_operator(psi, g, V, T / 4000, 4000)
    s2 = propagate_split_operator(psi, g, V, T / 8000, 8000)
    extrap = (4 * s2 - s1) / 3  # global error ~ dt^2
    assert np.sqrt(g.dx) * np.linalg.norm(cheb - extrap) <= 1e-6


# --- split operator ----------------------------------------------------------

def test_split_free_gaussian_spreading():
    g = SpatialGrid.centered(80.0, 1024)
    s0 = 0.7
    psi = gaussian(g, 0.0, s0)
    t = 5.0
    out = propagate_split_operator(psi, g, np.zeros(g.N), t / 50, 50)
    p = np.abs(out) ** 2 * g.dx
    width = np.sqrt(np.sum(p * g.x ** 2))
    assert width == pytest.approx(s0 * np.sqrt(1 + (t / (2 * s0 ** 2)) ** 2), rel=1e-6)


def test_split_ground_state_stationary(ho):
    g, V, H, lo, hi = ho
    psi = eigenstates(g, V, n_states=1).state(0).astype(complex)
    out = propagate_split_operator(psi, g, V, 2 * np.pi / 2000, 2000)
    assert abs(g.inner(psi, out)) == pytest.approx(1.0, abs=1e-8)


def test_split_coherent_state_follows_classical_path(ho):
    g, V, H, lo, hi = ho
    x0 = 2.0
    psi = harmonic_ground_state(g, x0)
    dt = 2 * np.pi / 4000
    for k in range(1, 5):
        psi = propagate_split_operator(psi, g, V, dt, 1000)
        t = k * 1000 * dt
        mean = np.sum(np.abs(psi) ** 2 * g.x) * g.dx
        assert abs(mean - x0 * np.cos(t)) <= 1e-4 * x0


def test_split_order_against_chebyshev(ho):
    g, V, H, lo, hi = ho
    psi = gaussian(g, 1.0, 0.5)
    T = 2.0
    ref = propagate_chebyshev(psi, H, lo, hi, T / 200, 200)
    errs = [np.linalg.norm(propagate_split_operator(psi, g, V, T / n, n) - ref) for n in (50, 100, 200)]
    r = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((r > 3.5) & (r < 4.5))


@pytest.mark.parametrize("method", ["split", "chebyshev"])
def test_norm_conservation_per_step(ho, method):
    g, V, H, lo, hi = ho
    psi = gaussian(g, 2.0, 0.4, 1.0)
    for _ in range(20):
        new = (propagate_split_operator(psi, g, V, 0.05, 1) if method == "split"
               else propagate_chebyshev(psi, H, lo, hi, 0.05, 1))
        assert g.norm(new) == pytest.approx(g.norm(psi), abs=1e-12)
        psi = new


def test_time_dependent_potential_midpoint(ho):
    # V(t) = x^2/2 + f(t) x: both propagators evaluate V at the step midpoint
    g, V, _, _, _ = ho
    Vt = lambda t: V + 0.3 * np.sin(t) * g.x
    lo, hi = spectral_bounds(g, np.array([Vt(0.5 * np.pi), Vt(1.5 * np.pi)]))
    psi = harmonic_ground_state(g).astype(complex)
    a = propagate_chebyshev(psi, grid_hamiltonian(g, Vt), lo, hi, 0.01, 300)
    b = propagate_split_operator(psi, g, Vt, 0.01, 300)
    assert np.sqrt(g.dx) * np.linalg.norm(a - b) < 1e-4
    assert kinetic_spectrum(g).shape == (g.N,)
