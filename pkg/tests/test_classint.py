from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iontool.classint import (DORMAND_PRINCE, LOBATTO_IIIA_IIIB_3, RK4, STEPPERS, ButcherTableau, ForceField,
                              PhaseState, coulomb_force, energy_series, excursion_halves, harmonic_field,
                              integrate_adaptive, integrate_fixed, mathieu_field, oscillation_frequency,
                              relative_energy_drift, relax_to_equilibrium, rk_step, secular_energy_drift,
                              static_well_field,
                              step_euler_explicit, step_implicit_midpoint, step_partitioned_rk, step_rk,
                              step_stormer_verlet, total_energy)
from iontool.errors import InvalidArgumentError, SingularityError
from iontool.trapmodel import CA40, IonSpecies, MathieuParams, secular_frequency
from iontool.units import AMU, E_CHARGE, EPS0

FREE = ForceField(lambda t, x: np.zeros_like(x))
SYMPLECTIC = {"verlet": step_stormer_verlet, "midpoint": step_implicit_midpoint}


def harmonic_energy(omega):
    return lambda s: 0.5 * float(np.sum(s.v ** 2)) + 0.5 * omega ** 2 * float(np.sum(s.x ** 2))


# --- tableaux ----------------------------------------------------------------

def test_tableau_row_sum_enforced():
    with pytest.raises(InvalidArgumentError):
        ButcherTableau(np.array([[0.0, 0.0], [0.5, 0.0]]), np.array([0.5, 0.5]), np.array([0.0, 0.4]))
    with pytest.raises(InvalidArgumentError):
        ButcherTableau(np.zeros((1, 1)), np.array([0.9]), np.zeros(1))


def test_dormand_prince_coefficients():
    dp = DORMAND_PRINCE
    assert dp.a[2, 1] == 9 / 40
    assert dp.b_err[6] == 1 / 40
    assert dp.b[0] == 35 / 384
    assert np.allclose(dp.a.sum(axis=1), dp.c, atol=1e-12)
    assert dp.b.sum() == pytest.approx(1.0, abs=1e-12)
    assert dp.b_err.sum() == pytest.approx(1.0, abs=1e-12)
    assert dp.explicit


def test_lobatto_pair_coefficients():
    pos, vel = LOBATTO_IIIA_IIIB_3.pos, LOBATTO_IIIA_IIIB_3.vel
    assert vel.a[1, 0] == 1 / 6
    assert pos.a[1, 2] == -1 / 24
    assert Fraction(pos.a[1, 1]).limit_denominator(100) == Fraction(1, 3)
    for t in (pos, vel):
        assert np.allclose(t.a.sum(axis=1), t.c, atol=1e-12)


# --- single steps ------------------------------------------------------------

@pytest.mark.parametrize("method", sorted(STEPPERS))
def test_free_flight_exact(method):
    s0 = PhaseState(0.0, [[1.0, -2.0, 0.5]], [[3.0, 0.25, -1.0]])
    s = integrate_fixed(s0, FREE, 0.125, 8, method).final
    assert np.allclose(s.x, s0.x + 1.0 * s0.v, rtol=1e-14, atol=1e-14)
    assert np.allclose(s.v, s0.v, rtol=0, atol=1e-14)
    assert s.t == pytest.approx(1.0)


def test_euler_first_step():
    w, h = 2.0, 0.01
    s = step_euler_explicit(PhaseState(0.0, [1.0], [0.0]), harmonic_field(w), h)
    assert s.x[0] == 1.0
    assert s.v[0] == pytest.approx(-w ** 2 * h, rel=1e-15)


def test_verlet_first_step():
    w, h = 2.0, 0.01
    s = step_stormer_verlet(PhaseState(0.0, [1.0], [0.0]), harmonic_field(w), h)
    assert s.x[0] == pytest.approx(1 - w ** 2 * h ** 2 / 2, rel=1e-15)


@pytest.mark.parametrize("name", sorted(SYMPLECTIC))
def test_time_reversal(name):
    step = SYMPLECTIC[name]
    f = ForceField(lambda t, x: -x - 0.3 * x ** 3)
    s0 = PhaseState(0.0, [0.8], [-0.4])
    s1 = step(s0, f, 0.05)
    back = step(s1, f, -0.05)
    assert np.allclose(back.flat(), s0.flat(), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("name", sorted(SYMPLECTIC))
def test_step_jacobian_determinant(name):
    step = SYMPLECTIC[name]
    f = harmonic_field(1.3)
    h, d = 0.1, 1e-6
    y0 = np.array([0.7, 0.2])
    J = np.empty((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = d
        p = step(PhaseState(0.0, [y0[0] + e[0]], [y0[1] + e[1]]), f, h).flat()
        m = step(PhaseState(0.0, [y0[0] - e[0]], [y0[1] - e[1]]), f, h).flat()
        J[:, k] = (p - m) / (2 * d)
    assert np.linalg.det(J) == pytest.approx(1.0, abs=1e-8)


def test_euler_jacobian_is_not_unit():
    w, h, d = 1.3, 0.1, 1e-6
    f = harmonic_field(w)
    J = np.empty((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = d
        p = step_euler_explicit(PhaseState(0.0, [0.7 + e[0]], [0.2 + e[1]]), f, h).flat()
        m = step_euler_explicit(PhaseState(0.0, [0.7 - e[0]], [0.2 - e[1]]), f, h).flat()
        J[:, k] = (p - m) / (2 * d)
    # linear map [[1, h], [-w^2 h, 1]]
    assert np.linalg.det(J) == pytest.approx(1 + (w * h) ** 2, rel=1e-8)


def test_rk_exponential_oracle():
    y, err = rk_step(lambda t, y: y, 0.0, np.array([1.0]), 0.1, DORMAND_PRINCE)
    assert abs(y[0] - np.exp(0.1)) <= 1e-8
    assert err is not None


def test_embedded_error_scales_as_fifth_power():
    errs, glob = [], []
    for h in (0.2, 0.1, 0.05):
        y, err = rk_step(lambda t, y: y, 0.0, np.array([1.0]), h, DORMAND_PRINCE)
        errs.append(abs(err[0]))
        glob.append(abs(y[0] - np.exp(h)))
    r = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((r > 25) & (r < 40))
    assert np.all(np.array(glob[:-1]) / np.array(glob[1:]) > 50)


def test_rk4_and_implicit_tableau_agree_on_linear_problem():
    # implicit-stage path: Gauss-Legendre 2-stage tableau (order 4)
    s3 = np.sqrt(3)
    gl2 = ButcherTableau(np.array([[0.25, 0.25 - s3 / 6], [0.25 + s3 / 6, 0.25]]), np.array([0.5, 0.5]),
                         np.array([0.5 - s3 / 6, 0.5 + s3 / 6]), order=4)
    F = lambda t, y: np.array([y[1], -y[0]])
    y0 = np.array([1.0, 0.0])
    a, _ = rk_step(F, 0.0, y0, 0.1, RK4)
    b, _ = rk_step(F, 0.0, y0, 0.1, gl2)
    exact = np.array([np.cos(0.1), -np.sin(0.1)])
    assert np.allclose(a, exact, atol=1e-7)
    assert np.allclose(b, exact, atol=1e-7)


def test_step_rk_on_phase_state():
    s, err = step_rk(PhaseState(0.0, [1.0], [0.0]), harmonic_field(1.0), 0.1)
    assert s.x[0] == pytest.approx(np.cos(0.1), abs=1e-9)
    assert s.v[0] == pytest.approx(-np.sin(0.1), abs=1e-9)


def test_lobatto_fourth_order():
    w = 1.0
    T = 2 * np.pi / w
    errs = []
    for n in (20, 40):
        # start on a zero crossing so the position is first-order sensitive to phase error at t = T
        traj = integrate_fixed(PhaseState(0.0, [0.0], [w]), harmonic_field(w), T / n, n, "lobatto")
        errs.append(abs(traj.final.x[0]))
    assert 12 < errs[0] / errs[1] < 20


def test_midpoint_second_order():
    T = 2 * np.pi
    errs = []
    for n in (50, 100):
        s = PhaseState(0.0, [1.0], [0.0])
        for _ in range(n):
            s = step_implicit_midpoint(s, harmonic_field(1.0), T / n)
        errs.append(abs(s.x[0] - 1.0) + abs(s.v[0]))
    assert 3.5 < errs[0] / errs[1] < 4.5


# --- energy behaviour --------------------------------------------------------

@pytest.fixture(scope="module")
def verlet_harmonic_run():
    w = 1.0
    h = 2 * np.pi / w / 100
    f = harmonic_field(w)
    traj = integrate_fixed(PhaseState(0.0, [1.0], [0.0]), f, h, 100_000, "verlet")
    return w, h, energy_series(traj, f)


def test_verlet_max_energy_deviation_bound(verlet_harmonic_run):
    # literal bound max|E - E0|/E0 <= 1e-4 at h = T/100 over 1e5 steps
    w, h, E = verlet_harmonic_run
    assert relative_energy_drift(E) <= 1e-4


def test_verlet_energy_oscillation_matches_shadow_energy(verlet_harmonic_run):
    # Verlet conserves v^2/2 + w^2 x^2 (1 - w^2 h^2/4)/2 exactly, so E/E0 lies in [1 - (wh)^2/4, 1]
    w, h, E = verlet_harmonic_run
    assert relative_energy_drift(E) == pytest.approx((w * h) ** 2 / 4, rel=1e-3)
    assert np.all(E <= E[0] * (1 + 1e-12))


def test_verlet_secular_drift_small_and_euler_grows(verlet_harmonic_run):
    w, h, E = verlet_harmonic_run
    per = 100 * 10  # ten periods
    assert secular_energy_drift(E, per) < 1e-4
    f = harmonic_field(w)
    eul = integrate_fixed(PhaseState(0.0, [1.0], [0.0]), f, h, 100_000, "euler", stride=10)
    Ee = energy_series(eul, f)
    assert np.all(np.diff(Ee) > 0)
    # per step E grows by the factor 1 + (w h)^2 exactly
    assert Ee[1] / Ee[0] == pytest.approx((1 + (w * h) ** 2) ** 10, rel=1e-12)
    assert relative_energy_drift(Ee) > 1e-2
    assert secular_energy_drift(Ee, 100) > 1e-2


def test_midpoint_energy_no_secular_drift():
    w, h = 1.0, 0.05
    f = harmonic_field(w)
    traj = integrate_fixed(PhaseState(0.0, [1.0], [0.0]), f, h, 10_000, "midpoint", stride=5)
    E = energy_series(traj, f)
    n = E.size // 2
    assert relative_energy_drift(E) <= (h * w) ** 2
    assert abs(E[n:].mean() - E[:n].mean()) <= 1e-3 * (h * w) ** 2


def test_total_energy_minimum_at_rest():
    f = harmonic_field(2.0, mass=3.0)
    assert total_energy(PhaseState(0.0, [0.0], [0.0]), f) == 0.0
    assert total_energy(PhaseState(0.0, [0.1], [0.0]), f) > 0
    assert total_energy(PhaseState(0.0, [0.0], [1.0]), f) == pytest.approx(1.5)


# --- adaptive ----------------------------------------------------------------

def test_adaptive_free_flight():
    traj = integrate_adaptive(PhaseState(0.0, [0.0], [1.0]), FREE, 10.0, 1e-8)
    assert all(e == 0 for e in traj.error_estimates)
    assert traj.rejected == 0
    assert traj.final.x[0] == pytest.approx(10.0, rel=1e-14)
    assert np.all(np.diff(traj.times) > 0)


def test_adaptive_softened_kepler_against_fine_fixed_step():
    eps = 0.1

    def accel(t, x):
        r2 = np.sum(x * x) + eps ** 2
        return -x / r2 ** 1.5

    f = ForceField(accel)
    s0 = PhaseState(0.0, [1.0, 0.0], [0.0, 0.8])
    t_end, tol = 2.0, 1e-8
    ad = integrate_adaptive(s0, f, t_end, tol)
    ref = s0
    h = 1e-4
    for _ in range(int(round(t_end / h))):
        ref, _ = step_rk(ref, f, h)
    assert ad.final.t == pytest.approx(t_end)
    # same mixed absolute/relative norm the step controller uses: tol * (1 + max|y|)
    scale = 1.0 + np.max(np.abs(ref.flat()))
    assert np.max(np.abs(ad.final.flat() - ref.flat())) <= 10 * tol * scale
    assert ad.accepted < 2000


def test_adaptive_rejects_bad_tolerance():
    with pytest.raises(InvalidArgumentError):
        integrate_adaptive(PhaseState(0.0, [0.0], [1.0]), FREE, 1.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        integrate_adaptive(PhaseState(0.0, [0.0], [1.0]), FREE, 1.0, 1e-6, tableau=RK4)


def test_adaptive_mathieu_secular_and_micromotion():
    # q = 0.2: slow secular oscillation with rf micromotion of relative size ~ q/2
    a, q, w = 0.0, 0.2, 1.0
    T = 2 * np.pi / w
    traj = integrate_adaptive(PhaseState(0.0, [1.0], [0.0]), mathieu_field(a, q, w), 60 * T, 1e-10,
                              h_max=T / 40)
    tt = np.linspace(0, 60 * T, 24001)
    u = np.interp(tt, traj.times, traj.x[:, 0])
    f = oscillation_frequency(tt, u, T)
    assert 2 * np.pi * f == pytest.approx(secular_frequency(MathieuParams(a, q), w), rel=0.02)
    k = int(round(T / (tt[1] - tt[0])))
    smooth = np.convolve(u, np.ones(k) / k, mode="same")
    mid = slice(k, -k)
    ratio = np.max(np.abs(u - smooth)[mid]) / np.max(np.abs(smooth)[mid])
    assert ratio == pytest.approx(q / 2, rel=0.3)


# --- Coulomb -----------------------------------------------------------------

def test_two_ions_opposite_forces():
    x = np.array([[-1e-6, 0, 0], [1e-6, 0, 0]])
    a = coulomb_force(x, CA40)
    assert np.allclose(a[0], -a[1], rtol=1e-15)
    assert a[1, 0] > 0
    r = 2e-6
    assert a[1, 0] == pytest.approx(E_CHARGE ** 2 / (4 * np.pi * EPS0 * r ** 2) / CA40.mass, rel=1e-12)


def test_three_ion_center_force_zero():
    x = np.array([[-3e-6, 0, 0], [0, 0, 0], [3e-6, 0, 0]])
    a = coulomb_force(x, CA40)
    assert np.allclose(a[1], 0.0, atol=1e-12 * np.abs(a).max())


def test_coincident_ions_raise():
    with pytest.raises(SingularityError):
        coulomb_force(np.zeros((2, 3)), CA40)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_coulomb_momentum_conservation(n, seed):
    r = np.random.default_rng(seed)
    x = r.normal(scale=5e-6, size=(n, 3))
    species = [IonSpecies(m * AMU, z * E_CHARGE) for m, z in zip(r.uniform(1, 100, n), r.integers(1, 3, n))]
    a = coulomb_force(x, species)
    m = np.array([s.mass for s in species])
    p = (m[:, None] * a).sum(axis=0)
    assert np.max(np.abs(p)) <= 1e-12 * np.max(np.abs(m[:, None] * a))


def test_two_ion_equilibrium_separation():
    wx = 2 * np.pi * 1e6
    d_exact = (E_CHARGE ** 2 / (2 * np.pi * EPS0 * CA40.mass * wx ** 2)) ** (1 / 3)
    f = static_well_field(CA40, wx)
    x0 = np.array([[-2e-6, 0, 0], [3e-6, 0, 0]])
    x = relax_to_equilibrium(x0, f, 2e-9, 40_000, 0.01)
    assert x[1, 0] - x[0, 0] == pytest.approx(d_exact, rel=1e-6)
    assert x[:, 0].mean() == pytest.approx(0.0, abs=1e-12)


# --- analysis helpers --------------------------------------------------------

def test_oscillation_frequency_of_sine():
    t = np.linspace(0, 10, 10001)
    assert oscillation_frequency(t, np.sin(2 * np.pi * 1.7 * t + 0.3)) == pytest.approx(1.7, rel=1e-4)
    with pytest.raises(InvalidArgumentError):
        oscillation_frequency(t, np.ones_like(t))


def test_excursion_halves_and_drift_validation():
    traj = integrate_fixed(PhaseState(0.0, [0.0, 1.0, 1.0], [0.0, 0.0, 0.0]), harmonic_field(1.0), 0.01, 1000)
    a, b = excursion_halves(traj)
    assert a == pytest.approx(1.0) and b == pytest.approx(1.0, rel=1e-3)
    with pytest.raises(InvalidArgumentError):
        relative_energy_drift([0.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        energy_series(traj, mathieu_field(0.0, 0.1, 1.0))


def test_unknown_method_rejected():
    with pytest.raises(InvalidArgumentError):
        integrate_fixed(PhaseState(0.0, [0.0], [0.0]), FREE, 0.1, 1, "leapfrog")


def test_partitioned_rk_free_flight():
    s = step_partitioned_rk(PhaseState(0.0, [1.0], [2.0]), FREE, 0.5)
    assert s.x[0] == pytest.approx(2.0, rel=1e-15)
