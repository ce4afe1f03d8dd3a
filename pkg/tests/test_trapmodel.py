import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iontool.classint import PhaseState, integrate_fixed, mathieu_field, oscillation_frequency, quadrupole_field
from iontool.errors import AntiTrappingError, InvalidArgumentError, UnstableParametersError
from iontool.fieldsolve import axis_points, evaluate_field, evaluate_potential
from iontool.trapmodel import (CA40, IonSpecies, MathieuParams, QuadrupoleCoefficients, TrapDrive, axial_frequency,
                               fit_quadratic_1d, mathieu_parameters, pseudopotential, quadrupole_gradient,
                               secular_frequency, stability_region_check)
from iontool.units import AMU, E_CHARGE

W_RF = 2 * np.pi * 12e6


def test_ion_species_validation():
    with pytest.raises(InvalidArgumentError):
        IonSpecies(-1.0, E_CHARGE)
    with pytest.raises(InvalidArgumentError):
        IonSpecies(AMU, 0.0)
    assert CA40.mass == pytest.approx(40 * AMU)


def test_drive_rejects_nonpositive_frequency():
    with pytest.raises(InvalidArgumentError):
        TrapDrive(100.0, 0.0)


def test_coefficients_reject_laplace_violation():
    with pytest.raises(InvalidArgumentError):
        QuadrupoleCoefficients(1.0, 1.0, 1.0, 0.0, 1.0, -1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e8, 1e8), min_size=6, max_size=6))
def test_projected_coefficients_satisfy_laplace(vals):
    c = QuadrupoleCoefficients.projected(vals[:3], vals[3:])
    for trip in (c.dc, c.rf):
        scale = max(np.abs(trip).max(), 1e-300)
        assert abs(trip.sum()) <= 1e-12 * scale


def test_zero_rf_gives_zero_q():
    c = QuadrupoleCoefficients(2e5, -1e5, -1e5, 0.0, 4e5, -4e5)
    mp = mathieu_parameters(CA40, TrapDrive(0.0, W_RF, 1.0), c)
    assert mp["y"].q == 0 and mp["z"].q == 0
    assert mp["y"].a != 0


def test_linear_trap_has_opposite_q():
    c = QuadrupoleCoefficients.linear_trap(beta_rf=5e5, alpha_dc=1e5)
    mp = mathieu_parameters(CA40, TrapDrive(200.0, W_RF, 1.0), c)
    assert mp["y"].q == pytest.approx(-mp["z"].q, rel=1e-14)


def test_mathieu_parameters_match_equation_of_motion():
    # independent oracle: the quadrupole acceleration at two rf phases must equal
    # -(w^2/4)(a - 2 q cos w t) u on each transverse axis
    ion = CA40
    drive = TrapDrive(200.0, W_RF, 2.0)
    k_rf = 0.2 * ion.mass * W_RF ** 2 / (2 * ion.charge * drive.U_rf)  # |q_y| = 0.2
    c = QuadrupoleCoefficients(3e4, -1e4, -2e4, 0.0, -k_rf, k_rf)
    mp = mathieu_parameters(ion, drive, c)
    assert abs(mp["y"].q) == pytest.approx(0.2, rel=1e-12)
    field_ = quadrupole_field(ion, c, drive)
    u = 1e-6
    for t in (0.0, 0.3 / W_RF, np.pi / W_RF):
        a = field_(t, np.array([0.0, u, u]))
        for k, ax in ((1, "y"), (2, "z")):
            p = mp[ax]
            expect = -(W_RF ** 2 / 4) * (p.a - 2 * p.q * np.cos(W_RF * t)) * u
            assert a[k] == pytest.approx(expect, rel=1e-12)


def test_nonfinite_inputs_rejected():
    c = QuadrupoleCoefficients.linear_trap(1e5, 1e4)
    with pytest.raises(InvalidArgumentError):
        mathieu_parameters(CA40, TrapDrive(np.nan, W_RF), c)


def test_secular_frequency_closed_forms():
    assert secular_frequency(MathieuParams(0.0, 0.0), W_RF) == 0.0
    assert secular_frequency(MathieuParams(0.0, 0.2), W_RF) == pytest.approx(W_RF * 0.1 / np.sqrt(2), rel=1e-14)
    with pytest.raises(UnstableParametersError):
        secular_frequency(MathieuParams(-0.1, 0.1), W_RF)


@pytest.mark.parametrize("a,q", [(-0.001, 0.25), (0.005, 0.1)])
def test_secular_frequency_matches_mathieu_trajectory(a, q):
    w = 1.0
    T_rf = 2 * np.pi / w
    h = T_rf / 200
    beta = MathieuParams(a, q).beta
    n = int(25 * (2 * np.pi / (beta * w / 2)) / h)
    traj = integrate_fixed(PhaseState(0.0, [1.0], [0.0]), mathieu_field(a, q, w), h, n)
    f = oscillation_frequency(traj.times, traj.x[:, 0], T_rf)
    assert 2 * np.pi * f == pytest.approx(secular_frequency(MathieuParams(a, q), w), rel=0.02)


def test_stability_check():
    assert stability_region_check(MathieuParams(0.0, 0.0))
    assert not stability_region_check(MathieuParams(0.0, 1.5))
    assert stability_region_check(MathieuParams(0.01, 0.3))


def test_axial_frequency_scaling_and_sign():
    assert axial_frequency(CA40, 0.0, 1e5) == 0.0
    w1 = axial_frequency(CA40, 1.0, 1e5)
    assert axial_frequency(CA40, 2.0, 1e5) == pytest.approx(np.sqrt(2) * w1, rel=1e-14)
    with pytest.raises(AntiTrappingError):
        axial_frequency(CA40, 1.0, -1e5)


def test_axial_frequency_from_bem_fit(trap):
    # segment 3 at -1 V; parabola fit over +-60 um against a central finite difference
    geom, system, sols = trap
    k = geom.electrode_names.index("dc3")
    x = np.linspace(-60e-6, 60e-6, 13)
    phi = evaluate_potential(system, sols[k], axis_points(x))
    _, _, c2 = fit_quadratic_1d(x, phi)
    U = -1.0
    alpha = 2 * c2  # unit-voltage solution: Phi = U alpha x^2 / 2
    h = 30e-6
    p3 = U * evaluate_potential(system, sols[k], axis_points([-h, 0.0, h]))
    curv_fd = (p3[0] - 2 * p3[1] + p3[2]) / h ** 2  # d2 Phi/dx2 = U alpha
    w_fd = np.sqrt(CA40.charge * curv_fd / CA40.mass)
    assert axial_frequency(CA40, U, alpha) == pytest.approx(w_fd, rel=1e-3)


def test_pseudopotential_scaling():
    g = np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]])
    p = pseudopotential(g, CA40, W_RF)
    assert p[0] == 0.0
    assert pseudopotential(2 * g, CA40, W_RF)[1] == pytest.approx(4 * p[1], rel=1e-14)
    with pytest.raises(InvalidArgumentError):
        pseudopotential(g, CA40, 0.0)


def test_pseudopotential_minimum_at_rf_null_quadrupole():
    c = QuadrupoleCoefficients.linear_trap(4e5, 1e4)
    drive = TrapDrive(100.0, 2 * np.pi * 20e6)
    r = np.linspace(-50e-6, 50e-6, 21)
    Y, Z = np.meshgrid(r, r, indexing="ij")
    pts = np.column_stack([np.zeros(Y.size), Y.ravel(), Z.ravel()])
    p = pseudopotential(quadrupole_gradient(c, drive, 0.0, pts), CA40, drive.omega_rf)
    assert np.allclose(pts[np.argmin(p)], 0.0)


def test_trap_pseudopotential_is_quadrupolar(trap):
    # 200 V_pp at 20 MHz: minimum on the axis, near-isotropic r^2 growth around it
    geom, system, sols = trap
    rf = sols[geom.electrode_names.index("rf")]
    drive_w = 2 * np.pi * 20e6
    r = np.linspace(-0.3e-3, 0.3e-3, 13)
    Y, Z = np.meshgrid(r, r, indexing="ij")
    pts = np.column_stack([np.zeros(Y.size), Y.ravel(), Z.ravel()])
    p = pseudopotential(100.0 * evaluate_field(system, rf, pts), CA40, drive_w)
    assert np.linalg.norm(pts[np.argmin(p)]) <= (r[1] - r[0]) + 1e-12
    s = 0.2e-3
    ring = np.array([[0.0, s, 0.0], [0.0, 0.0, s], [0.0, s / np.sqrt(2), s / np.sqrt(2)]])
    pr = pseudopotential(100.0 * evaluate_field(system, rf, ring), CA40, drive_w)
    assert np.ptp(pr) / pr.mean() < 0.05
    half = pseudopotential(100.0 * evaluate_field(system, rf, ring / 2), CA40, drive_w)
    assert half == pytest.approx(pr / 4, rel=0.05)
