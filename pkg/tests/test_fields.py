"""Tests for static fields, the free-wave propagator, and pulse data."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gyroled.kernel import build_kernel_table
from gyroled.profiles import (
    ball_profile,
    panel_quadrature,
    shell_profile,
    smooth_shell_profile,
)
from gyroled.fields import (
    OmegaHistory,
    WavePulse,
    coulomb_potential,
    coulomb_potential_derivative,
    kirchhoff_wave,
    source_potential,
    static_stream_unit,
    stationary_stream,
    wave_spin_series,
    wave_support_window,
)

SHELL = shell_profile(total=-1.0, radius=1.0)
BALL = ball_profile(total=-1.0, radius=1.0)
SMOOTH = smooth_shell_profile(total=-1.0, radius=1.0)

# peak of the axial wave spin for the reference pulse below, frozen from
# the spectrally converged quadrature (stable to all shown digits)
REFERENCE_SPIN_PEAK = 0.003511574074074076


def make_pulse(**kw):
    base = dict(amplitude=1e-3, r_min=3.0, r_max=4.0)
    base.update(kw)
    return WavePulse(**base)


class TestStatics:
    def test_coulomb_potential_shell(self):
        r = np.array([0.1, 0.5, 1.0, 2.0, 10.0])
        expected = np.where(r <= 1.0, -1.0, -1.0 / r)
        assert_allclose(coulomb_potential(SHELL, r), expected, rtol=1e-13)

    def test_coulomb_potential_ball(self):
        r = np.array([0.0, 0.3, 0.8, 1.0, 3.0])
        expected = -0.5 * (3.0 - r**2)
        expected[r > 1.0] = -1.0 / r[r > 1.0]
        assert_allclose(coulomb_potential(BALL, r), expected, rtol=1e-10)

    def test_coulomb_derivative_is_enclosed_charge_law(self):
        r = np.linspace(0.05, 3.0, 40)
        d = 1e-6
        fd = (coulomb_potential(SMOOTH, r + d) - coulomb_potential(SMOOTH, r - d)) / (
            2 * d
        )
        # the potential table is interpolated, so its differences carry a
        # little more noise than the analytic enclosed-charge derivative
        assert_allclose(coulomb_potential_derivative(SMOOTH, r), fd, rtol=2e-4, atol=1e-7)

    def test_static_stream_shell_closed_form(self):
        r = np.array([0.2, 0.9, 1.0, 2.0])
        expected = np.array([-1 / 3, -1 / 3, -1 / 3, -1 / 24])
        assert_allclose(static_stream_unit(SHELL, r), expected, rtol=1e-13)

    def test_static_stream_exterior_is_dipolar(self):
        # outside the support the unit stream factor must fall off as 1/r^3
        r = np.array([1.2, 1.8, 2.5, 4.0, 9.0])
        vals = static_stream_unit(SMOOTH, r) * r**3
        assert_allclose(vals, vals[0], rtol=1e-9)

    def test_stationary_stream_scales_linearly_in_omega(self):
        zeta = np.array([0.3, 0.8])
        z = np.array([0.1, -0.4])
        one = stationary_stream(SMOOTH, 1.0, zeta, z)
        assert_allclose(stationary_stream(SMOOTH, -2.5, zeta, z), -2.5 * one, rtol=1e-13)

    @pytest.mark.parametrize("profile", [SHELL, BALL, SMOOTH], ids=["shell", "ball", "smooth"])
    def test_stream_moment_matches_kernel_kappa(self, profile):
        """The self-coupling of the stationary stream over the charge cloud
        equals the second moment of the memory kernel."""
        table = build_kernel_table(profile, n_intervals=2048)
        if profile.is_singular:
            # shell measure: int zeta^2 V f dV = (2/3) total R^2 V(R)
            lhs = (2.0 / 3.0) * profile.total * profile.radius**2 * static_stream_unit(
                profile, np.array([profile.radius])
            )[0]
        else:
            lo, hi = profile.support

            def integrand(r):
                return (
                    (8.0 * np.pi / 3.0)
                    * profile.density_values(r)
                    * static_stream_unit(profile, r)
                    * r**4
                )

            lhs = panel_quadrature(integrand, lo, hi, n_panels=64)
        assert_allclose(lhs, table.kappa, rtol=1e-8)

    def test_source_potential_matches_stationary_outside(self):
        # a constant-spin history must reproduce the static stream exactly
        # wherever the retarded evaluation point lies outside the support
        omega = 0.7
        hist = OmegaHistory(t=np.array([0.0, 50.0]), omega=np.array([omega, omega]), omega0=omega)
        pts = np.array([[1.6, 0.0, 0.4], [2.5, 1.0, -0.8], [0.9, 3.0, 2.0]])
        t_eval = 30.0
        axis = np.array([0.0, 0.0, 1.0])
        got = np.array(
            [
                p[0] * a[1] - p[1] * a[0]
                for p, a in (
                    (p, source_potential(SMOOTH, hist, axis, p, t_eval)) for p in pts
                )
            ]
        )
        zeta = np.hypot(pts[:, 0], pts[:, 1])
        want = stationary_stream(SMOOTH, omega, zeta, pts[:, 2])
        assert_allclose(got, want, rtol=1e-9)


class TestPulse:
    def test_validation(self):
        with pytest.raises(ValueError):
            WavePulse(amplitude=1.0, r_min=2.0, r_max=1.0)
        with pytest.raises(ValueError):
            WavePulse(amplitude=1.0, r_min=-1.0, r_max=2.0)

    def test_bump_support_and_smooth_ends(self):
        pulse = make_pulse()
        r = np.array([2.999, 3.0, 3.5, 4.0, 4.001])
        chi = pulse.chi(r)
        assert chi[0] == 0.0 and chi[2] > 0.0 and chi[4] == 0.0
        # quartic contact at both edges: still tiny just inside
        assert abs(pulse.chi(np.array([3.0 + 1e-4]))[0]) < 1e-12

    def test_grad_q_matches_finite_differences(self):
        rng = np.random.default_rng(17)
        for beta in (0.0, 0.4):
            pulse = make_pulse(z_asymmetry=beta)
            pts = rng.uniform(-4.2, 4.2, size=(30, 3))
            grad = pulse.grad_q(pts)
            d = 1e-6
            for k in range(3):
                e = np.zeros(3)
                e[k] = d
                rp = np.linalg.norm(pts + e, axis=-1)
                rm = np.linalg.norm(pts - e, axis=-1)
                fd = (
                    pulse.q_factor(rp, (pts + e)[:, 2])
                    - pulse.q_factor(rm, (pts - e)[:, 2])
                ) / (2 * d)
                assert_allclose(grad[:, k], fd, atol=1e-8)

    def test_trivial_pulse_detection(self):
        assert make_pulse(amplitude=0.0).is_trivial()
        assert not make_pulse().is_trivial()


class TestKirchhoff:
    def test_initial_data_reproduced(self):
        pulse = make_pulse(z_asymmetry=0.35)
        rng = np.random.default_rng(3)
        pts = rng.uniform(-4.5, 4.5, size=(24, 3))
        r = np.linalg.norm(pts, axis=-1)
        q = pulse.q_factor(r, pts[:, 2])
        expected = np.stack([-pts[:, 1] * q, pts[:, 0] * q, np.zeros(len(pts))], axis=-1)
        assert_allclose(kirchhoff_wave(pulse, pts, 0.0), expected, atol=1e-15)

    def test_continuous_at_small_times(self):
        pulse = make_pulse(velocity_amplitude=0.5)
        x = np.array([3.4, -0.2, 0.7])
        a0 = kirchhoff_wave(pulse, x, 0.0)
        a_eps = kirchhoff_wave(pulse, x, 1e-6)
        assert np.linalg.norm(a_eps - a0) < 1e-4

    def test_satisfies_wave_equation(self):
        """Second differences in time must match the spatial Laplacian."""
        pulse = make_pulse(z_asymmetry=0.35)
        d = 2e-3
        t0 = 1.7
        probes = [
            np.array([2.0, 0.5, 1.0]),
            np.array([0.2, 0.1, 3.0]),
            np.array([1.5, -1.0, 0.3]),
        ]
        for x in probes:
            att = (
                kirchhoff_wave(pulse, x, t0 + d)
                - 2 * kirchhoff_wave(pulse, x, t0)
                + kirchhoff_wave(pulse, x, t0 - d)
            ) / d**2
            lap = np.zeros(3)
            for k in range(3):
                e = np.zeros(3)
                e[k] = d
                lap += (
                    kirchhoff_wave(pulse, x + e, t0)
                    - 2 * kirchhoff_wave(pulse, x, t0)
                    + kirchhoff_wave(pulse, x - e, t0)
                ) / d**2
            res = np.linalg.norm(att - lap)
            assert res <= max(1e-2 * np.linalg.norm(att), 1e-5)

    def test_strict_zero_outside_causal_window(self):
        pulse = make_pulse()
        x = np.array([0.6, 0.2, -0.3])
        lo, hi = wave_support_window(pulse, float(np.linalg.norm(x)))
        for t in (0.5 * lo, hi + 0.3, hi + 2.0):
            assert np.all(kirchhoff_wave(pulse, x, t) == 0.0)

    def test_quadrature_order_already_converged(self):
        pulse = make_pulse(z_asymmetry=0.35, velocity_amplitude=0.4)
        rng = np.random.default_rng(11)
        pts = rng.uniform(-3, 3, size=(6, 3))
        for t in (0.9, 2.4, 5.1):
            coarse = kirchhoff_wave(pulse, pts, t, n_polar=16, n_azimuth=24)
            fine = kirchhoff_wave(pulse, pts, t, n_polar=64, n_azimuth=128)
            assert np.max(np.abs(coarse - fine)) < 1e-12


class TestWaveSpin:
    def test_window_and_peak(self):
        pulse = make_pulse(z_asymmetry=0.35)
        times = np.linspace(0.0, 8.0, 33)
        series = wave_spin_series(pulse, SHELL, times)
        lo, hi = wave_support_window(pulse, 1.0)
        outside = (times < lo) | (times > hi)
        assert np.all(series[outside] == 0.0)
        assert np.any(series[~outside] != 0.0)
        assert_allclose(np.max(np.abs(series)), REFERENCE_SPIN_PEAK, rtol=1e-9)

    def test_scales_linearly_with_amplitude(self):
        times = np.linspace(2.0, 5.0, 7)
        one = wave_spin_series(make_pulse(), SHELL, times)
        three = wave_spin_series(make_pulse(amplitude=3e-3), SHELL, times)
        assert_allclose(three, 3.0 * one, rtol=1e-12)

    def test_trivial_pulse_gives_exact_zeros(self):
        times = np.linspace(0.0, 6.0, 13)
        series = wave_spin_series(make_pulse(amplitude=0.0), SMOOTH, times)
        assert np.all(series == 0.0)


class TestOmegaHistory:
    def test_interpolation_and_edges(self):
        hist = OmegaHistory(
            t=np.array([1.0, 2.0, 3.0]),
            omega=np.array([0.2, 0.4, 0.1]),
            omega0=0.05,
        )
        assert hist(0.0) == 0.05
        assert hist(1.5) == pytest.approx(0.3)
        assert hist(10.0) == pytest.approx(0.1)
