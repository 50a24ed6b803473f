"""Acceptance suite: the eight primary checks of the package.

One test per criterion, named so `pytest -v` reads as a pass/fail line
per criterion; each test also prints a one-line verdict with the
measured numbers.

1. surface-shell memory kernel against the closed form and its norms
2. rotor inertia at rest, Lipschitz quotients, inversion round-trip
3. contraction constants L(10) and lambda*, empirical Picard ratio
4. soliton fixed point: exact constancy and monotone iteration
5. scattering decay: geometric window maxima, fitted rate, spin return
6. cross-solver agreement with second-order convergence
7. conservation drifts small and refining at second order
8. contraction-margin sign change at the critical coupling
"""

import numpy as np
import pytest

from gyroled.audit import CosimConfig, cosimulate
from gyroled.fields import WavePulse, wave_spin_series
from gyroled.kernel import kernel_eval, kernel_norms
from gyroled.profiles import shell_profile, smooth_shell_profile
from gyroled.rotor import RotorModel
from gyroled.solver import (
    DelayProblem,
    SolverConfig,
    decay_rate_bound,
    lambda_star,
    lipschitz_constant,
    measure_decay,
    picard_solve,
    volterra_march,
    weighted_norm,
)

SHELL_CHARGE = shell_profile(total=-1.0, radius=1.0)
SHELL_MASS = shell_profile(total=1.0, radius=1.0)
SMOOTH_CHARGE = smooth_shell_profile(total=-1.0, radius=1.0)
SMOOTH_MASS = smooth_shell_profile(total=1.0, radius=1.0)

SHELL_NORM_1 = 2.0 * (2.0 * np.sqrt(2.0) - 1.0) / 9.0
SHELL_NORM_INF = 1.0 / 3.0
SHELL_IOTA0 = 2.0 / 3.0
OMEGA0 = 0.3

SCATTER_PULSE = WavePulse(amplitude=6e-5, r_min=3.0, r_max=4.0)
SMOOTH_PULSE = WavePulse(amplitude=1e-3, r_min=2.0, r_max=3.0)

DRIVE_QUAD = dict(n_polar=16, n_azimuth=32, particle_radial=8, particle_polar=12)


@pytest.fixture(scope="session")
def shell_rotor():
    return RotorModel(SHELL_MASS)


@pytest.fixture(scope="session")
def smooth_rotor():
    return RotorModel(SMOOTH_MASS)


@pytest.fixture(scope="session")
def shell_scatter(shell_rotor):
    """Full-scale shell scattering: unit coupling, annulus pulse,
    horizon 40 radii at step 2R/128."""
    spin0 = shell_rotor.spin_from_omega(OMEGA0)
    config = SolverConfig(horizon=40.0, step=2.0 / 128, lam=4.0, tol=1e-13)
    wave = wave_spin_series(SCATTER_PULSE, SHELL_CHARGE, config.times())
    problem = DelayProblem.build(shell_rotor, SHELL_CHARGE, config, spin0, wave=wave)
    march = volterra_march(problem)
    return problem, march, spin0


@pytest.fixture(scope="session")
def smooth_bundle(smooth_rotor):
    """Smooth-shell scatter on both solvers at two resolutions each."""
    spin0 = smooth_rotor.spin_from_omega(OMEGA0)
    grids = {}
    for cells in (16, 32):
        config = CosimConfig(
            extent=16.0, cells_per_unit=cells, t_end=12.0, sample_every=4
        )
        grids[cells] = cosimulate(SMOOTH_CHARGE, smooth_rotor, spin0, SMOOTH_PULSE, config)
    marches = {}
    for m in (64, 128):
        config = SolverConfig(horizon=12.0, step=2.0 / m, lam=4.0, tol=1e-13)
        wave = wave_spin_series(SMOOTH_PULSE, SMOOTH_CHARGE, config.times(), **DRIVE_QUAD)
        problem = DelayProblem.build(smooth_rotor, SMOOTH_CHARGE, config, spin0, wave=wave)
        marches[m] = volterra_march(problem)
    return spin0, grids, marches


def test_criterion_1_shell_kernel_closed_form_and_norms():
    rng = np.random.default_rng(101)
    t = rng.uniform(0.0, 2.0, size=1000)
    expected = (1.0 / 3.0) * (1.0 - 0.5 * t**2)
    err = float(np.max(np.abs(kernel_eval(SHELL_CHARGE, t) - expected)))
    assert err <= 1e-12

    norm_1, norm_inf, kappa, _ = kernel_norms(SHELL_CHARGE)
    assert abs(norm_1 - 0.4063171) <= 1e-7
    assert abs(norm_1 - SHELL_NORM_1) <= 1e-10
    assert abs(kappa - 2.0 / 9.0) <= 1e-7
    assert abs(norm_inf - SHELL_NORM_INF) <= 1e-10
    print(f"criterion 1: PASS  kernel err {err:.2e}, "
          f"norm_1 {norm_1:.9f}, kappa {kappa:.9f}")


def test_criterion_2_rotor_inertia_lipschitz_and_roundtrip(shell_rotor):
    iota0 = shell_rotor.iota(0.0)
    assert abs(iota0 - SHELL_IOTA0) <= 1e-10

    bound_rate, bound_axis = shell_rotor.lipschitz_bounds()
    rng = np.random.default_rng(7)
    u = rng.uniform(-6.0, 6.0, size=10_000)
    v = rng.uniform(-6.0, 6.0, size=10_000)
    worst_rate = 0.0
    for ui, vi in zip(u, v):
        if ui == vi:
            continue
        q = abs(shell_rotor.omega_from_spin(ui) - shell_rotor.omega_from_spin(vi))
        worst_rate = max(worst_rate, q / abs(ui - vi))
    assert worst_rate <= bound_rate * (1.0 + 1e-12)

    a = rng.normal(size=(10_000, 3)) * 0.8
    b = rng.normal(size=(10_000, 3)) * 0.8
    worst_axis = 0.0
    for ai, bi in zip(a, b):
        gap = float(np.linalg.norm(ai - bi))
        if gap == 0.0:
            continue
        q = float(np.linalg.norm(
            shell_rotor.omega_from_spin_vec(ai) - shell_rotor.omega_from_spin_vec(bi)
        ))
        worst_axis = max(worst_axis, q / gap)
    assert worst_axis <= bound_axis * (1.0 + 1e-12)

    omega = rng.uniform(-0.999, 0.999, size=2000)
    worst_round = 0.0
    for w in omega:
        s = shell_rotor.spin_from_omega(w)
        w_back = shell_rotor.omega_from_spin(s)
        if w != 0.0:
            worst_round = max(worst_round, abs(w_back - w) / abs(w))
    assert worst_round <= 1e-10
    print(f"criterion 2: PASS  iota0 {iota0:.12f}, rate quotient "
          f"{worst_rate:.6f} <= {bound_rate}, axis quotient {worst_axis:.6f}, "
          f"round-trip {worst_round:.2e}")


def test_criterion_3_contraction_constants_and_empirical_ratio(shell_rotor):
    L10 = lipschitz_constant(SHELL_IOTA0, SHELL_NORM_INF, SHELL_NORM_1, 1.0, 10.0)
    assert abs(L10 - 0.1769) <= 1e-3
    star = lambda_star(SHELL_IOTA0, SHELL_NORM_INF, SHELL_NORM_1, 1.0)
    assert abs(star - 1.9724) <= 1e-3

    spin0 = shell_rotor.spin_from_omega(OMEGA0)
    config = SolverConfig(horizon=8.0, step=2.0 / 64, lam=10.0, tol=1e-13)
    problem = DelayProblem.build(shell_rotor, SHELL_CHARGE, config, spin0)
    t = config.times()
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(20):
        a = spin0 + 0.05 * rng.standard_normal(t.size)
        b = spin0 + 0.05 * rng.standard_normal(t.size)
        num = weighted_norm(problem.apply_map(a) - problem.apply_map(b), t, 10.0)
        den = weighted_norm(a - b, t, 10.0)
        worst = max(worst, num / den)
    assert worst <= L10
    print(f"criterion 3: PASS  L(10) {L10:.9f}, lambda* {star:.9f}, "
          f"empirical ratio {worst:.4f} <= L(10)")


def test_criterion_4_soliton_fixed_point_and_monotone_iteration(shell_rotor):
    spin0 = shell_rotor.spin_from_omega(OMEGA0)
    config = SolverConfig(horizon=8.0, step=2.0 / 64, lam=4.0, tol=1e-13)
    problem = DelayProblem.build(shell_rotor, SHELL_CHARGE, config, spin0)

    march = volterra_march(problem)
    assert np.all(march.spin == spin0)

    one_sweep = problem.apply_map(np.full(config.n_nodes(), spin0))
    assert np.all(one_sweep == spin0)

    _, quiet_report = picard_solve(problem)
    assert quiet_report.converged
    assert quiet_report.deltas[0] == 0.0

    # a driven run shows the nontrivial monotone decrease of the
    # weighted iteration norms
    driven_cfg = SolverConfig(horizon=14.0, step=2.0 / 64, lam=4.0, tol=1e-13)
    wave = wave_spin_series(SCATTER_PULSE, SHELL_CHARGE, driven_cfg.times())
    driven = DelayProblem.build(shell_rotor, SHELL_CHARGE, driven_cfg, spin0, wave=wave)
    _, report = picard_solve(driven)
    assert report.converged
    lam_deltas = report.lam_deltas
    assert all(b <= a for a, b in zip(lam_deltas, lam_deltas[1:]))
    assert all(b < a for a, b in zip(lam_deltas[:5], lam_deltas[1:6]))
    print(f"criterion 4: PASS  zero-pulse constancy exact, driven sweeps "
          f"{report.sweeps} with monotone weighted norms")


def test_criterion_5_scattering_decay_and_spin_return(shell_scatter):
    problem, march, spin0 = shell_scatter
    q = SHELL_NORM_1 / SHELL_IOTA0
    report = measure_decay(
        march, spin0, window=2.0, t_detach=5.0,
        rate_bound=decay_rate_bound(SHELL_IOTA0, SHELL_NORM_1),
    )
    assert report.maxima.size >= 3
    assert report.bounded_by(q, slack=0.05)
    assert report.rate_fit >= 0.445
    return_rel = abs(march.final() - spin0) / abs(spin0)
    assert return_rel <= 1e-6
    print(f"criterion 5: PASS  {report.maxima.size} window maxima, worst "
          f"ratio {np.max(report.ratios):.4f} <= {q * 1.05:.4f}, rate fit "
          f"{report.rate_fit:.3f}, return {return_rel:.2e}")


def test_criterion_6_cross_solver_agreement_and_order(smooth_bundle):
    spin0, grids, marches = smooth_bundle

    def sup_diff(grid_run, march):
        interp = np.interp(grid_run.t, march.t, march.spin)
        return float(np.max(np.abs(grid_run.spin - interp)))

    diff_coarse = sup_diff(grids[16], marches[64])
    diff_fine = sup_diff(grids[32], marches[128])
    order = float(np.log2(diff_coarse / diff_fine))
    assert 1.7 <= order <= 2.3

    # Richardson estimate of the fine-level discretization error from
    # the two grid runs
    coarse_on_fine = np.interp(grids[32].t, grids[16].t, grids[16].spin)
    estimate = float(np.max(np.abs(coarse_on_fine - grids[32].spin))) / 3.0
    tolerance = max(1e-4 * abs(spin0), 2.0 * estimate)
    assert diff_fine <= tolerance
    print(f"criterion 6: PASS  sup diff {diff_fine:.3e} <= {tolerance:.3e}, "
          f"order {order:.2f}")


def test_criterion_7_conservation_drifts_refine(smooth_bundle):
    _, grids, _ = smooth_bundle
    coarse = grids[16].summary()
    fine = grids[32].summary()

    assert fine.energy_drift / fine.energy_scale <= 1e-3
    assert fine.angular_drift / fine.spin_scale <= 1e-3
    assert fine.canonical_drift / fine.spin_scale <= 1e-3

    ratios = {}
    for name, pick in (
        ("energy", lambda s: s.energy_drift),
        ("angular", lambda s: s.angular_drift),
        ("canonical", lambda s: s.canonical_drift),
        ("power", lambda s: s.max_power_residual),
    ):
        ratios[name] = pick(coarse) / pick(fine)
        assert 2.6 <= ratios[name] <= 5.4

    assert fine.max_power_residual <= 2e-4
    assert fine.momentum_drift <= 1e-15
    assert fine.max_force <= 1e-15
    print(f"criterion 7: PASS  rel drifts W {fine.energy_drift / fine.energy_scale:.2e}, "
          f"L {fine.angular_drift / fine.spin_scale:.2e}, "
          f"sigma {fine.canonical_drift / fine.spin_scale:.2e}; refinement ratios "
          + ", ".join(f"{k} {v:.2f}" for k, v in ratios.items()))


def test_criterion_8_threshold_coupling(shell_rotor):
    from scipy.optimize import brentq

    iota0 = shell_rotor.iota(0.0)
    norm_1_unit = kernel_norms(SHELL_CHARGE)[0]

    def margin(coupling):
        return iota0 - coupling * norm_1_unit

    assert margin(1.0) > 0.0 > margin(2.2)
    threshold = float(brentq(margin, 1.0, 2.2, xtol=1e-12))
    assert abs(threshold - 1.6408) <= 1e-3
    print(f"criterion 8: PASS  margin sign change at coupling {threshold:.6f}")
