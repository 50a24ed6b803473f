"""Command line entry point: scenario pipelines with file artifacts.

Every subcommand loads a scenario (defaults, optional preset, optional
config file), runs one pipeline, and writes CSV tables, JSON reports,
and a PNG figure into the output directory. Exit status is 0 on
success, 1 when a convergence or audit check fails, 2 on configuration
errors; failures also emit a one-line JSON object on stderr so scripted
callers never have to parse prose.

The only environment variable honored is GYROLED_THREADS, forwarded to
the usual BLAS/OpenMP thread-count variables.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .audit import cosimulate
from .config import PRESETS, ConfigError, ScenarioConfig, load_config
from .fields import wave_spin_series
from .grid import (
    Functionals,
    GridSpec,
    cfl_time_step,
    pulse_state,
    verlet_step,
)
from .kernel import kernel_eval, kernel_norms
from .report import figure, save_figure, write_csv, write_json
from .rotor import RotorModel
from .solver import (
    DelayProblem,
    asymptotic_spin,
    contraction_margin,
    decay_rate_bound,
    lambda_star,
    lipschitz_constant,
    measure_decay,
    picard_solve,
    volterra_march,
    weighted_norm,
)

__all__ = ["main", "build_parser"]


def _apply_thread_env() -> None:
    threads = os.environ.get("GYROLED_THREADS")
    if not threads:
        return
    if not threads.isdigit() or int(threads) < 1:
        raise ConfigError("GYROLED_THREADS must be a positive integer")
    for name in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[name] = threads


def _emit_failure(kind: str, detail: dict) -> None:
    sys.stderr.write(json.dumps({"failure": {"kind": kind, **detail}}) + "\n")


def _spin0(cfg: ScenarioConfig, rotor: RotorModel) -> float:
    return rotor.spin_from_omega(cfg["rotor.omega0"])


def _wave_drive(cfg: ScenarioConfig, charge, times: np.ndarray) -> np.ndarray:
    pulse = cfg.pulse()
    if pulse.is_trivial():
        return np.zeros(times.size)
    return wave_spin_series(pulse, charge, times, **cfg.drive_quadrature())


# -- pipelines --------------------------------------------------------


def run_kernel(cfg: ScenarioConfig, out: Path) -> int:
    charge = cfg.charge_profile()
    radius = charge.radius
    t = np.linspace(0.0, 2.0 * radius, 513)
    k = kernel_eval(charge, t)
    norm_1, norm_inf, kappa, _ = kernel_norms(charge)
    write_csv(out / "kernel.csv", ["t", "K"], [t, k])
    norms = {"norm_1": norm_1, "norm_inf": norm_inf, "kappa": kappa}
    write_json(out / "kernel_norms.json", norms)
    print(json.dumps(norms, sort_keys=True))

    fig, ax = figure()
    ax.plot(t, k, lw=1.5)
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel("K(t)")
    ax.set_title(f"memory kernel, {charge.kind} charge")
    save_figure(fig, out / "kernel.png")
    return 0


def run_rotor(cfg: ScenarioConfig, out: Path) -> int:
    rotor = cfg.rotor()
    radius = cfg["units.R"]
    omega = np.linspace(0.0, 6.0 / radius, 301)
    iota = np.array([rotor.iota(abs(w)) for w in omega])
    mass = rotor.mass_series(np.abs(omega))
    spin = np.array([rotor.spin_from_omega(w) for w in omega])
    write_csv(out / "rotor.csv", ["omega", "iota", "mass", "s_b"],
              [omega, iota, mass, spin])

    fig, axes = figure(1, 3, width=10.5, height=3.4)
    for ax, series, label in zip(axes, (iota, mass, spin),
                                 ("iota", "mass", "s_b")):
        ax.plot(omega, series, lw=1.4)
        ax.set_xlabel("omega")
        ax.set_ylabel(label)
    fig.suptitle("rotor curves")
    save_figure(fig, out / "rotor.png")
    return 0


def run_field(cfg: ScenarioConfig, out: Path) -> int:
    charge = cfg.charge_profile()
    spec = GridSpec.centered(cfg["grid.extent"], cfg["grid.cells_per_unit"])
    pulse = cfg.pulse()
    if not pulse.is_trivial() and pulse.r_max >= cfg["grid.extent"]:
        raise ConfigError("pulse support does not fit inside the grid domain")
    fun = Functionals.build(charge, spec)
    state = pulse_state(pulse, spec)
    dt = cfl_time_step(spec, cfg["grid.cfl"])
    n_steps = max(1, int(np.ceil(cfg["grid.t_end"] / dt)))
    dt = cfg["grid.t_end"] / n_steps
    stride = cfg["grid.sample_every"]

    rows = []

    def sample():
        rows.append((
            state.time,
            fun.energy(state.psi, state.psi_dot),
            fun.spin(state.psi),
            fun.torque(state.psi_dot),
            fun.angular_momentum(state.psi),
            abs(fun.linear_momentum(state.psi, state.psi_dot)),
        ))

    sample()
    for step in range(1, n_steps + 1):
        state = verlet_step(spec, state, dt)
        if step % stride == 0 or step == n_steps:
            sample()

    series = [np.array(col) for col in zip(*rows)]
    write_csv(out / "field_series.csv",
              ["t", "energy", "s_f", "torque", "L_f", "p_norm"], series)

    zeta, z = spec.axes()
    zz = np.repeat(zeta, z.size)
    zc = np.tile(z, zeta.size)
    write_csv(out / "field_snapshot.csv", ["zeta", "z", "psi", "psi_dot"],
              [zz, zc, state.psi.ravel(), state.psi_dot.ravel()])

    fig, axes = figure(1, 2, width=10.0, height=4.0)
    mesh = axes[0].pcolormesh(z, zeta, state.psi, shading="nearest", cmap="RdBu_r")
    fig.colorbar(mesh, ax=axes[0], label="psi")
    axes[0].set_xlabel("z")
    axes[0].set_ylabel("zeta")
    axes[0].set_title(f"field at t = {state.time:.3f}")
    axes[1].plot(series[0], series[1], lw=1.4)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("wave energy")
    save_figure(fig, out / "field.png")
    return 0


def run_scatter(cfg: ScenarioConfig, out: Path) -> int:
    charge = cfg.charge_profile()
    rotor = cfg.rotor()
    spin0 = _spin0(cfg, rotor)
    solver_cfg = cfg.solver_config()
    times = solver_cfg.times()
    wave = _wave_drive(cfg, charge, times)
    problem = DelayProblem.build(rotor, charge, solver_cfg, spin0, wave=wave)
    trajectory, iteration = picard_solve(problem)

    norm_1, norm_inf, _, _ = kernel_norms(charge)
    iota0 = rotor.iota(0.0)
    margin = contraction_margin(iota0, norm_1)
    rate_bound = decay_rate_bound(iota0, norm_1)
    # the asymptotic state of the discrete trajectory solves the discrete
    # balance, so it gets the quadrature kappa, not the exact integral
    kappa_h = float(np.sum(problem.weights))
    s_inf = asymptotic_spin(rotor, kappa_h, problem.canonical_total)
    decay = measure_decay(
        trajectory, s_inf,
        window=cfg["decay.window"],
        t_detach=cfg["decay.detach"],
        rate_bound=rate_bound,
    )

    write_csv(out / "trajectory.csv", ["t", "s_b", "omega"],
              [trajectory.t, trajectory.spin, trajectory.omega])
    write_json(out / "iteration.json", {
        "sweeps": iteration.sweeps,
        "converged": iteration.converged,
        "tolerance": solver_cfg.tol,
        "lambda": solver_cfg.lam,
        "sup_deltas": iteration.deltas,
        "lambda_deltas": iteration.lam_deltas,
        "contraction_ratios": iteration.contraction_ratios(),
        "lipschitz_bound": lipschitz_constant(
            iota0, norm_inf, norm_1, charge.radius, solver_cfg.lam
        ),
        "lambda_star": lambda_star(iota0, norm_inf, norm_1, charge.radius),
    })
    write_json(out / "decay.json", {
        "window": decay.window,
        "detach": cfg["decay.detach"],
        "maxima": decay.maxima,
        "ratios": decay.ratios,
        "rate_fit": decay.rate_fit,
        "rate_bound": decay.rate_bound,
        "smallness_q": norm_1 / iota0,
        "smallness_margin": margin,
        "asymptotic_spin": s_inf,
        "spin_final_minus_initial": trajectory.final() - spin0,
    })

    fig, axes = figure(2, 1, width=7.0, height=6.4)
    axes[0].plot(trajectory.t, trajectory.spin, lw=1.2)
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("bare spin")
    dev = np.abs(trajectory.spin - s_inf)
    positive = dev > 0
    axes[1].semilogy(trajectory.t[positive], dev[positive], lw=1.0)
    if decay.maxima.size:
        marks = cfg["decay.detach"] + decay.window * (0.5 + np.arange(decay.maxima.size))
        axes[1].semilogy(marks, decay.maxima, "o", ms=4)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("|s_b - s_inf|")
    save_figure(fig, out / "scatter.png")

    if not iteration.converged:
        _emit_failure("non-convergence", {
            "sweeps": iteration.sweeps,
            "last_delta": iteration.deltas[-1] if iteration.deltas else None,
        })
        return 1
    return 0


def _run_cosimulation(cfg: ScenarioConfig):
    charge = cfg.charge_profile()
    rotor = cfg.rotor()
    spin0 = _spin0(cfg, rotor)
    result = cosimulate(charge, rotor, spin0, cfg.pulse(), cfg.cosim_config())
    return result, spin0


def _write_cosim_tables(result, out: Path) -> None:
    write_csv(out / "trajectory.csv", ["t", "s_b", "omega"],
              [result.t, result.spin, result.omega])
    write_csv(
        out / "audit.csv",
        ["t", "W", "L_axis", "sigma", "p_norm", "power_residual"],
        [result.t, result.energy_total, result.angular_total,
         result.canonical_spin, np.abs(result.momentum_axial),
         result.power_residual],
    )


def _audit_payload(result, tol_rel: float) -> dict:
    summary = result.summary()
    energy_rel = summary.energy_drift / summary.energy_scale
    spin_scale = max(summary.spin_scale, 1e-300)
    angular_rel = summary.angular_drift / spin_scale
    canonical_rel = summary.canonical_drift / spin_scale
    return {
        "tolerance_rel": tol_rel,
        "energy": {
            "drift": summary.energy_drift,
            "scale": summary.energy_scale,
            "rel": energy_rel,
            "passed": energy_rel <= tol_rel,
        },
        "angular_momentum": {
            "drift": summary.angular_drift,
            "scale": summary.spin_scale,
            "rel": angular_rel,
            "passed": angular_rel <= tol_rel,
        },
        "canonical_spin": {
            "drift": summary.canonical_drift,
            "scale": summary.spin_scale,
            "rel": canonical_rel,
            "passed": canonical_rel <= tol_rel,
        },
        "momentum": {"max": summary.momentum_drift},
        "axial_force": {"max": summary.max_force},
        "power_residual": {"max": summary.max_power_residual},
        "passed": bool(
            energy_rel <= tol_rel
            and angular_rel <= tol_rel
            and canonical_rel <= tol_rel
        ),
    }


def run_cosim(cfg: ScenarioConfig, out: Path) -> int:
    result, _ = _run_cosimulation(cfg)
    _write_cosim_tables(result, out)
    write_json(out / "cosim.json", _audit_payload(result, cfg["audit.tol_rel"]))

    fig, axes = figure(2, 1, width=7.0, height=6.4)
    axes[0].plot(result.t, result.spin, lw=1.2)
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("bare spin")
    for series, label in (
        (result.energy_total, "W"),
        (result.angular_total, "L_axis"),
        (result.canonical_spin, "sigma"),
    ):
        axes[1].plot(result.t, series - series[0], lw=1.0, label=label)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("drift")
    axes[1].legend(loc="best", fontsize=8)
    save_figure(fig, out / "cosim.png")
    return 0


def run_audit(cfg: ScenarioConfig, out: Path) -> int:
    result, _ = _run_cosimulation(cfg)
    payload = _audit_payload(result, cfg["audit.tol_rel"])
    write_json(out / "audit.json", payload)
    _write_cosim_tables(result, out)
    for name, series in (
        ("audit_energy", result.energy_total),
        ("audit_angular", result.angular_total),
        ("audit_sigma", result.canonical_spin),
        ("audit_momentum", np.abs(result.momentum_axial)),
        ("audit_power", result.power_residual),
    ):
        write_csv(out / f"{name}.csv", ["t", "value"], [result.t, series])

    fig, ax = figure()
    for series, label in (
        (result.energy_total, "W"),
        (result.angular_total, "L_axis"),
        (result.canonical_spin, "sigma"),
    ):
        ax.plot(result.t, series - series[0], lw=1.0, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("drift from initial value")
    ax.legend(loc="best", fontsize=8)
    save_figure(fig, out / "audit.png")

    if not payload["passed"]:
        _emit_failure("audit", {
            "energy_rel": payload["energy"]["rel"],
            "angular_rel": payload["angular_momentum"]["rel"],
            "canonical_rel": payload["canonical_spin"]["rel"],
            "tolerance_rel": payload["tolerance_rel"],
        })
        return 1
    return 0


def run_compare(cfg: ScenarioConfig, out: Path) -> int:
    charge = cfg.charge_profile()
    rotor = cfg.rotor()
    spin0 = _spin0(cfg, rotor)

    solver_cfg = cfg.solver_config()
    wave = _wave_drive(cfg, charge, solver_cfg.times())
    problem = DelayProblem.build(rotor, charge, solver_cfg, spin0, wave=wave)
    kernel_traj = volterra_march(problem)

    grid_result = cosimulate(charge, rotor, spin0, cfg.pulse(), cfg.cosim_config())

    mask = grid_result.t <= solver_cfg.horizon + 1e-12
    t_common = grid_result.t[mask]
    kernel_interp = np.interp(t_common, kernel_traj.t, kernel_traj.spin)
    diff = grid_result.spin[mask] - kernel_interp
    sup_diff = float(np.max(np.abs(diff)))
    lam_diff = weighted_norm(diff, t_common, solver_cfg.lam)
    tolerance = cfg["compare.tol_rel"] * abs(spin0)
    passed = sup_diff <= tolerance

    write_csv(out / "compare_kernel.csv", ["t", "s_b", "omega"],
              [kernel_traj.t, kernel_traj.spin, kernel_traj.omega])
    write_csv(out / "compare_grid.csv", ["t", "s_b", "omega"],
              [grid_result.t, grid_result.spin, grid_result.omega])
    write_json(out / "compare.json", {
        "sup_diff": sup_diff,
        "lambda_diff": lam_diff,
        "lambda": solver_cfg.lam,
        "tolerance": tolerance,
        "tolerance_rel": cfg["compare.tol_rel"],
        "spin0": spin0,
        "passed": passed,
    })

    fig, axes = figure(2, 1, width=7.0, height=6.4)
    axes[0].plot(kernel_traj.t, kernel_traj.spin, lw=1.2, label="delay kernel")
    axes[0].plot(grid_result.t, grid_result.spin, lw=1.2, ls="--", label="field grid")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("bare spin")
    axes[0].legend(loc="best", fontsize=8)
    axes[1].plot(t_common, diff, lw=1.0)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("grid - kernel")
    save_figure(fig, out / "compare.png")

    if not passed:
        _emit_failure("solver-mismatch", {
            "sup_diff": sup_diff, "tolerance": tolerance,
        })
        return 1
    return 0


def run_sweep(cfg: ScenarioConfig, out: Path) -> int:
    rotor = cfg.rotor()
    iota0 = rotor.iota(0.0)
    m_b = cfg["units.m_b"]
    radius = cfg["units.R"]
    base = ScenarioConfig.from_overrides(cfg.values, {"units.e": 1.0})
    norm_1_unit = kernel_norms(base.charge_profile())[0]

    couplings = np.linspace(
        cfg["sweep.coupling_min"], cfg["sweep.coupling_max"], cfg["sweep.points"]
    )
    norm_1 = couplings * m_b * radius * norm_1_unit
    margins = iota0 - norm_1

    payload: dict = {
        "iota0": iota0,
        "norm_1_per_coupling": float(m_b * radius * norm_1_unit),
    }
    if margins[0] > 0 > margins[-1]:
        from scipy.optimize import brentq

        threshold = float(brentq(
            lambda c: iota0 - c * m_b * radius * norm_1_unit,
            couplings[0], couplings[-1], xtol=1e-12,
        ))
        payload["threshold_coupling"] = threshold
    else:
        payload["threshold_coupling"] = None
        payload["note"] = "margin does not change sign on the sweep range"

    write_csv(
        out / "sweep.csv",
        ["coupling", "norm_1", "iota0", "margin"],
        [couplings, norm_1, np.full(couplings.size, iota0), margins],
    )
    write_json(out / "sweep.json", payload)

    fig, ax = figure()
    ax.plot(couplings, margins, lw=1.4)
    ax.axhline(0.0, color="gray", lw=0.8)
    if payload["threshold_coupling"] is not None:
        ax.axvline(payload["threshold_coupling"], color="tab:red", lw=0.8, ls="--")
    ax.set_xlabel("coupling e^2 / (m_b R)")
    ax.set_ylabel("contraction margin")
    save_figure(fig, out / "sweep.png")
    return 0


# -- wiring -----------------------------------------------------------

_PIPELINES = {
    "kernel": run_kernel,
    "rotor": run_rotor,
    "field": run_field,
    "scatter": run_scatter,
    "cosim": run_cosim,
    "audit": run_audit,
    "compare": run_compare,
    "sweep": run_sweep,
}

_DESCRIPTIONS = {
    "kernel": "tabulate the retarded memory kernel and its norms",
    "rotor": "tabulate rotor inertia, mass, and spin curves",
    "field": "evolve a free wave pulse on the meridional grid",
    "scatter": "run the delay-kernel scattering scenario with decay report",
    "cosim": "run the coupled spin-field co-simulation",
    "audit": "run the co-simulation and check conservation drifts",
    "compare": "cross-check the delay-kernel and grid trajectories",
    "sweep": "sweep the contraction margin over coupling strength",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gyroled",
        description="spin-field scattering simulations with file reports",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, pipeline in _PIPELINES.items():
        p = sub.add_parser(name, help=_DESCRIPTIONS[name])
        p.add_argument("--config", type=Path, default=None,
                       help="scenario file with key = value lines")
        p.add_argument("--preset", default=None, choices=sorted(PRESETS),
                       help="named scenario preset applied before the file")
        p.add_argument("--out", type=Path, default=Path("gyroled-out"),
                       help="output directory for CSV/JSON/PNG artifacts")
        p.add_argument("--print-config", action="store_true",
                       help="print the effective configuration and exit")
        p.set_defaults(pipeline=pipeline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_thread_env()
        cfg = load_config(path=args.config, preset=args.preset)
        if args.print_config:
            sys.stdout.write(cfg.render())
            return 0
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        return args.pipeline(cfg, out)
    except (ConfigError, ValueError, OSError) as exc:
        sys.stderr.write(json.dumps({
            "error": {"type": type(exc).__name__, "message": str(exc)},
        }) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
