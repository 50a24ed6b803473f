"""Fixed-point and marching solvers for the retarded spin equation.

The axial bare spin obeys a delay integral equation: the canonical spin
(bare spin plus field spin over the charge cloud) is exactly conserved,
and the sourced part of the field spin is the memory kernel convolved
with the spin-rate history,

    s_b(t) + int_0^{2R} K(tau) W(s_b(t - tau)) d tau = C - s_wave(t),

where W inverts the rotor spin map, s_wave is the free incoming pulse
integrated over the cloud, and the constant C is fixed by the initial
stationary state. Two independent solvers are provided: damped-free
Picard iteration of the whole trajectory (a contraction for couplings
below threshold) and a causal node-by-node Volterra march. The discrete
convolution uses one trapezoid rule shared by every code path, so a
pulse-free run reproduces the constant solution bitwise rather than to
truncation accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .fields import OmegaHistory
from .kernel import kernel_on_grid
from .profiles import RadialProfile
from .rotor import RotorModel

__all__ = [
    "SolverConfig",
    "SpinTrajectory",
    "PicardReport",
    "DelayProblem",
    "discrete_kernel_weights",
    "weighted_norm",
    "lipschitz_constant",
    "lambda_star",
    "contraction_margin",
    "decay_rate_bound",
    "picard_solve",
    "volterra_march",
    "asymptotic_spin",
    "late_time_residual",
    "DecayReport",
    "measure_decay",
]


@dataclass(frozen=True)
class SolverConfig:
    """Time grid and iteration controls.

    The step must divide the kernel support: step = 2 R / m for integer m.
    `lam` is the exponential weight of the trajectory norm used both for
    the contraction estimate and the Picard stopping test.
    """

    horizon: float
    step: float
    lam: float = 4.0
    tol: float = 1e-12
    max_sweeps: int = 400

    def __post_init__(self):
        if self.horizon <= 0 or self.step <= 0:
            raise ValueError("horizon and step must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    def n_nodes(self) -> int:
        return int(round(self.horizon / self.step)) + 1

    def times(self) -> np.ndarray:
        return self.step * np.arange(self.n_nodes())


@dataclass
class SpinTrajectory:
    """Axial bare spin history on a uniform time grid."""

    t: np.ndarray
    spin: np.ndarray
    omega: np.ndarray
    spin0: float
    omega0: float

    def history(self) -> OmegaHistory:
        return OmegaHistory(t=self.t, omega=self.omega, omega0=self.omega0)

    def final(self) -> float:
        return float(self.spin[-1])


@dataclass
class PicardReport:
    sweeps: int
    deltas: list[float]
    converged: bool
    lam_deltas: list[float] = field(default_factory=list)

    def contraction_ratios(self) -> list[float]:
        out = []
        for a, b in zip(self.deltas, self.deltas[1:]):
            if a > 0:
                out.append(b / a)
        return out


def discrete_kernel_weights(profile: RadialProfile, step: float) -> np.ndarray:
    """Trapezoid quadrature weights h * w_j * K(j h) for lags 0 .. m.

    The last sample is the one-sided limit at the memory edge, so the rule
    integrates the jump of a surface kernel consistently.
    """
    m = int(round(2.0 * profile.radius / step))
    k = kernel_on_grid(profile, step, m)
    w = np.full(m + 1, step)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w * k


def weighted_norm(values: np.ndarray, t: np.ndarray, lam: float) -> float:
    """Exponentially weighted sup norm sup_i |g_i| exp(-lam t_i)."""
    return float(np.max(np.abs(values) * np.exp(-lam * t)))


def lipschitz_constant(
    iota0: float, norm_inf: float, norm_1: float, radius: float, lam: float
) -> float:
    """Contraction bound of the delay map in the lam-weighted norm:

        L(lam) = [ norm_inf (1 + 1/(lam R)) + 2 norm_1 / R ] / (lam iota0).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    return (norm_inf * (1.0 + 1.0 / (lam * radius)) + 2.0 * norm_1 / radius) / (
        lam * iota0
    )


def lambda_star(iota0: float, norm_inf: float, norm_1: float, radius: float) -> float:
    """Smallest weight for which the bound L(lam) drops below one."""
    lo, hi = 1e-6, 1.0
    while lipschitz_constant(iota0, norm_inf, norm_1, radius, hi) > 1.0:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("no contraction weight found")
    return float(
        brentq(
            lambda lam: lipschitz_constant(iota0, norm_inf, norm_1, radius, lam) - 1.0,
            lo,
            hi,
            xtol=1e-12,
            rtol=1e-14,
        )
    )


def contraction_margin(iota0: float, norm_1: float) -> float:
    """iota(0) - ||K||_1: positive means the memory map is a sup-norm
    contraction and free decay is geometric per memory window."""
    return iota0 - norm_1


def decay_rate_bound(iota0: float, norm_1: float) -> float:
    """Guaranteed free-decay exponent per memory window, ln(iota0/||K||_1)."""
    if iota0 <= norm_1:
        return 0.0
    return float(np.log(iota0 / norm_1))


@dataclass
class DelayProblem:
    """Discretised delay equation with shared convolution arithmetic."""

    rotor: RotorModel
    config: SolverConfig
    weights: np.ndarray = field(repr=False)
    wave: np.ndarray = field(repr=False)
    spin0: float = 0.0

    omega0: float = field(init=False)
    base_conv: float = field(init=False)
    _wrev: np.ndarray = field(init=False, repr=False)

    @classmethod
    def build(
        cls,
        rotor: RotorModel,
        profile: RadialProfile,
        config: SolverConfig,
        spin0: float,
        wave: np.ndarray | None = None,
    ) -> "DelayProblem":
        weights = discrete_kernel_weights(profile, config.step)
        n = config.n_nodes()
        if wave is None:
            wave = np.zeros(n)
        wave = np.asarray(wave, dtype=float)
        if wave.shape != (n,):
            raise ValueError("wave drive must be sampled on the solver grid")
        return cls(rotor=rotor, config=config, weights=weights, wave=wave, spin0=spin0)

    def __post_init__(self):
        self.omega0 = self.rotor.omega_from_spin(self.spin0)
        self._wrev = self.weights[::-1].copy()
        m = self.weights.size - 1
        self.base_conv = float(np.dot(self._wrev, np.full(m + 1, self.omega0)))

    @property
    def lag_count(self) -> int:
        return self.weights.size - 1

    @property
    def canonical_total(self) -> float:
        """Conserved canonical spin: bare spin plus sourced field spin
        plus the incoming wave spin, all at the initial time."""
        return self.spin0 + self.base_conv + float(self.wave[0])

    def extended_rates(self, spin: np.ndarray) -> np.ndarray:
        """Rate history with the constant pre-history prepended."""
        m = self.lag_count
        out = np.empty(m + spin.size)
        out[:m] = self.omega0
        for i, s in enumerate(spin):
            out[m + i] = self.rotor.omega_from_spin(float(s))
        return out

    def apply_map(self, spin: np.ndarray) -> np.ndarray:
        """One Picard sweep of the whole trajectory.

        Written in difference form against the initial stationary window,
        so the constant trajectory maps to itself without rounding.
        """
        m = self.lag_count
        rates = self.extended_rates(spin)
        wave0 = float(self.wave[0])
        out = np.empty_like(spin)
        for i in range(spin.size):
            conv = float(np.dot(self._wrev, rates[i : i + m + 1]))
            out[i] = self.spin0 + (wave0 - float(self.wave[i])) + (self.base_conv - conv)
        return out

    def node_residual(self, spin: np.ndarray, i: int, rates: np.ndarray) -> float:
        """Defect of node i given rates extended through node i."""
        m = self.lag_count
        conv = float(np.dot(self._wrev, rates[i : i + m + 1]))
        return (
            (float(spin[i]) - self.spin0)
            + (float(self.wave[i]) - float(self.wave[0]))
            + (conv - self.base_conv)
        )


def picard_solve(problem: DelayProblem) -> tuple[SpinTrajectory, PicardReport]:
    """Iterate the delay map from the constant initial guess.

    Converges geometrically whenever the coupling sits below the
    contraction threshold; the report carries the per-sweep updates so
    callers can verify the observed ratio against lipschitz_constant.
    """
    cfg = problem.config
    t = cfg.times()
    spin = np.full(t.size, problem.spin0)
    deltas: list[float] = []
    lam_deltas: list[float] = []
    converged = False
    for _ in range(cfg.max_sweeps):
        new = problem.apply_map(spin)
        delta = float(np.max(np.abs(new - spin)))
        deltas.append(delta)
        lam_deltas.append(weighted_norm(new - spin, t, cfg.lam))
        spin = new
        if delta <= cfg.tol:
            converged = True
            break
    omega = np.array([problem.rotor.omega_from_spin(float(s)) for s in spin])
    traj = SpinTrajectory(
        t=t, spin=spin, omega=omega, spin0=problem.spin0, omega0=problem.omega0
    )
    return traj, PicardReport(
        sweeps=len(deltas), deltas=deltas, converged=converged, lam_deltas=lam_deltas
    )


def _solve_node(problem: DelayProblem, rhs_known: float, guess: float) -> float:
    """Solve s + w0 W(s) = rhs_known for one node (monotone in s)."""
    w0 = float(problem.weights[0])
    rotor = problem.rotor

    def defect(s: float) -> float:
        return s + w0 * rotor.omega_from_spin(s) - rhs_known

    f0 = defect(guess)
    if f0 == 0.0:
        return guess
    s = guess
    f = f0
    # bracket by stepping against the sign of the defect; the map is
    # strictly increasing so a sign change brackets the unique root
    step = max(abs(f0), 1e-9 * (1.0 + abs(guess)))
    lo, hi = None, None
    if f > 0:
        hi = s
        probe = s - step
        for _ in range(200):
            if defect(probe) <= 0:
                lo = probe
                break
            probe -= step
            step *= 2.0
    else:
        lo = s
        probe = s + step
        for _ in range(200):
            if defect(probe) >= 0:
                hi = probe
                break
            probe += step
            step *= 2.0
    if lo is None or hi is None:
        raise RuntimeError("node solve failed to bracket")
    for _ in range(100):
        deriv = 1.0 + w0 * problem.rotor.omega_derivative(s)
        s_new = s - f / deriv
        if not lo <= s_new <= hi:
            s_new = 0.5 * (lo + hi)
        f_new = defect(s_new)
        if f_new == 0.0 or abs(s_new - s) <= 1e-15 * (1.0 + abs(s_new)):
            return s_new
        if f_new > 0:
            hi = s_new
        else:
            lo = s_new
        s, f = s_new, f_new
    return s


def volterra_march(problem: DelayProblem) -> SpinTrajectory:
    """Causal node-by-node solution of the discrete delay equation.

    Each node solves a scalar monotone equation; the previous value is
    tested first and kept when its defect is exactly zero, so a pulse-free
    run stays constant to the last bit.
    """
    cfg = problem.config
    t = cfg.times()
    n = t.size
    m = problem.lag_count
    spin = np.empty(n)
    rates = np.empty(m + n)
    rates[:m] = problem.omega0

    wrev_known = problem._wrev[:-1]
    wave0 = float(problem.wave[0])
    guess_spin = problem.spin0
    guess_rate = problem.omega0
    for i in range(n):
        # try the running value first: its defect is computed in the same
        # difference form as the stationary window, so a pulse-free run
        # cancels exactly and the march stays constant bit for bit
        rates[m + i] = guess_rate
        conv_full = float(np.dot(problem._wrev, rates[i : i + m + 1]))
        defect = (
            (guess_spin - problem.spin0)
            + (float(problem.wave[i]) - wave0)
            + (conv_full - problem.base_conv)
        )
        if defect == 0.0:
            s = guess_spin
            rate = guess_rate
        else:
            conv_known = float(np.dot(wrev_known, rates[i : i + m]))
            rhs = (
                problem.spin0
                + (wave0 - float(problem.wave[i]))
                + (problem.base_conv - conv_known)
            )
            s = _solve_node(problem, rhs, guess_spin)
            rate = problem.rotor.omega_from_spin(s)
        spin[i] = s
        rates[m + i] = rate
        guess_spin = s
        guess_rate = rate
    return SpinTrajectory(
        t=t,
        spin=spin,
        omega=rates[m:].copy(),
        spin0=problem.spin0,
        omega0=problem.omega0,
    )


def _march_backward(
    problem: DelayProblem, trajectory: SpinTrajectory, n_back: int
) -> tuple[np.ndarray, np.ndarray]:
    """Unwind n_back nodes of history from the tail of a solved trajectory.

    The node equation at time t contains the rate at t - 2R through the
    memory-edge weight; when that weight does not vanish (a surface
    charge) the equation can be solved for the oldest rate instead of the
    newest spin, reconstructing the past from the final memory window
    alone. Exponentially unstable over long horizons (it inverts a
    contraction), so only short unwinds are meaningful. Test helper, not
    public API. Returns (node indices, reconstructed rates).
    """
    m = problem.lag_count
    edge = float(problem.weights[-1])
    if edge == 0.0:
        raise ValueError("kernel vanishes at the memory edge; nothing to unwind")
    n = trajectory.t.size
    if n_back > n - 1 - m:
        raise ValueError("not enough trajectory to unwind that far")
    known_from = n - 1 - m
    spin_rec = np.full(n, np.nan)
    rate_rec = np.full(n, np.nan)
    spin_rec[known_from:] = trajectory.spin[known_from:]
    rate_rec[known_from:] = trajectory.omega[known_from:]
    body = problem.weights[:-1]
    nodes = []
    for i in range(n - 2, n - 2 - n_back, -1):
        lags = rate_rec[i - m + 1 : i + 1][::-1]
        partial = float(np.dot(body, lags))
        rate = (
            problem.canonical_total - float(problem.wave[i]) - spin_rec[i] - partial
        ) / edge
        target = i - m
        rate_rec[target] = rate
        spin_rec[target] = problem.rotor.spin_from_omega(rate)
        nodes.append(target)
    nodes = np.array(nodes[::-1])
    return nodes, rate_rec[nodes]


def asymptotic_spin(rotor: RotorModel, kappa: float, canonical: float) -> float:
    """Root of u + kappa W(u) = canonical (the late-time constant state)."""

    def f(u: float) -> float:
        return u + kappa * rotor.omega_from_spin(u) - canonical

    scale = max(1.0, abs(canonical))
    lo, hi = -scale, scale
    for _ in range(200):
        if f(lo) <= 0 <= f(hi):
            break
        lo *= 2.0
        hi *= 2.0
    return float(brentq(f, lo, hi, xtol=1e-15, rtol=1e-15))


def late_time_residual(problem: DelayProblem, trajectory: SpinTrajectory) -> float:
    """Largest node defect over the last memory window of the trajectory."""
    m = problem.lag_count
    rates = np.concatenate([np.full(m, problem.omega0), trajectory.omega])
    worst = 0.0
    for i in range(max(0, trajectory.t.size - m), trajectory.t.size):
        worst = max(worst, abs(problem.node_residual(trajectory.spin, i, rates)))
    return worst


@dataclass
class DecayReport:
    """Per-window maxima of the deviation from the asymptotic state."""

    window: float
    maxima: np.ndarray
    ratios: np.ndarray
    rate_fit: float
    rate_bound: float
    floor: float

    def bounded_by(self, q: float, slack: float = 0.05) -> bool:
        return bool(np.all(self.ratios <= q * (1.0 + slack)))


def measure_decay(
    trajectory: SpinTrajectory,
    s_inf: float,
    window: float,
    t_detach: float,
    rate_bound: float,
    floor: float | None = None,
) -> DecayReport:
    """Window maxima of |s - s_inf| after t_detach and their decay rate.

    Windows whose maxima sink below the noise floor are dropped before
    fitting; the fit is a least-squares line through log maxima.
    """
    dev = np.abs(trajectory.spin - s_inf)
    if floor is None:
        floor = 1e-13 * max(1.0, float(np.max(dev)))
    maxima = []
    start = t_detach
    while start + window <= trajectory.t[-1] + 1e-12:
        mask = (trajectory.t >= start) & (trajectory.t < start + window)
        if not np.any(mask):
            break
        m = float(np.max(dev[mask]))
        if m < floor:
            break
        maxima.append(m)
        start += window
    maxima = np.asarray(maxima)
    ratios = maxima[1:] / maxima[:-1] if maxima.size > 1 else np.empty(0)
    if maxima.size > 1:
        slope = np.polyfit(np.arange(maxima.size), np.log(maxima), 1)[0]
        rate_fit = -float(slope)
    else:
        rate_fit = np.nan
    return DecayReport(
        window=window,
        maxima=maxima,
        ratios=ratios,
        rate_fit=rate_fit,
        rate_bound=rate_bound,
        floor=floor,
    )
