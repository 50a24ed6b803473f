"""Retarded self-interaction kernel of a compact rotating charge.

The spin memory force is a convolution against a kernel K(t) supported on
[0, 2R]: the shortest and longest light travel times between two points of
the charge distribution. K is the double radial integral

    K(t) = (8 pi^2 / 3) * int int  (r^2 + s^2 - t^2) r s f(r) f(s) dr ds

restricted to the causal diamond |r - s| <= t <= r + s. The step-function
constraints are resolved into explicit integration limits before any
quadrature runs: the inner variable ranges over
[max(r_lo, |t - r|), min(r_hi, r + t)], and the outer integral is split at
the radii where those limits change formula.

For the delta shell the double integral collapses onto r = s = R and K is
the downward parabola (e^2/3)(1 - t^2/(2R^2)) on [0, 2R], with a jump to
zero at t = 2R. Bounded densities give K(0) = K(2R) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .profiles import RadialProfile, _leggauss, adaptive_radial_integral

__all__ = [
    "KernelTable",
    "kernel_shell_closed_form",
    "kernel_eval",
    "kernel_norms",
    "build_kernel_table",
    "kernel_on_grid",
]

_PREFACTOR = 8.0 * np.pi**2 / 3.0


def kernel_shell_closed_form(e: float, radius: float, t) -> np.ndarray:
    """Shell kernel (e^2/3)(1 - t^2/(2 R^2)) on 0 <= t <= 2R, else zero.

    ``e`` is the charge magnitude; the kernel only sees e^2. The value at
    t = 2R is the one-sided limit -e^2/3 (the kernel jumps to zero beyond).
    """
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= 2.0 * radius)
    vals = (e**2 / 3.0) * (1.0 - t**2 / (2.0 * radius**2))
    return np.where(inside, vals, 0.0)


def _shell_collapsed(profile: RadialProfile, t: np.ndarray) -> np.ndarray:
    """Shell kernel via the collapsed double measure, keeping the generic
    causal-diamond logic: both radii pin to R, the diamond requires
    0 <= t <= 2R, and the surface amplitude enters squared."""
    radius = profile.radius
    amp = profile.total / (4.0 * np.pi * radius**2)
    t = np.asarray(t, dtype=float)
    lower = abs(radius - radius)
    inside = (t >= lower) & (t <= 2.0 * radius)
    vals = _PREFACTOR * (radius**2 + radius**2 - t**2) * radius * radius * amp**2
    return np.where(inside, vals, 0.0)


def _kernel_scalar_bounded(
    profile: RadialProfile, t: float, n_nodes: int = 24
) -> float:
    lo, hi = profile.support
    if t <= 0.0 or t >= 2.0 * hi:
        return 0.0
    # Outer split points: radii where an inner limit changes formula.
    candidates = [lo, hi, t, t - lo, t + lo, hi - t, t - hi]
    edges = sorted({min(max(c, lo), hi) for c in candidates})
    x, w = _leggauss(n_nodes)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 1e-15 * hi:
            continue
        half_r = 0.5 * (b - a)
        r = 0.5 * (a + b) + half_r * x
        s_lo = np.maximum(lo, np.abs(t - r))
        s_hi = np.minimum(hi, r + t)
        width = np.maximum(s_hi - s_lo, 0.0)
        half_s = 0.5 * width
        s = 0.5 * (s_lo + s_hi)[:, None] + half_s[:, None] * x[None, :]
        f_r = profile.density_values(r)
        f_s = profile.density_values(s.ravel()).reshape(s.shape)
        integrand = (r[:, None] ** 2 + s**2 - t**2) * r[:, None] * s * f_s
        inner = np.sum(integrand * w[None, :], axis=1) * half_s
        total += float(np.sum(inner * f_r * w)) * half_r
    return _PREFACTOR * total


def kernel_eval(profile: RadialProfile, t, n_nodes: int = 24) -> np.ndarray:
    """Kernel K(t) for an arbitrary profile, vectorized over t.

    The shell is evaluated through the collapsed surface measure; bounded
    densities run the split double quadrature.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if profile.is_singular:
        out = _shell_collapsed(profile, t_arr)
    else:
        out = np.array(
            [_kernel_scalar_bounded(profile, float(ti), n_nodes) for ti in t_arr]
        )
    if np.isscalar(t) or np.ndim(t) == 0:
        return out[0]
    return out


def _sign_changes(profile: RadialProfile, n_probe: int = 2049) -> tuple[float, ...]:
    radius = profile.radius
    tt = np.linspace(0.0, 2.0 * radius, n_probe)
    kk = kernel_eval(profile, tt)
    roots = []
    for i in range(n_probe - 1):
        a, b = kk[i], kk[i + 1]
        if a == 0.0 or a * b >= 0.0:
            continue
        root = brentq(
            lambda x: float(kernel_eval(profile, x)), tt[i], tt[i + 1],
            xtol=1e-14 * radius,
        )
        roots.append(float(root))
    return tuple(roots)


@dataclass(frozen=True)
class KernelTable:
    """Sampled kernel with its norms.

    ``values[j]`` is K(t[j]) on the uniform grid t[j] = j * step covering
    [0, 2R]; the final sample holds the one-sided limit K(2R^-).
    """

    t: np.ndarray
    values: np.ndarray
    radius: float
    charge_total: float
    closed_form: bool
    norm_1: float
    norm_inf: float
    kappa: float
    sign_changes: tuple[float, ...]

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0])

    def interpolator(self):
        from scipy.interpolate import PchipInterpolator

        return PchipInterpolator(self.t, self.values, extrapolate=False)


def kernel_norms(
    profile: RadialProfile, rel_tol: float = 1e-11
) -> tuple[float, float, float, tuple[float, ...]]:
    """(L1 norm, sup norm, running integral over [0, 2R], sign changes).

    The L1 integral is split at the computed sign changes so each piece
    has one sign; the sup norm refines around the sampled maximum and the
    support endpoints.
    """
    radius = profile.radius
    changes = _sign_changes(profile)
    edges = [0.0, *changes, 2.0 * radius]

    def k_abs(tt: np.ndarray) -> np.ndarray:
        return np.abs(kernel_eval(profile, tt))

    def k_plain(tt: np.ndarray) -> np.ndarray:
        return np.asarray(kernel_eval(profile, tt), dtype=float)

    norm_1 = 0.0
    kappa = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        piece = adaptive_radial_integral(k_plain, a, b, rel_tol)
        kappa += piece
        norm_1 += abs(piece)

    probe = np.linspace(0.0, 2.0 * radius, 4097)
    vals = k_abs(probe)
    j = int(np.argmax(vals))
    best = float(vals[j])
    a = probe[max(j - 2, 0)]
    b = probe[min(j + 2, probe.size - 1)]
    if b > a:
        res = minimize_scalar(
            lambda x: -float(np.abs(kernel_eval(profile, x))),
            bounds=(a, b), method="bounded",
            options={"xatol": 1e-13 * radius},
        )
        best = max(best, float(-res.fun))
    best = max(best, float(k_abs(np.array([0.0]))[0]))
    best = max(best, float(k_abs(np.array([2.0 * radius]))[0]))
    return norm_1, best, kappa, changes


def build_kernel_table(
    profile: RadialProfile, n_intervals: int = 4096
) -> KernelTable:
    """Sample the kernel on a uniform grid over [0, 2R] and attach norms."""
    radius = profile.radius
    t = np.linspace(0.0, 2.0 * radius, n_intervals + 1)
    values = np.asarray(kernel_eval(profile, t), dtype=float)
    norm_1, norm_inf, kappa, changes = kernel_norms(profile)
    return KernelTable(
        t=t,
        values=values,
        radius=radius,
        charge_total=profile.total,
        closed_form=profile.is_singular,
        norm_1=norm_1,
        norm_inf=norm_inf,
        kappa=kappa,
        sign_changes=changes,
    )


def kernel_on_grid(profile: RadialProfile, h: float, m: int) -> np.ndarray:
    """Kernel samples K(j*h) for j = 0..m, requiring m*h = 2R.

    Solvers call this so the memory window ends exactly on a node and the
    shell's one-sided value at t = 2R lands on the final sample.
    """
    radius = profile.radius
    if m < 2:
        raise ValueError("memory window needs at least 2 steps")
    if abs(m * h - 2.0 * radius) > 1e-9 * radius:
        raise ValueError(
            f"step h={h!r} does not split the memory window: need m*h = 2R "
            f"(got m={m}, 2R={2 * radius!r})"
        )
    t = np.arange(m + 1) * h
    t[-1] = 2.0 * radius
    return np.asarray(kernel_eval(profile, t), dtype=float)
