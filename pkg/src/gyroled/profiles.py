"""Radial charge and mass distributions and their moment integrals.

Everything downstream (retarded kernel, rotor functions, field sources)
reduces to weighted radial integrals over one or two compactly supported
spherically symmetric densities. This module owns those densities and the
quadrature applied to them, so the treatment of singular distributions is
decided in exactly one place: a delta shell is represented as an exact
surface measure whose integrals are evaluated in closed form, never as a
narrow mollified density.

Sign convention: ``total`` is the signed integral of the density over all
of space, so an electron-like charge distribution has ``total = -e`` with
``e > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

__all__ = [
    "UnitSystem",
    "RadialProfile",
    "shell_profile",
    "ball_profile",
    "smooth_shell_profile",
    "tabulated_profile",
    "radial_moment",
    "cumulative_moment",
    "coulomb_energy",
    "panel_quadrature",
    "adaptive_radial_integral",
]


@dataclass(frozen=True)
class UnitSystem:
    """Base scales of the problem. The wave speed is fixed to 1.

    Parameters
    ----------
    e : float
        Magnitude of the total charge (the distribution carries ``-e``).
    m_b : float
        Bare mass scale multiplying the mass distribution.
    R : float
        Radius of the supporting ball; all densities vanish for r > R.
    """

    e: float = 1.0
    m_b: float = 1.0
    R: float = 1.0

    def __post_init__(self) -> None:
        if self.e <= 0.0 or self.m_b <= 0.0 or self.R <= 0.0:
            raise ValueError("unit scales e, m_b, R must all be positive")

    @property
    def coupling(self) -> float:
        """Dimensionless charge-to-inertia ratio e^2 / (m_b R)."""
        return self.e**2 / (self.m_b * self.R)


@lru_cache(maxsize=32)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def panel_quadrature(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    n_panels: int,
    n_nodes: int = 16,
) -> float:
    """Composite Gauss-Legendre integral of ``func`` over [a, b].

    ``func`` must accept a numpy array of abscissae and return values of
    the same shape.
    """
    if b <= a:
        return 0.0
    x, w = _leggauss(n_nodes)
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = func(nodes.ravel()).reshape(nodes.shape)
    return float(np.sum(vals * w[None, :] * half[:, None]))


def adaptive_radial_integral(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    abs_floor: float = 1e-300,
    n_nodes: int = 16,
    max_panels: int = 4096,
) -> float:
    """Panel-doubling Gauss-Legendre quadrature with a relative stop rule.

    Doubles the panel count until two successive estimates agree to
    ``rel_tol`` (relative, with ``abs_floor`` guarding the zero integral),
    then returns the finer estimate.
    """
    n_panels = 4
    prev = panel_quadrature(func, a, b, n_panels, n_nodes)
    while n_panels <= max_panels:
        n_panels *= 2
        cur = panel_quadrature(func, a, b, n_panels, n_nodes)
        scale = max(abs(cur), abs(prev), abs_floor)
        if abs(cur - prev) <= rel_tol * scale:
            return cur
        prev = cur
    raise RuntimeError(
        f"radial quadrature did not reach rel_tol={rel_tol:g} "
        f"within {max_panels} panels"
    )


@dataclass(frozen=True)
class RadialProfile:
    """A compactly supported spherically symmetric density.

    Parameters
    ----------
    kind : str
        One of ``"shell"``, ``"ball"``, ``"smooth-shell"``, ``"tabulated"``.
    total : float
        Signed integral of the density over all space.
    radius : float
        Support radius; the density vanishes for r > radius.
    density : callable or None
        Vectorized radial density f(r). ``None`` exactly for the delta
        shell, which has no pointwise density.
    support : tuple of float
        Interval [r_lo, r_hi] outside of which the density vanishes.
    """

    kind: str
    total: float
    radius: float
    density: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, compare=False
    )
    support: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("profile radius must be positive")
        if self.total == 0.0:
            raise ValueError("profile total must be nonzero")
        if self.kind != "shell" and self.density is None:
            raise ValueError(f"kind {self.kind!r} requires a density callable")

    @property
    def is_singular(self) -> bool:
        """True when the profile has no bounded pointwise density."""
        return self.kind == "shell"

    def density_values(self, r: np.ndarray) -> np.ndarray:
        """Pointwise density at radii ``r`` (zero outside the support).

        Raises
        ------
        ValueError
            For the delta shell, which cannot be sampled pointwise.
        """
        if self.density is None:
            raise ValueError(
                "a delta-shell profile has no pointwise density; "
                "use a bounded profile (ball, smooth-shell, tabulated) "
                "for grid-sampled paths"
            )
        r = np.asarray(r, dtype=float)
        return np.asarray(self.density(r), dtype=float)

    def sample(self, n: int = 512) -> tuple[np.ndarray, np.ndarray]:
        """Uniform radial samples (r, f(r)) over [0, radius]."""
        r = np.linspace(0.0, self.radius, n)
        return r, self.density_values(r)


def shell_profile(total: float, radius: float) -> RadialProfile:
    """Surface delta distribution carrying ``total`` on the sphere r = radius."""
    return RadialProfile(
        kind="shell", total=total, radius=radius, support=(radius, radius)
    )


def ball_profile(total: float, radius: float) -> RadialProfile:
    """Uniform density on the solid ball of the given radius."""
    rho = 3.0 * total / (4.0 * np.pi * radius**3)

    def density(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.where(r <= radius, rho, 0.0)

    return RadialProfile(
        kind="ball", total=total, radius=radius, density=density,
        support=(0.0, radius),
    )


def smooth_shell_profile(
    total: float,
    radius: float,
    center_frac: float = 0.7,
    width_frac: float = 0.3,
) -> RadialProfile:
    """C^3 bump density concentrated near the surface of the ball.

    The density is proportional to (1 - u^2)^4 with
    u = (r - center_frac*radius)/(width_frac*radius), supported on
    [center - width, center + width]. With the defaults the support is
    [0.4*radius, radius], so the distribution touches the ball surface
    from inside and the retarded kernel keeps its full [0, 2*radius]
    support, while every field sampled on a grid stays C^3.
    """
    rc = center_frac * radius
    w = width_frac * radius
    lo, hi = rc - w, rc + w
    if lo < 0.0 or hi > radius:
        raise ValueError("smooth shell support must lie inside [0, radius]")

    def bump(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        u = (r - rc) / w
        core = np.where(np.abs(u) < 1.0, (1.0 - u**2) ** 4, 0.0)
        return core

    # (1-u^2)^4 * r^2 is a degree-10 polynomial in u; 8 nodes are exact.
    x, wq = _leggauss(8)
    r_nodes = rc + w * x
    norm = 4.0 * np.pi * w * float(np.sum(wq * bump(r_nodes) * r_nodes**2))
    c = total / norm

    def density(r: np.ndarray) -> np.ndarray:
        return c * bump(r)

    return RadialProfile(
        kind="smooth-shell", total=total, radius=radius, density=density,
        support=(lo, hi),
    )


def tabulated_profile(
    r_samples: np.ndarray,
    f_samples: np.ndarray,
    radius: float | None = None,
    total: float | None = None,
) -> RadialProfile:
    """Profile built from sampled density values by monotone interpolation.

    If ``total`` is given the interpolated density is rescaled so its
    volume integral matches it exactly; otherwise the total is computed
    from the samples.
    """
    from scipy.interpolate import PchipInterpolator

    r_samples = np.asarray(r_samples, dtype=float)
    f_samples = np.asarray(f_samples, dtype=float)
    if r_samples.ndim != 1 or r_samples.size < 4:
        raise ValueError("need at least 4 radial samples")
    if np.any(np.diff(r_samples) <= 0.0):
        raise ValueError("radial samples must be strictly increasing")
    if radius is None:
        radius = float(r_samples[-1])
    interp = PchipInterpolator(r_samples, f_samples, extrapolate=False)

    def raw_density(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        vals = interp(np.clip(r, r_samples[0], r_samples[-1]))
        vals = np.where((r >= r_samples[0]) & (r <= r_samples[-1]), vals, 0.0)
        return np.nan_to_num(vals)

    raw_total = 4.0 * np.pi * adaptive_radial_integral(
        lambda r: raw_density(r) * r**2, float(r_samples[0]), float(r_samples[-1])
    )
    if total is None:
        total = raw_total
        scale = 1.0
    else:
        if raw_total == 0.0:
            raise ValueError("sampled density integrates to zero")
        scale = total / raw_total

    def density(r: np.ndarray) -> np.ndarray:
        return scale * raw_density(r)

    lo = float(r_samples[np.argmax(f_samples != 0.0)]) if np.any(f_samples) else 0.0
    return RadialProfile(
        kind="tabulated", total=float(total), radius=radius, density=density,
        support=(min(lo, float(r_samples[0])), float(r_samples[-1])),
    )


def radial_moment(
    profile: RadialProfile,
    g: Callable[[np.ndarray], np.ndarray],
    rel_tol: float = 1e-12,
) -> float:
    """Weighted volume integral 4*pi * int g(r) f(r) r^2 dr.

    For the delta shell this is exactly total * g(radius).
    """
    if profile.is_singular:
        return profile.total * float(g(np.asarray([profile.radius]))[0])
    lo, hi = profile.support

    def integrand(r: np.ndarray) -> np.ndarray:
        return g(r) * profile.density_values(r) * r**2

    return 4.0 * np.pi * adaptive_radial_integral(integrand, lo, hi, rel_tol)


def cumulative_moment(profile: RadialProfile, power: int, r: np.ndarray) -> np.ndarray:
    """Cumulative radial moment int_0^r f(s) s^power ds, vectorized in r.

    This is the bare radial integral (no 4*pi). For the shell it is the
    step total * radius^(power-2) / (4*pi) turning on at r = radius.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if profile.is_singular:
        amp = profile.total * profile.radius ** (power - 2) / (4.0 * np.pi)
        return np.where(r >= profile.radius, amp, 0.0)

    lo, hi = profile.support
    # One fine cumulative table per (profile, power), then monotone interp.
    key = (id(profile), power)
    table = _CUMULATIVE_CACHE.get(key)
    if table is None:
        n = 4097
        grid = np.linspace(lo, hi, n)
        x, w = _leggauss(12)
        mids = 0.5 * (grid[1:] + grid[:-1])
        halves = 0.5 * (grid[1:] - grid[:-1])
        nodes = mids[:, None] + halves[:, None] * x[None, :]
        vals = profile.density_values(nodes.ravel()).reshape(nodes.shape)
        vals = vals * nodes**power
        panel = np.sum(vals * w[None, :], axis=1) * halves
        cum = np.concatenate([[0.0], np.cumsum(panel)])
        from scipy.interpolate import PchipInterpolator

        table = (PchipInterpolator(grid, cum, extrapolate=False), cum[-1])
        _CUMULATIVE_CACHE[key] = table
    interp, full = table
    out = np.empty_like(r)
    below = r <= lo
    above = r >= hi
    mid = ~(below | above)
    out[below] = 0.0
    out[above] = full
    if np.any(mid):
        out[mid] = interp(r[mid])
    return out


_CUMULATIVE_CACHE: dict[tuple[int, int], tuple] = {}


def coulomb_energy(profile: RadialProfile, rel_tol: float = 1e-12) -> float:
    """Electrostatic self-energy of the distribution.

    Evaluated as (1/2) int_0^inf Q(r)^2 / r^2 dr with Q(r) the cumulative
    charge inside radius r; the exterior tail contributes total^2/(2 r_hi).
    Shell: total^2/(2 R). Ball: (3/5) total^2 / R.
    """
    if profile.is_singular:
        return profile.total**2 / (2.0 * profile.radius)
    lo, hi = profile.support

    def integrand(r: np.ndarray) -> np.ndarray:
        q = 4.0 * np.pi * cumulative_moment(profile, 2, r)
        return np.where(r > 0.0, q**2 / np.maximum(r, 1e-300) ** 2, 0.0)

    interior = adaptive_radial_integral(integrand, max(lo, 0.0), hi, rel_tol)
    tail = profile.total**2 / hi
    return 0.5 * (interior + tail)
