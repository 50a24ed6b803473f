"""Continuum electromagnetic fields of the rotating charge at rest.

All fields split into a static Coulomb part, a stationary rotation part,
and a free wave. For rotation about a fixed axis the vector potential is a
pure stream field A = psi(zeta, z) grad(theta) in cylindrical coordinates
aligned with the axis, and the stationary stream function for rotation
rate w is exactly psi = w * zeta^2 * V(r) with

    V(r) = 4 pi [ int_r^rhi Q4(u) u^-4 du + Q4(rhi) / (3 rhi^3) ],
    Q4(u) = int_0^u f_e(s) s^4 ds,

dipolar outside the support. Free waves are propagated with the explicit
Kirchhoff spherical-mean solution evaluated at field points; initial data
is supplied as axisymmetric pulses psi_0 = zeta^2 * q(r, z) with a smooth
compactly supported q, which keeps every Kirchhoff integrand regular on
the axis (no 1/zeta anywhere).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .profiles import RadialProfile, cumulative_moment, _leggauss

__all__ = [
    "WavePulse",
    "OmegaHistory",
    "coulomb_potential",
    "coulomb_potential_derivative",
    "static_stream_unit",
    "stationary_stream",
    "kirchhoff_wave",
    "wave_spin_series",
    "wave_support_window",
    "source_potential",
]


def coulomb_potential(profile: RadialProfile, r) -> np.ndarray:
    """Electrostatic potential of the radial distribution (signed).

    phi(r) = 4 pi [ Q2(r)/r + int_r^rhi f s ds ], with the shell reducing
    to total/max(r, R).
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if profile.is_singular:
        return profile.total / np.maximum(r, profile.radius)
    q2 = cumulative_moment(profile, 2, r)
    q1_full = cumulative_moment(profile, 1, np.array([profile.support[1]]))[0]
    q1 = cumulative_moment(profile, 1, r)
    inner = np.where(r > 0.0, q2 / np.maximum(r, 1e-300), 0.0)
    return 4.0 * np.pi * (inner + (q1_full - q1))


def coulomb_potential_derivative(profile: RadialProfile, r) -> np.ndarray:
    """d phi / d r = -4 pi Q2(r) / r^2 (zero at the origin)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    q2 = cumulative_moment(profile, 2, r)
    return np.where(r > 0.0, -4.0 * np.pi * q2 / np.maximum(r, 1e-300) ** 2, 0.0)


_STREAM_CACHE: dict[int, tuple] = {}


def static_stream_unit(profile: RadialProfile, r) -> np.ndarray:
    """Radial factor V(r) of the unit-rate stationary stream function.

    The stationary stream function for rotation rate w is
    psi = w * zeta^2 * V(r); outside the support V is exactly dipolar,
    4 pi Q4 / (3 r^3). For the shell V is constant total/(3R) inside.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    hi = profile.support[1]
    if profile.is_singular:
        radius = profile.radius
        inside = profile.total / (3.0 * radius)
        outside = profile.total * radius**2 / (3.0 * np.maximum(r, radius) ** 3)
        return np.where(r < radius, inside, outside)

    q4_full = float(cumulative_moment(profile, 4, np.array([hi]))[0])
    table = _STREAM_CACHE.get(id(profile))
    if table is None:
        # cumulative integral of Q4(u)/u^4 from each grid point to the edge
        n = 4097
        grid = np.linspace(0.0, hi, n)
        x, w = _leggauss(12)
        mids = 0.5 * (grid[1:] + grid[:-1])
        halves = 0.5 * (grid[1:] - grid[:-1])
        nodes = mids[:, None] + halves[:, None] * x[None, :]
        q4 = cumulative_moment(profile, 4, nodes.ravel()).reshape(nodes.shape)
        vals = np.where(nodes > 0.0, q4 / np.maximum(nodes, 1e-300) ** 4, 0.0)
        panel = np.sum(vals * w[None, :], axis=1) * halves
        # tail[i] = int_{grid[i]}^{hi}
        tail = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]])
        from scipy.interpolate import PchipInterpolator

        table = (PchipInterpolator(grid, tail, extrapolate=False),)
        _STREAM_CACHE[id(profile)] = table
    interp = table[0]
    out = np.empty_like(r)
    inside = r < hi
    out[~inside] = q4_full / (3.0 * np.maximum(r[~inside], 1e-300) ** 3)
    if np.any(inside):
        out[inside] = interp(r[inside]) + q4_full / (3.0 * hi**3)
    return 4.0 * np.pi * out


def stationary_stream(
    profile: RadialProfile, omega: float, zeta: np.ndarray, z: np.ndarray
) -> np.ndarray:
    """Stationary stream function w * zeta^2 * V(r) on given points."""
    zeta = np.asarray(zeta, dtype=float)
    z = np.asarray(z, dtype=float)
    r = np.sqrt(zeta**2 + z**2)
    return omega * zeta**2 * static_stream_unit(profile, r).reshape(r.shape)


@dataclass(frozen=True)
class WavePulse:
    """Axisymmetric free-wave initial data psi_0 = zeta^2 q(r, z).

    q = amplitude * chi(r) * (1 + z_asymmetry * z / r) with chi a C^3 bump
    (1 - u^2)^4 supported on [r_min, r_max]; psi_dot_0 uses the same shape
    scaled by velocity_amplitude. The z_asymmetry knob deliberately breaks
    the z-reflection symmetry (for tests that must see momentum flow);
    physical scenarios keep it zero.
    """

    amplitude: float
    r_min: float
    r_max: float
    z_asymmetry: float = 0.0
    velocity_amplitude: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.r_min < self.r_max):
            raise ValueError("pulse needs 0 < r_min < r_max")

    @property
    def center(self) -> float:
        return 0.5 * (self.r_min + self.r_max)

    @property
    def width(self) -> float:
        return 0.5 * (self.r_max - self.r_min)

    def is_trivial(self) -> bool:
        return self.amplitude == 0.0 and self.velocity_amplitude == 0.0

    def chi(self, r: np.ndarray) -> np.ndarray:
        u = (np.asarray(r, dtype=float) - self.center) / self.width
        return np.where(np.abs(u) < 1.0, (1.0 - u**2) ** 4, 0.0)

    def chi_prime(self, r: np.ndarray) -> np.ndarray:
        u = (np.asarray(r, dtype=float) - self.center) / self.width
        return np.where(
            np.abs(u) < 1.0, -8.0 * u * (1.0 - u**2) ** 3 / self.width, 0.0
        )

    def _asym(self, r: np.ndarray, z: np.ndarray) -> np.ndarray:
        if self.z_asymmetry == 0.0:
            return np.ones_like(r)
        return 1.0 + self.z_asymmetry * z / np.maximum(r, 1e-300)

    def q_factor(self, r: np.ndarray, z: np.ndarray) -> np.ndarray:
        return self.amplitude * self.chi(r) * self._asym(r, z)

    def qdot_factor(self, r: np.ndarray, z: np.ndarray) -> np.ndarray:
        return self.velocity_amplitude * self.chi(r) * self._asym(r, z)

    def psi_initial(self, zeta: np.ndarray, z: np.ndarray) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=float)
        z = np.asarray(z, dtype=float)
        r = np.sqrt(zeta**2 + z**2)
        return zeta**2 * self.q_factor(r, z)

    def psi_dot_initial(self, zeta: np.ndarray, z: np.ndarray) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=float)
        z = np.asarray(z, dtype=float)
        r = np.sqrt(zeta**2 + z**2)
        return zeta**2 * self.qdot_factor(r, z)

    def grad_q(self, y: np.ndarray) -> np.ndarray:
        """Cartesian gradient of q at points y (..., 3). Regular everywhere."""
        y = np.asarray(y, dtype=float)
        r = np.sqrt(np.sum(y**2, axis=-1))
        rs = np.maximum(r, 1e-300)
        z = y[..., 2]
        asym = self._asym(r, z)
        radial = self.amplitude * self.chi_prime(r) * asym
        out = y * (radial / rs)[..., None]
        if self.z_asymmetry != 0.0:
            # amplitude * chi * beta * grad(z/r) = a chi beta (e_z/r - z y/r^3)
            extra = self.amplitude * self.chi(r) * self.z_asymmetry
            out = out - y * (extra * z / rs**3)[..., None]
            out[..., 2] = out[..., 2] + extra / rs
        return out


@dataclass(frozen=True)
class OmegaHistory:
    """Axial rotation-rate history with a constant pre-history rate.

    omega(u) = omega0 for u <= t[0]; linear interpolation on the samples.
    """

    t: np.ndarray
    omega: np.ndarray
    omega0: float

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.interp(u, self.t, self.omega, left=self.omega0)


def _cap_windows(r_pt: np.ndarray, t: float, r_min: float, r_max: float):
    """Per-point cos(gamma) interval (polar axis along x) on which the
    integration sphere of radius t meets the annulus r_min <= |y| <= r_max.

    |y|^2 = |x|^2 + t^2 + 2 t |x| cos(gamma) is monotone in cos(gamma), so
    the active region is a single cap strip; empty windows come out with
    zero width after clipping.
    """
    r_pt = np.asarray(r_pt, dtype=float)
    den = 2.0 * t * r_pt
    safe = np.maximum(den, 1e-300)
    base = r_pt**2 + t**2
    c_lo = np.clip((r_min**2 - base) / safe, -1.0, 1.0)
    c_hi = np.clip((r_max**2 - base) / safe, -1.0, 1.0)
    degenerate = den <= 1e-14 * (1.0 + base)
    if np.any(degenerate):
        # sphere of (nearly) constant |y|: all or nothing
        ry = np.sqrt(base)
        full = (ry >= r_min) & (ry <= r_max)
        c_lo = np.where(degenerate, np.where(full, -1.0, 0.0), c_lo)
        c_hi = np.where(degenerate, np.where(full, 1.0, 0.0), c_hi)
    return c_lo, c_hi


def _frames(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal frame (radial, e1, e2) per point, radial = x/|x|."""
    r = np.linalg.norm(pts, axis=-1)
    rad = np.where(
        r[:, None] > 1e-300, pts / np.maximum(r, 1e-300)[:, None],
        np.array([0.0, 0.0, 1.0]),
    )
    # helper axis least aligned with rad
    helper = np.zeros_like(rad)
    helper[np.arange(len(rad)), np.argmin(np.abs(rad), axis=-1)] = 1.0
    e1 = np.cross(rad, helper)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(rad, e1)
    return rad, e1, e2


def kirchhoff_wave(
    pulse: WavePulse,
    x: np.ndarray,
    t: float,
    n_polar: int = 32,
    n_azimuth: int = 64,
) -> np.ndarray:
    """Free wave vector potential at point(s) x and time t >= 0.

    Spherical-mean (Kirchhoff) solution of the vector wave equation from
    the pulse's initial data:

        A(x, t) = M_t[A0 + t (n . grad) A0] + t M_t[dA0/dt],

    with M_t the average over the sphere of radius t around x. Writing
    A0 = q(y) (-y2, y1, 0) keeps all integrands smooth on the axis, and
    the polar quadrature is restricted to the cap strip where the sphere
    meets the pulse support, so accuracy does not degrade for small or
    distant pulses.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if t == 0.0:
        r = np.linalg.norm(pts, axis=-1)
        q = pulse.q_factor(r, pts[:, 2])
        out = np.stack([-pts[:, 1] * q, pts[:, 0] * q, np.zeros(len(pts))], axis=-1)
        return out[0] if single else out

    r_pt = np.linalg.norm(pts, axis=-1)
    c_lo, c_hi = _cap_windows(r_pt, t, pulse.r_min, pulse.r_max)
    rad, e1, e2 = _frames(pts)
    xg, wg = _leggauss(n_polar)
    half = 0.5 * (c_hi - c_lo)
    c = (0.5 * (c_lo + c_hi))[:, None] + half[:, None] * xg[None, :]  # (P, C)
    s = np.sqrt(np.maximum(1.0 - c**2, 0.0))
    phi = 2.0 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
    cphi, sphi = np.cos(phi), np.sin(phi)
    # normals (P, C, Az, 3)
    n = (
        c[:, :, None, None] * rad[:, None, None, :]
        + s[:, :, None, None]
        * (
            cphi[None, None, :, None] * e1[:, None, None, :]
            + sphi[None, None, :, None] * e2[:, None, None, :]
        )
    )
    y = pts[:, None, None, :] + t * n
    ry = np.sqrt(np.sum(y**2, axis=-1))
    zy = y[..., 2]
    q = pulse.q_factor(ry, zy)
    qdot = pulse.qdot_factor(ry, zy)
    ndotgrad = np.sum(n * pulse.grad_q(y), axis=-1)
    scalar = q + t * (ndotgrad + qdot)
    ax = -y[..., 1] * scalar - t * q * n[..., 1]
    ay = y[..., 0] * scalar + t * q * n[..., 0]
    w = (half[:, None] * wg[None, :])[:, :, None] / (2.0 * n_azimuth)  # (P, C, 1)
    out = np.stack(
        [
            np.sum(ax * w, axis=(1, 2)),
            np.sum(ay * w, axis=(1, 2)),
            np.zeros(pts.shape[0]),
        ],
        axis=-1,
    )
    return out[0] if single else out


def wave_support_window(pulse: WavePulse, r_probe: float) -> tuple[float, float]:
    """Times at which the pulse can influence points with |x| <= r_probe."""
    return max(0.0, pulse.r_min - r_probe), pulse.r_max + r_probe


def _particle_rule(
    profile: RadialProfile, n_radial: int, n_polar: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Meridional nodes (zeta, z) and volume weights for int f(r) dV with
    azimuth already integrated out (axisymmetric integrands only)."""
    c, wc = _leggauss(n_polar)
    if profile.is_singular:
        radius = profile.radius
        zeta = radius * np.sqrt(1.0 - c**2)
        z = radius * c
        w = profile.total * wc / 2.0
        return zeta, z, w
    lo, hi = profile.support
    xr, wr = _leggauss(n_radial)
    r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xr
    wr = 0.5 * (hi - lo) * wr
    f = profile.density_values(r)
    zeta = (r[:, None] * np.sqrt(1.0 - c**2)[None, :]).ravel()
    z = (r[:, None] * c[None, :]).ravel()
    w = (2.0 * np.pi * (wr * f * r**2)[:, None] * (wc / 2.0)[None, :] * 2.0).ravel()
    return zeta, z, w


def wave_spin_series(
    pulse: WavePulse,
    profile: RadialProfile,
    times: np.ndarray,
    n_polar: int = 32,
    n_azimuth: int = 64,
    particle_radial: int = 16,
    particle_polar: int = 24,
) -> np.ndarray:
    """Axial field spin of the free wave over the charge distribution.

    s_wave(t) = int (x cross A_wave) . a f_e dV, evaluated only inside the
    causal window where the expanding pulse shell can overlap the support;
    outside it the strong Huygens principle makes it exactly zero.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.zeros(times.shape)
    if pulse.is_trivial():
        return out
    zeta_p, z_p, w_p = _particle_rule(profile, particle_radial, particle_polar)
    t_lo, t_hi = wave_support_window(pulse, profile.support[1])
    xp = np.stack([zeta_p, np.zeros_like(zeta_p), z_p], axis=-1)  # (P, 3)
    for i, t in enumerate(times):
        if t < t_lo or t > t_hi or t == 0.0:
            if t == 0.0 and t_lo == 0.0:
                r = np.hypot(zeta_p, z_p)
                a2 = zeta_p * pulse.q_factor(r, z_p)
                out[i] = float(np.sum(w_p * zeta_p * a2))
            continue
        a_vec = kirchhoff_wave(
            pulse, xp, float(t), n_polar=n_polar, n_azimuth=n_azimuth
        )
        # only the azimuthal component at meridional points is needed:
        # psi(x) = x1 A2 - x2 A1 = zeta * A2 here (x2 = 0)
        out[i] = float(np.sum(w_p * zeta_p * a_vec[:, 1]))
    return out


def source_potential(
    profile: RadialProfile,
    history: OmegaHistory,
    axis: np.ndarray,
    x: np.ndarray,
    t: float,
    n_radial: int = 16,
    n_polar: int = 24,
    n_azimuth: int = 48,
) -> np.ndarray:
    """Retarded vector potential of the rotating charge at one point.

    A(x, t) = int f_e(y) [omega(t - |x-y|) cross y] / |x - y| d^3 y with
    the rate history pinned to its constant pre-history value for early
    retarded times. Full 3D quadrature over the support; intended for
    spot checks and report paths, not inner loops.
    """
    axis = np.asarray(axis, dtype=float)
    x = np.asarray(x, dtype=float)
    c, wc = _leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    s = np.sqrt(1.0 - c**2)
    dirs = np.stack(
        [
            (s[:, None] * np.cos(phi)[None, :]).ravel(),
            (s[:, None] * np.sin(phi)[None, :]).ravel(),
            np.repeat(c, n_azimuth),
        ],
        axis=-1,
    )  # (D, 3)
    w_dir = np.repeat(wc, n_azimuth) * (2.0 * np.pi / n_azimuth)  # sums to 4 pi
    if profile.is_singular:
        radius = profile.radius
        amp = profile.total / (4.0 * np.pi * radius**2)
        y = radius * dirs
        w = amp * radius**2 * w_dir
    else:
        lo, hi = profile.support
        xr, wr = _leggauss(n_radial)
        r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xr
        wr = 0.5 * (hi - lo) * wr * profile.density_values(r) * r**2
        y = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
        w = (wr[:, None] * w_dir[None, :]).ravel()
    diff = x[None, :] - y
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    dist = np.maximum(dist, 1e-12 * profile.radius)
    rate = history(t - dist)
    wxy = np.cross(np.broadcast_to(axis, y.shape) * rate[:, None], y)
    return np.sum(w[:, None] * wxy / dist[:, None], axis=0)
