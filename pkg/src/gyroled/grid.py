"""Axisymmetric meridional grid for the azimuthal field stream function.

The dynamical field is psi(zeta, z, t) = zeta * A_phi. For a charge cloud
spinning about the z axis at rate omega(t) it obeys

    d^2 psi / dt^2 = L psi + 4 pi zeta^2 f_e(r) omega(t),
    L = d^2/dzeta^2 - (1/zeta) d/dzeta + d^2/dz^2,

with psi = 0 on the axis. L is discretised in flux form, which annihilates
zeta^2 exactly and therefore keeps the axis regular without one-off fixes.
The discrete source is taken as omega times the negated discrete L of the
sampled stationary profile, so a spinning cloud at constant rate is an
exact equilibrium of the scheme rather than an O(h^2) near-equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as sparse_linalg

from .fields import WavePulse, coulomb_potential_derivative, static_stream_unit
from .profiles import RadialProfile

__all__ = [
    "GridSpec",
    "FieldState",
    "Functionals",
    "flux_laplacian",
    "cfl_time_step",
    "static_unit_field",
    "unit_source",
    "continuum_source",
    "particle_weights",
    "solve_static",
    "pulse_state",
    "verlet_step",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform meridional grid, zeta in [0, zeta_max], z in [z_min, z_max]."""

    zeta_max: float
    z_min: float
    z_max: float
    n_zeta: int
    n_z: int

    def __post_init__(self):
        if self.zeta_max <= 0:
            raise ValueError("zeta_max must be positive")
        if self.z_max <= self.z_min:
            raise ValueError("empty z range")
        if self.n_zeta < 8 or self.n_z < 8:
            raise ValueError("grid too small to be meaningful")

    @classmethod
    def centered(cls, extent: float, cells_per_unit: int) -> "GridSpec":
        """Square domain zeta in [0, extent], z in [-extent, extent]."""
        n_zeta = int(round(extent * cells_per_unit)) + 1
        n_z = 2 * int(round(extent * cells_per_unit)) + 1
        return cls(zeta_max=extent, z_min=-extent, z_max=extent,
                   n_zeta=n_zeta, n_z=n_z)

    @property
    def dzeta(self) -> float:
        return self.zeta_max / (self.n_zeta - 1)

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / (self.n_z - 1)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.linspace(0.0, self.zeta_max, self.n_zeta),
            np.linspace(self.z_min, self.z_max, self.n_z),
        )

    def radius(self) -> np.ndarray:
        """Spherical radius at every node, shape (n_zeta, n_z)."""
        zeta, z = self.axes()
        return np.hypot(zeta[:, None], z[None, :])

    def flux_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """Interior radial stencil weights c_plus[j], c_minus[j] (j >= 1)."""
        zeta, _ = self.axes()
        h = self.dzeta
        zj = zeta[1:-1]
        c_plus = zj / (zj + 0.5 * h) / h**2
        c_minus = zj / (zj - 0.5 * h) / h**2
        return c_plus, c_minus


def flux_laplacian(spec: GridSpec, psi: np.ndarray) -> np.ndarray:
    """Discrete L psi; boundary rows and columns are returned as zero.

    The radial part is zeta_j [ (psi_{j+1}-psi_j)/zeta_{j+1/2}
    - (psi_j-psi_{j-1})/zeta_{j-1/2} ] / dzeta^2, exact on psi = zeta^2.
    """
    out = np.zeros_like(psi)
    c_plus, c_minus = spec.flux_coefficients()
    inner = psi[1:-1, 1:-1]
    out[1:-1, 1:-1] = (
        c_plus[:, None] * (psi[2:, 1:-1] - inner)
        - c_minus[:, None] * (inner - psi[:-2, 1:-1])
        + (psi[1:-1, 2:] - 2.0 * inner + psi[1:-1, :-2]) / spec.dz**2
    )
    return out


def cfl_time_step(spec: GridSpec, cfl: float = 0.9) -> float:
    """Stable explicit time step from a Gershgorin bound on the stencil."""
    if not 0.0 < cfl <= 1.0:
        raise ValueError("cfl must lie in (0, 1]")
    c_plus, c_minus = spec.flux_coefficients()
    lam = 2.0 * float(np.max(c_plus + c_minus)) + 4.0 / spec.dz**2
    return cfl * 2.0 / np.sqrt(lam)


def static_unit_field(profile: RadialProfile, spec: GridSpec) -> np.ndarray:
    """Stationary stream function per unit spin rate, sampled on the grid."""
    zeta, _ = spec.axes()
    r = spec.radius()
    v = static_stream_unit(profile, r.ravel()).reshape(r.shape)
    return zeta[:, None] ** 2 * v


def unit_source(profile: RadialProfile, spec: GridSpec) -> np.ndarray:
    """Discrete source per unit spin rate: minus L_h of the sampled
    stationary field, making that field an exact discrete equilibrium."""
    _require_mesh_compatible(profile)
    return -flux_laplacian(spec, static_unit_field(profile, spec))


def _require_mesh_compatible(profile: RadialProfile) -> None:
    if profile.is_singular:
        raise ValueError(
            "surface-delta charge profiles cannot be sampled on a mesh; "
            "use a mollified profile (for example the smooth shell) for "
            "grid runs"
        )


def continuum_source(profile: RadialProfile, spec: GridSpec) -> np.ndarray:
    """Pointwise source density 4 pi zeta^2 f_e(r) per unit spin rate."""
    _require_mesh_compatible(profile)
    zeta, _ = spec.axes()
    r = spec.radius()
    f = np.zeros_like(r)
    lo, hi = profile.support
    mask = (r >= lo) & (r <= hi)
    f[mask] = profile.density_values(r[mask])
    return 4.0 * np.pi * zeta[:, None] ** 2 * f


def _trapezoid_weights(spec: GridSpec) -> np.ndarray:
    wz = np.ones(spec.n_zeta)
    wz[0] = wz[-1] = 0.5
    wk = np.ones(spec.n_z)
    wk[0] = wk[-1] = 0.5
    return wz[:, None] * wk[None, :] * spec.dzeta * spec.dz


def particle_weights(profile: RadialProfile, spec: GridSpec) -> np.ndarray:
    """Volume quadrature weights for int f_e g dV over the grid.

    Rejects singular (surface) profiles: a delta shell cannot be sampled
    on a mesh, use a mollified profile for grid runs.
    """
    _require_mesh_compatible(profile)
    zeta, _ = spec.axes()
    r = spec.radius()
    f = np.zeros_like(r)
    lo, hi = profile.support
    mask = (r >= lo) & (r <= hi)
    if np.any(mask):
        f[mask] = profile.density_values(r[mask])
    return 2.0 * np.pi * zeta[:, None] * f * _trapezoid_weights(spec)


def solve_static(
    profile: RadialProfile, spec: GridSpec, omega: float
) -> np.ndarray:
    """Sparse direct solve of L psi = -omega * 4 pi zeta^2 f_e.

    Independent elliptic route to the stationary field; the boundary is
    pinned to the sampled far tail. Used to cross-check the quadrature
    construction of the stationary profile against the grid operator.
    """
    n_j = spec.n_zeta - 2
    n_k = spec.n_z - 2
    c_plus, c_minus = spec.flux_coefficients()
    inv_dz2 = 1.0 / spec.dz**2

    diag_j = sparse.diags(-(c_plus + c_minus))
    upper_j = sparse.diags(c_plus[:-1], 1)
    lower_j = sparse.diags(c_minus[1:], -1)
    a_j = diag_j + upper_j + lower_j
    lap_z = sparse.diags(
        [np.full(n_k, -2.0 * inv_dz2), np.full(n_k - 1, inv_dz2), np.full(n_k - 1, inv_dz2)],
        [0, 1, -1],
    )
    eye_j = sparse.identity(n_j)
    eye_k = sparse.identity(n_k)
    a = sparse.kron(a_j, eye_k) + sparse.kron(eye_j, lap_z)

    rhs = (-omega * continuum_source(profile, spec))[1:-1, 1:-1].copy()
    boundary = omega * static_unit_field(profile, spec)
    rhs[0, :] -= c_minus[0] * boundary[0, 1:-1]
    rhs[-1, :] -= c_plus[-1] * boundary[-1, 1:-1]
    rhs[:, 0] -= inv_dz2 * boundary[1:-1, 0]
    rhs[:, -1] -= inv_dz2 * boundary[1:-1, -1]

    sol = sparse_linalg.spsolve(a.tocsr(), rhs.ravel())
    psi = boundary.copy()
    psi[1:-1, 1:-1] = sol.reshape(n_j, n_k)
    psi[0, :] = 0.0
    return psi


@dataclass
class FieldState:
    """Synchronous field snapshot with a cached acceleration."""

    psi: np.ndarray
    psi_dot: np.ndarray
    time: float = 0.0
    accel: np.ndarray | None = None


def pulse_state(pulse: WavePulse, spec: GridSpec, background: np.ndarray | None = None) -> FieldState:
    """Initial state for an incoming pulse over an optional static field."""
    zeta, z = spec.axes()
    psi = np.ascontiguousarray(
        np.broadcast_to(pulse.psi_initial(zeta[:, None], z[None, :]), (spec.n_zeta, spec.n_z))
    ).astype(float)
    psi_dot = np.ascontiguousarray(
        np.broadcast_to(pulse.psi_dot_initial(zeta[:, None], z[None, :]), (spec.n_zeta, spec.n_z))
    ).astype(float)
    if background is not None:
        psi = psi + background
    psi[0, :] = 0.0
    psi_dot[0, :] = 0.0
    return FieldState(psi=psi, psi_dot=psi_dot, time=0.0)


def verlet_step(
    spec: GridSpec,
    state: FieldState,
    dt: float,
    source: np.ndarray | None = None,
    source_next: np.ndarray | None = None,
) -> FieldState:
    """One velocity Verlet step of the field.

    Boundary nodes keep their values (time-independent Dirichlet data);
    scenarios must size the domain so no signal reaches the far edges.
    `source` is the source array at the current time, `source_next` at
    time + dt (both optional, broadcastable arrays).
    """
    accel = state.accel
    if accel is None:
        accel = flux_laplacian(spec, state.psi)
        if source is not None:
            accel = accel + source
            accel[0, :] = 0.0
            accel[-1, :] = 0.0
            accel[:, 0] = 0.0
            accel[:, -1] = 0.0
    half_dot = state.psi_dot + 0.5 * dt * accel
    psi = state.psi + dt * half_dot
    psi[0, :] = state.psi[0, :]
    psi[-1, :] = state.psi[-1, :]
    psi[:, 0] = state.psi[:, 0]
    psi[:, -1] = state.psi[:, -1]
    accel_next = flux_laplacian(spec, psi)
    if source_next is not None:
        accel_next = accel_next + source_next
        accel_next[0, :] = 0.0
        accel_next[-1, :] = 0.0
        accel_next[:, 0] = 0.0
        accel_next[:, -1] = 0.0
    psi_dot = half_dot + 0.5 * dt * accel_next
    psi_dot[0, :] = state.psi_dot[0, :]
    psi_dot[-1, :] = state.psi_dot[-1, :]
    psi_dot[:, 0] = state.psi_dot[:, 0]
    psi_dot[:, -1] = state.psi_dot[:, -1]
    return FieldState(psi=psi, psi_dot=psi_dot, time=state.time + dt, accel=accel_next)


@dataclass(frozen=True)
class Functionals:
    """Precomputed quadrature weights for the conservation functionals."""

    spec: GridSpec
    charge_weights: np.ndarray = field(repr=False)
    angular_weights: np.ndarray = field(repr=False)
    inv_zeta: np.ndarray = field(repr=False)
    cell_weights: np.ndarray = field(repr=False)
    zeta_col: np.ndarray = field(repr=False)
    z_row: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, profile: RadialProfile, spec: GridSpec) -> "Functionals":
        zeta, z = spec.axes()
        r = spec.radius()
        inv_zeta = np.zeros(spec.n_zeta)
        inv_zeta[1:] = 1.0 / zeta[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            phi_over_r = np.where(
                r > 1e-12,
                coulomb_potential_derivative(profile, np.maximum(r, 1e-12).ravel()).reshape(r.shape) / np.maximum(r, 1e-12),
                0.0,
            )
        cell = _trapezoid_weights(spec)
        angular = 0.5 * phi_over_r * zeta[:, None] * cell
        return cls(
            spec=spec,
            charge_weights=particle_weights(profile, spec),
            angular_weights=angular,
            inv_zeta=inv_zeta,
            cell_weights=cell,
            zeta_col=zeta[:, None],
            z_row=z[None, :],
        )

    def spin(self, psi: np.ndarray) -> float:
        """Field spin over the charge cloud, int f_e psi dV."""
        return float(np.sum(self.charge_weights * psi))

    def torque(self, psi_dot: np.ndarray) -> float:
        """Axial torque on the particle, -int f_e psi_dot dV."""
        return -float(np.sum(self.charge_weights * psi_dot))

    def energy(self, psi: np.ndarray, psi_dot: np.ndarray) -> float:
        """Wave field energy, (1/4) int (psi_dot^2 + |grad psi|^2) / zeta."""
        dpz = np.gradient(psi, self.spec.dzeta, axis=0)
        dzz = np.gradient(psi, self.spec.dz, axis=1)
        dens = (psi_dot**2 + dpz**2 + dzz**2) * self.inv_zeta[:, None]
        return 0.25 * float(np.sum(dens * self.cell_weights))

    def angular_momentum(self, psi: np.ndarray) -> float:
        """Axial field angular momentum carried by the crossed static and
        wave fields, (1/4 pi) int phi'(r) dpsi/dr dV."""
        dpz = np.gradient(psi, self.spec.dzeta, axis=0)
        dzz = np.gradient(psi, self.spec.dz, axis=1)
        radial = self.zeta_col * dpz + self.z_row * dzz
        return float(np.sum(self.angular_weights * radial))

    def linear_momentum(self, psi: np.ndarray, psi_dot: np.ndarray) -> float:
        """Axial field linear momentum, -(1/2) int psi_dot dpsi/dz / zeta."""
        dzz = np.gradient(psi, self.spec.dz, axis=1)
        dens = psi_dot * dzz * self.inv_zeta[:, None]
        return -0.5 * float(np.sum(dens * self.cell_weights))

    def axial_force(self, psi: np.ndarray, omega: float) -> float:
        """Net axial force on the spinning cloud, omega int f_e dpsi/dz dV."""
        dzz = np.gradient(psi, self.spec.dz, axis=1)
        return omega * float(np.sum(self.charge_weights * dzz))
