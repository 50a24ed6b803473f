"""Scenario configuration: flat dotted-key files, presets, and builders.

A scenario file is plain text, one ``section.key = value`` per line, with
``#`` comments. Every key has a typed default; unknown keys are rejected
so typos fail loudly instead of silently running the default. Presets
are named override sets for the stock scenarios; precedence is
defaults < preset < file.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .audit import CosimConfig
from .fields import WavePulse
from .profiles import (
    RadialProfile,
    ball_profile,
    shell_profile,
    smooth_shell_profile,
)
from .rotor import RotorModel
from .solver import SolverConfig

__all__ = [
    "DEFAULTS",
    "PRESETS",
    "ScenarioConfig",
    "ConfigError",
    "parse_config_text",
    "load_config",
]


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


DEFAULTS: dict[str, Any] = {
    "units.e": 1.0,
    "units.m_b": 1.0,
    "units.R": 1.0,
    "profile.charge.kind": "shell",
    "profile.mass.kind": "shell",
    "rotor.omega0": 0.3,
    "pulse.amplitude": 0.0,
    "pulse.r_min": 3.0,
    "pulse.r_max": 4.0,
    "pulse.z_asymmetry": 0.0,
    "pulse.velocity_amplitude": 0.0,
    "solver.horizon": 16.0,
    "solver.step": 0.03125,
    "solver.lam": 4.0,
    "solver.tol": 1e-12,
    "solver.max_sweeps": 400,
    "drive.n_polar": 16,
    "drive.n_azimuth": 32,
    "drive.particle_radial": 8,
    "drive.particle_polar": 12,
    "grid.extent": 8.0,
    "grid.cells_per_unit": 16,
    "grid.cfl": 0.9,
    "grid.t_end": 4.0,
    "grid.sample_every": 4,
    "decay.detach": 5.0,
    "decay.window": 2.0,
    "compare.tol_rel": 5e-4,
    "audit.tol_rel": 1e-3,
    "sweep.coupling_min": 1.0,
    "sweep.coupling_max": 2.2,
    "sweep.points": 25,
}

PRESETS: dict[str, dict[str, Any]] = {
    # stationary shell rotor, no incoming wave: the trajectory must not
    # move at all
    "shell-soliton": {
        "solver.horizon": 8.0,
        "solver.step": 0.03125,
    },
    # weak annulus pulse scattering off the surface-shell rotor at unit
    # coupling; long horizon so the decay report sees many quiet windows
    "shell-scatter": {
        "pulse.amplitude": 6e-5,
        "pulse.r_min": 3.0,
        "pulse.r_max": 4.0,
        "solver.horizon": 40.0,
        "solver.step": 0.015625,
        "decay.detach": 5.0,
        "decay.window": 2.0,
    },
    # mollified shell so the same scenario can run on the field grid and
    # against the delay-kernel solver
    "smooth-scatter": {
        "profile.charge.kind": "smooth-shell",
        "profile.mass.kind": "smooth-shell",
        "pulse.amplitude": 1e-3,
        "pulse.r_min": 2.0,
        "pulse.r_max": 3.0,
        "solver.horizon": 12.0,
        "solver.step": 0.015625,
        "grid.extent": 16.0,
        "grid.cells_per_unit": 32,
        "grid.t_end": 12.0,
    },
    # margin of the contraction estimate versus coupling strength; the
    # sign change locates the threshold
    "threshold-sweep": {
        "sweep.coupling_min": 1.0,
        "sweep.coupling_max": 2.2,
        "sweep.points": 25,
    },
}

_PROFILE_KINDS = ("shell", "ball", "smooth-shell")


def _coerce(key: str, raw: str) -> Any:
    default = DEFAULTS[key]
    if isinstance(default, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc
    return raw


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines into a typed override mapping."""
    overrides: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        overrides[key] = _coerce(key, raw)
    return overrides


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: typed flat mapping plus object builders."""

    values: Mapping[str, Any]

    def __post_init__(self):
        unknown = set(self.values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown keys: {sorted(unknown)}")
        merged = dict(DEFAULTS)
        merged.update(self.values)
        object.__setattr__(self, "values", merged)
        self._validate()

    @classmethod
    def from_overrides(cls, *layers: Mapping[str, Any]) -> "ScenarioConfig":
        merged: dict[str, Any] = {}
        for layer in layers:
            merged.update(layer)
        return cls(values=merged)

    def _validate(self) -> None:
        v = self.values
        if v["units.e"] <= 0 or v["units.m_b"] <= 0 or v["units.R"] <= 0:
            raise ConfigError("units.e, units.m_b, units.R must all be positive")
        for key in ("profile.charge.kind", "profile.mass.kind"):
            if v[key] not in _PROFILE_KINDS:
                raise ConfigError(
                    f"{key} must be one of {_PROFILE_KINDS}, got {v[key]!r}"
                )
        if v["pulse.amplitude"] < 0:
            raise ConfigError("pulse.amplitude must be nonnegative")
        if not (0.0 < v["pulse.r_min"] < v["pulse.r_max"]):
            raise ConfigError("pulse radii must satisfy 0 < r_min < r_max")
        if v["sweep.points"] < 3:
            raise ConfigError("sweep.points must be at least 3")
        if not (0.0 < v["sweep.coupling_min"] < v["sweep.coupling_max"]):
            raise ConfigError("sweep coupling range must be positive and increasing")

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    # -- builders ---------------------------------------------------

    def _profile(self, kind: str, total: float) -> RadialProfile:
        radius = self.values["units.R"]
        if kind == "shell":
            return shell_profile(total=total, radius=radius)
        if kind == "ball":
            return ball_profile(total=total, radius=radius)
        return smooth_shell_profile(total=total, radius=radius)

    def charge_profile(self) -> RadialProfile:
        return self._profile(
            self.values["profile.charge.kind"], -self.values["units.e"]
        )

    def mass_profile(self) -> RadialProfile:
        return self._profile(self.values["profile.mass.kind"], self.values["units.m_b"])

    def rotor(self) -> RotorModel:
        return RotorModel(self.mass_profile())

    def pulse(self) -> WavePulse:
        v = self.values
        return WavePulse(
            amplitude=v["pulse.amplitude"],
            r_min=v["pulse.r_min"],
            r_max=v["pulse.r_max"],
            z_asymmetry=v["pulse.z_asymmetry"],
            velocity_amplitude=v["pulse.velocity_amplitude"],
        )

    def solver_config(self) -> SolverConfig:
        v = self.values
        return SolverConfig(
            horizon=v["solver.horizon"],
            step=v["solver.step"],
            lam=v["solver.lam"],
            tol=v["solver.tol"],
            max_sweeps=v["solver.max_sweeps"],
        )

    def cosim_config(self) -> CosimConfig:
        v = self.values
        return CosimConfig(
            extent=v["grid.extent"],
            cells_per_unit=v["grid.cells_per_unit"],
            t_end=v["grid.t_end"],
            cfl=v["grid.cfl"],
            sample_every=v["grid.sample_every"],
        )

    def drive_quadrature(self) -> dict[str, int]:
        v = self.values
        return {
            "n_polar": v["drive.n_polar"],
            "n_azimuth": v["drive.n_azimuth"],
            "particle_radial": v["drive.particle_radial"],
            "particle_polar": v["drive.particle_polar"],
        }

    def render(self) -> str:
        """Effective configuration as sorted ``key = value`` lines."""
        lines = [f"{key} = {self.values[key]}" for key in sorted(self.values)]
        return "\n".join(lines) + "\n"


def load_config(
    path: str | Path | None = None, preset: str | None = None
) -> ScenarioConfig:
    """Build a scenario from an optional preset and an optional file."""
    layers: list[Mapping[str, Any]] = []
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset!r}; available: {sorted(PRESETS)}"
            )
        layers.append(PRESETS[preset])
    if path is not None:
        text = Path(path).read_text()
        layers.append(parse_config_text(text))
    return ScenarioConfig.from_overrides(*layers)
