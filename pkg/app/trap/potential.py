"""
Trapping Potential

Time-dependent axial double well in oscillator units (hbar = m = omega0 = 1):

    V = 1/2 w_perp^2 (x^2 + y^2) + 1/2 (|z| - d(t))^2 + V_B(t) exp(-z^2 / 2 sigma^2) + eps(t) z

With d = V_B = 0 this is a single harmonic well. Barrier height, half separation and tilt
follow piecewise-linear ramps over [0, T].
"""

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from app.trap.grid import Grid


@dataclass(frozen=True)
class Ramp:
    """Piecewise-linear schedule through (t, value) keyframes, held constant outside"""

    times: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("Ramp needs matching, non-empty keyframe times and values")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("Ramp keyframe times must be non-decreasing")

    @classmethod
    def constant(cls, value: float) -> "Ramp":
        return cls(times=(0.0,), values=(float(value),))

    @classmethod
    def from_keyframes(cls, keyframes: Sequence[Tuple[float, float]]) -> "Ramp":
        return cls(
            times=tuple(float(t) for t, _ in keyframes),
            values=tuple(float(v) for _, v in keyframes),
        )

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))

    @property
    def peak(self) -> float:
        return max(self.values)


@dataclass(frozen=True)
class TrapSpec:
    omega_perp: float = 1.0
    barrier_width: float = 0.5
    barrier_height: Ramp = field(default_factory=lambda: Ramp.constant(0.0))
    half_separation: Ramp = field(default_factory=lambda: Ramp.constant(0.0))
    tilt: Ramp = field(default_factory=lambda: Ramp.constant(0.0))

    def is_static(self) -> bool:
        return all(
            len(set(ramp.values)) == 1
            for ramp in (self.barrier_height, self.half_separation, self.tilt)
        )


def well_potential(
    r: Tuple[np.ndarray, np.ndarray, np.ndarray],
    omega_perp: float,
    half_separation: float,
    barrier_height: float,
    barrier_width: float,
    tilt: float,
) -> np.ndarray:
    x, y, z = r
    transverse = 0.5 * omega_perp**2 * (x**2 + y**2)
    axial = 0.5 * (np.abs(z) - half_separation) ** 2
    barrier = barrier_height * np.exp(-(z**2) / (2 * barrier_width**2))
    return transverse + axial + barrier + tilt * z


def potential(spec: TrapSpec, r: Tuple[np.ndarray, np.ndarray, np.ndarray], t: float) -> np.ndarray:
    """V(r, t) in units of hbar omega0"""
    return well_potential(
        r,
        omega_perp=spec.omega_perp,
        half_separation=spec.half_separation(t),
        barrier_height=spec.barrier_height(t),
        barrier_width=spec.barrier_width,
        tilt=spec.tilt(t),
    )


def potential_on_grid(spec: TrapSpec, grid: Grid, t: float) -> np.ndarray:
    """
    V sampled on the grid. Reduced axes sit at coordinate 0, so their harmonic term
    drops out and the transverse ground-state energy is left out of the field.
    """
    return potential(spec, grid.mesh, t)
