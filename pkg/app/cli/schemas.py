"""
Run document schemas

Quantities are SI: bare numbers in the unit named by the field, or strings "<number> <unit>".
Energies are given as E/h in Hz (or as a temperature in nK/uK via k_B T / h).
"""

import re
from typing import Annotated, Callable, Dict, List, Literal, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator, model_validator
from scipy import constants

SCHEMA_VERSION = 1

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s\d].*?)?\s*$")

LENGTH_UNITS: Dict[str, float] = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9}
TIME_UNITS: Dict[str, float] = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6}
FREQUENCY_UNITS: Dict[str, float] = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6}
TEMPERATURE_UNITS: Dict[str, float] = {"K": 1.0, "mK": 1e-3, "uK": 1e-6, "µK": 1e-6, "nK": 1e-9}

# temperature expressed as E/h in Hz
_KELVIN_TO_HZ = constants.k / constants.h

DIMENSIONS: Dict[str, Dict[str, float]] = {
    "length": LENGTH_UNITS,
    "time": TIME_UNITS,
    "frequency": FREQUENCY_UNITS,
    "energy": {**FREQUENCY_UNITS, **{u: f * _KELVIN_TO_HZ for u, f in TEMPERATURE_UNITS.items()}},
    "temperature": TEMPERATURE_UNITS,
}


def _dimension_of(unit: str) -> Optional[str]:
    for name in ("length", "time", "frequency", "temperature"):
        if unit in DIMENSIONS[name]:
            return name
    return None


def _scale(unit: str, dimension: str) -> float:
    table = DIMENSIONS[dimension]
    if unit in table:
        return table[unit]
    found = _dimension_of(unit)
    if found is None:
        raise ValueError(f"unknown unit '{unit}'")
    raise ValueError(f"unit mismatch: expected {dimension}, got '{unit}' ({found})")


def parse_quantity(value: object, dimension: str) -> float:
    """Number (already in base units) or '<number> <unit>' -> float in base units"""
    if isinstance(value, bool):
        raise ValueError("expected a number or a quantity string")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError("expected a number or a quantity string")
    match = _QUANTITY.match(value)
    if not match:
        raise ValueError(f"cannot parse quantity '{value}'")
    number, unit = float(match.group(1)), (match.group(2) or "").strip()
    if not unit:
        return number
    if dimension == "tilt":
        if "/" not in unit:
            raise ValueError(f"unit mismatch: expected energy/length, got '{unit}'")
        top, bottom = (part.strip() for part in unit.split("/", 1))
        return number * _scale(top, "energy") / _scale(bottom, "length")
    return number * _scale(unit, dimension)


def _quantity(dimension: str) -> Callable[[object], float]:
    def parse(value: object) -> float:
        return parse_quantity(value, dimension)

    return parse


Length = Annotated[float, BeforeValidator(_quantity("length"))]
Time = Annotated[float, BeforeValidator(_quantity("time"))]
Frequency = Annotated[float, BeforeValidator(_quantity("frequency"))]
Energy = Annotated[float, BeforeValidator(_quantity("energy"))]
Tilt = Annotated[float, BeforeValidator(_quantity("tilt"))]
Temperature = Annotated[float, BeforeValidator(_quantity("temperature"))]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class EnergyKeyframe(StrictModel):
    t: Time = Field(ge=0)
    value: Energy = Field(ge=0)


class LengthKeyframe(StrictModel):
    t: Time = Field(ge=0)
    value: Length = Field(ge=0)


class TiltKeyframe(StrictModel):
    t: Time = Field(ge=0)
    value: Tilt


def _check_order(keyframes: List) -> List:
    times = [frame.t for frame in keyframes]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("keyframe times must be non-decreasing")
    return keyframes


class AtomsConfig(StrictModel):
    mass_amu: float = Field(default=86.909180527, gt=0)
    n_bosons: int = Field(ge=2)
    scattering_length: Length = Field(default=5.0e-9, ge=0)
    oscillator_length: Optional[Length] = Field(default=None, gt=0)

    @field_validator("n_bosons")
    @classmethod
    def even_boson_count(cls, v: int) -> int:
        if v % 2:
            raise ValueError("N must be even")
        return v


class TrapConfig(StrictModel):
    axial_frequency: Frequency = Field(gt=0)
    transverse_frequency: Optional[Frequency] = Field(default=None, gt=0)
    barrier_width: Length = Field(gt=0)
    barrier_height: List[EnergyKeyframe] = Field(
        default_factory=lambda: [EnergyKeyframe(t=0.0, value=0.0)], min_length=1
    )
    half_separation: List[LengthKeyframe] = Field(
        default_factory=lambda: [LengthKeyframe(t=0.0, value=0.0)], min_length=1
    )
    tilt: List[TiltKeyframe] = Field(
        default_factory=lambda: [TiltKeyframe(t=0.0, value=0.0)], min_length=1
    )

    @field_validator("barrier_height", "half_separation", "tilt")
    @classmethod
    def ordered_keyframes(cls, v: List) -> List:
        return _check_order(v)


class AxisConfig(StrictModel):
    points: int = Field(default=1, ge=1)
    half_extent: Length = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def active_axis_has_extent(self) -> "AxisConfig":
        if self.points > 1 and self.half_extent <= 0:
            raise ValueError("an axis with more than one point needs a positive half_extent")
        if self.points == 2:
            raise ValueError("an active axis needs at least three points")
        return self


class GridConfig(StrictModel):
    x: AxisConfig = Field(default_factory=AxisConfig)
    y: AxisConfig = Field(default_factory=AxisConfig)
    z: AxisConfig
    boundary: Literal["hard_wall", "periodic"] = "hard_wall"

    @field_validator("z")
    @classmethod
    def axial_axis_active(cls, v: AxisConfig) -> AxisConfig:
        if v.points < 3:
            raise ValueError("the z axis must be resolved")
        return v


class TimeConfig(StrictModel):
    total: Time = Field(ge=0)
    dt: Time = Field(gt=0)

    @model_validator(mode="after")
    def integral_step_count(self) -> "TimeConfig":
        ratio = self.total / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError("total / dt must be an integer")
        return self


class SolverConfig(StrictModel):
    integrator: Literal["euler", "rk4"] = "euler"
    derivative: Literal["forward", "centered"] = "centered"
    inner_tol: float = Field(default=1e-8, gt=0)
    inner_max_iterations: int = Field(default=20, ge=1)
    gpe_tol: float = Field(default=1e-8, gt=0)
    gpe_max_iterations: int = Field(default=2000, ge=1)
    descent_step: float = Field(default=1.0, gt=0)
    freeze_modes: bool = False
    gauge_flip_step: Optional[int] = Field(default=None, ge=0)


class OutputConfig(StrictModel):
    every: int = Field(default=1, ge=1)
    snapshot_every: int = Field(default=0, ge=0)
    emit_g1: bool = False
    checkpoint_every: int = Field(default=0, ge=0)
    record_pathways: bool = False


class RunConfig(StrictModel):
    schema_version: Literal[1]
    label: str = "run"
    atoms: AtomsConfig
    trap: TrapConfig
    grid: GridConfig
    time: TimeConfig
    solver: SolverConfig = Field(default_factory=SolverConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    temperature: Optional[Temperature] = Field(default=None, ge=0)
