"""
Run document loading

YAML text -> validated RunConfig (all violations at once) -> SimConfig in oscillator units.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import yaml
from pydantic import ValidationError
from scipy import constants

from app.cli.schemas import RunConfig
from app.core.errors import ConfigError, OutputError
from app.core.logging import get_logger
from app.dynamics.evolve import SimConfig
from app.trap.grid import Axis, Grid
from app.trap.potential import Ramp, TrapSpec

logger = get_logger(__name__)


@dataclass(frozen=True)
class UnitSystem:
    """SI scales of the oscillator units"""

    mass: float  # kg
    axial_frequency: float  # Hz
    oscillator_length: float  # m

    @property
    def omega0(self) -> float:
        return 2 * np.pi * self.axial_frequency

    @property
    def energy(self) -> float:
        """hbar omega0 in joules"""
        return constants.hbar * self.omega0

    def as_dict(self) -> Dict[str, float]:
        return {
            "mass_kg": self.mass,
            "axial_frequency_hz": self.axial_frequency,
            "omega0_rad_s": self.omega0,
            "oscillator_length_m": self.oscillator_length,
            "energy_unit_j": self.energy,
            "time_unit_s": 1.0 / self.omega0,
        }


def _violations(exc: ValidationError) -> List[Dict[str, str]]:
    return [
        {"loc": ".".join(str(part) for part in error["loc"]), "msg": error["msg"]}
        for error in exc.errors()
    ]


def _set_path(document: Dict[str, Any], dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    node: Any = document
    for position, part in enumerate(parts):
        last = position == len(parts) - 1
        if isinstance(node, list):
            if not part.isdigit() or int(part) >= len(node):
                raise ConfigError(
                    "Override path does not exist",
                    details={"violations": [{"loc": dotted, "msg": f"bad list index '{part}'"}]},
                )
            if last:
                node[int(part)] = value
            else:
                node = node[int(part)]
        elif isinstance(node, dict):
            if last:
                node[part] = value
            else:
                node = node.setdefault(part, {})
        else:
            raise ConfigError(
                "Override path does not exist",
                details={"violations": [{"loc": dotted, "msg": f"'{part}' is below a scalar"}]},
            )


def apply_overrides(document: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply KEY=VALUE patches with dotted keys; values parse as YAML scalars"""
    violations = []
    for override in overrides:
        key, sep, raw = override.partition("=")
        if not sep or not key.strip():
            violations.append({"loc": override, "msg": "override must look like KEY=VALUE"})
            continue
        _set_path(document, key.strip(), yaml.safe_load(raw))
    if violations:
        raise ConfigError("Invalid override", details={"violations": violations})
    return document


def parse_config(text: str, overrides: Sequence[str] = ()) -> RunConfig:
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(
            "Run document is not valid YAML",
            details={"violations": [{"loc": "document", "msg": str(exc)}]},
        ) from exc
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError(
            "Run document must be a mapping",
            details={"violations": [{"loc": "document", "msg": "expected key-value pairs"}]},
        )
    apply_overrides(document, overrides)
    try:
        return RunConfig.model_validate(document)
    except ValidationError as exc:
        violations = _violations(exc)
        logger.warning("config.invalid", violations=len(violations))
        raise ConfigError("Invalid run document", details={"violations": violations}) from exc


def load_config(path: str, overrides: Sequence[str] = ()) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError("Cannot read run document", details={"path": path, "error": str(exc)}) from exc
    return parse_config(text, overrides)


def unit_system(config: RunConfig, report: bool = False) -> UnitSystem:
    """
    Oscillator units of the run. With `report`, an explicit oscillator_length replaces the
    mass-derived one (estimates quoted against a nominal length scale).
    """
    mass = config.atoms.mass_amu * constants.atomic_mass
    frequency = config.trap.axial_frequency
    length = np.sqrt(constants.hbar / (mass * 2 * np.pi * frequency))
    if report and config.atoms.oscillator_length is not None:
        length = config.atoms.oscillator_length
    return UnitSystem(mass=mass, axial_frequency=frequency, oscillator_length=float(length))


def coupling_constant(config: RunConfig, units: UnitSystem) -> float:
    """4 pi a_s / a0, reduced by 1/(sqrt(2 pi) a_perp) for each integrated-out transverse axis"""
    omega_ratio = (config.trap.transverse_frequency or config.trap.axial_frequency) / units.axial_frequency
    g = 4 * np.pi * config.atoms.scattering_length / units.oscillator_length
    a_perp = np.sqrt(1.0 / omega_ratio)
    for axis in (config.grid.x, config.grid.y):
        if axis.points == 1:
            g /= np.sqrt(2 * np.pi) * a_perp
    return float(g)


def to_sim_config(config: RunConfig, report: bool = False) -> SimConfig:
    units = unit_system(config, report)
    a0, f0, w0 = units.oscillator_length, units.axial_frequency, units.omega0
    trap = config.trap

    def axis(spec) -> Axis:
        return Axis(points=spec.points, half_extent=spec.half_extent / a0)

    grid = Grid(
        x=axis(config.grid.x), y=axis(config.grid.y), z=axis(config.grid.z), boundary=config.grid.boundary
    )
    spec = TrapSpec(
        omega_perp=(trap.transverse_frequency or f0) / f0,
        barrier_width=trap.barrier_width / a0,
        barrier_height=Ramp.from_keyframes([(k.t * w0, k.value / f0) for k in trap.barrier_height]),
        half_separation=Ramp.from_keyframes([(k.t * w0, k.value / a0) for k in trap.half_separation]),
        tilt=Ramp.from_keyframes([(k.t * w0, k.value * a0 / f0) for k in trap.tilt]),
    )
    solver, output = config.solver, config.output
    return SimConfig(
        n_bosons=config.atoms.n_bosons,
        total_time=config.time.total * w0,
        dt=config.time.dt * w0,
        grid=grid,
        trap=spec,
        g=coupling_constant(config, units),
        integrator=solver.integrator,
        derivative=solver.derivative,
        inner_tol=solver.inner_tol,
        inner_max_iterations=solver.inner_max_iterations,
        gpe_tol=solver.gpe_tol,
        gpe_max_iterations=solver.gpe_max_iterations,
        descent_step=solver.descent_step,
        freeze_modes=solver.freeze_modes,
        gauge_flip_step=solver.gauge_flip_step,
        every=output.every,
        snapshot_every=output.snapshot_every,
        emit_g1=output.emit_g1,
        checkpoint_every=output.checkpoint_every,
        record_pathways=output.record_pathways,
        label=config.label,
    )


def effective_config(config: RunConfig) -> Dict[str, Any]:
    """Echo of the validated document with defaults filled, in base SI units"""
    return config.model_dump(mode="json")


def load_sim_config(
    path: str, overrides: Sequence[str] = (), report: bool = False
) -> Tuple[RunConfig, SimConfig]:
    run_config = load_config(path, overrides)
    return run_config, to_sim_config(run_config, report)


__all__ = [
    "UnitSystem",
    "apply_overrides",
    "coupling_constant",
    "effective_config",
    "load_config",
    "load_sim_config",
    "parse_config",
    "to_sim_config",
    "unit_system",
]
