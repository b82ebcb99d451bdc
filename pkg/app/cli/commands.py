"""
Subcommand implementations

Each command returns an exit status and writes its report as JSON to `stream` (stdout).
Errors propagate as AppError subclasses; the entry point maps them to exit codes.
"""

import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, TextIO

import numpy as np

from app.basis.oracle import verify_basis
from app.cli.loader import effective_config, load_config, to_sim_config, unit_system
from app.cli.schemas import RunConfig
from app.cli.writers import RunWriter, load_checkpoint
from app.core.config import settings
from app.core.errors import EXIT_NUMERICAL, EXIT_OK, NumericalError
from app.core.logging import get_logger, new_run_id
from app.dynamics.evolve import SimConfig, SimState, memory_estimate, observe, restore_state, run
from app.observables.correlation import natural_occupations, spin_expectations
from app.observables.validity import validity_check
from app.trap.hubbard import hubbard_estimate

logger = get_logger(__name__)

SEEDLESS_STEPS = 3


def _emit(report: Dict[str, Any], stream: Optional[TextIO]) -> None:
    out = stream if stream is not None else sys.stdout
    out.write(json.dumps(report, indent=2, default=str) + "\n")


def _summary(config: SimConfig, state: SimState, output_dir: Path, run_id: str) -> Dict[str, Any]:
    record = observe(config, state)
    occupations = natural_occupations(state.amplitudes)
    spins = spin_expectations(state.amplitudes)
    return {
        "run_id": run_id,
        "label": config.label,
        "output": str(output_dir),
        "steps": state.step,
        "t": state.t,
        "n2": record.n2,
        "energy": record.energy,
        "chemical_potential": record.chemical_potential,
        "condensate_fraction": occupations.condensate_fraction,
        "fragmented": occupations.fragmented,
        "spin": {"sx": spins.sx, "sy": spins.sy, "sz": spins.sz},
    }


def check_determinism(config: SimConfig, steps: int = SEEDLESS_STEPS) -> None:
    """Run the first steps twice and require bitwise-identical states"""
    stop = min(steps, config.n_steps)
    first = run(config, stop_step=stop)
    second = run(config, stop_step=stop)
    same = np.array_equal(first.amplitudes.b, second.amplitudes.b) and np.array_equal(
        first.modes.phi, second.modes.phi
    )
    if not same:
        raise NumericalError(
            "Repeated runs differ",
            details={"steps": stop, "max_amplitude_difference": float(np.abs(first.amplitudes.b - second.amplitudes.b).max())},
        )
    logger.info("run.deterministic", steps=stop)


def _finish(writer: RunWriter, state: SimState) -> None:
    writer.checkpoint(state)
    writer.write_pathways(state)


def run_command(
    config_path: str,
    output: Optional[str] = None,
    overrides: Sequence[str] = (),
    seedless: bool = False,
    stream: Optional[TextIO] = None,
) -> int:
    run_config = load_config(config_path, overrides)
    run_id = new_run_id(run_config.label)
    config = to_sim_config(run_config)
    output_dir = Path(output) if output else Path(settings.output_root) / run_config.label
    logger.info("run.started", config=config_path, output=str(output_dir), steps=config.n_steps)

    if seedless:
        check_determinism(config)

    with RunWriter(output_dir, config.n_bosons) as writer:
        writer.write_config(effective_config(run_config))
        final = run(config, writer)
        _finish(writer, final)

    _emit(_summary(config, final, output_dir, run_id), stream)
    return EXIT_OK


def resume_command(
    config_path: str,
    checkpoint: str,
    output: Optional[str] = None,
    overrides: Sequence[str] = (),
    stream: Optional[TextIO] = None,
) -> int:
    run_config = load_config(config_path, overrides)
    run_id = new_run_id(run_config.label)
    config = to_sim_config(run_config)
    state = restore_state(config, load_checkpoint(checkpoint))
    output_dir = Path(output) if output else Path(checkpoint).parent
    logger.info("run.resumed", checkpoint=checkpoint, step=state.step, steps=config.n_steps)

    with RunWriter(output_dir, config.n_bosons, resume_from=state.t) as writer:
        final = run(config, writer, initial=state)
        _finish(writer, final)

    _emit(_summary(config, final, output_dir, run_id), stream)
    return EXIT_OK


def estimate_report(run_config: RunConfig) -> Dict[str, Any]:
    """J/U, regime, validity margins and memory counts without evolving anything"""
    units = unit_system(run_config, report=True)
    config = to_sim_config(run_config, report=True)
    scattering = run_config.atoms.scattering_length / units.oscillator_length
    d = config.trap.half_separation.peak
    params = hubbard_estimate(config.trap, config.grid, d, scattering)
    validity = validity_check(
        run_config.atoms.n_bosons,
        run_config.temperature,
        units.oscillator_length,
        run_config.atoms.scattering_length,
        units.omega0,
    )
    memory = memory_estimate(config)
    return {
        "label": run_config.label,
        "hubbard": {
            "J": params.J,
            "J_orthogonal": params.J_orthogonal,
            "U": params.U,
            "overlap": params.overlap,
            "ratio": params.ratio,
            "closed_form_ratio": params.closed_form_ratio,
            "regime": params.regime,
            "half_separation": d,
            "barrier_height": params.extras["barrier_height"],
        },
        "validity": validity.as_dict(),
        "memory": {"simultaneous": memory.simultaneous, "trajectory": memory.trajectory},
        "g": config.g,
        "units": units.as_dict(),
    }


def estimate_command(
    config_path: str, overrides: Sequence[str] = (), stream: Optional[TextIO] = None
) -> int:
    run_config = load_config(config_path, overrides)
    new_run_id(run_config.label)
    _emit(estimate_report(run_config), stream)
    return EXIT_OK


def verify_command(max_n: Optional[int] = None, stream: Optional[TextIO] = None) -> int:
    new_run_id("verify")
    largest = settings.verify_max_n if max_n is None else max_n
    report = verify_basis(range(2, largest + 1, 2))
    _emit(report.as_dict(), stream)
    if not report.passed:
        logger.error("verify.failed", max_n=largest)
        return EXIT_NUMERICAL
    return EXIT_OK
