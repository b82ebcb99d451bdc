"""
Shared fixtures: grids, traps, single-particle modes and run documents
"""

import textwrap

import numpy as np
import pytest

from app.dynamics.densities import ModePair
from app.trap.eigenmodes import single_particle_modes
from app.trap.grid import Axis, Grid
from app.trap.potential import Ramp, TrapSpec

SEED = 20240611


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


@pytest.fixture
def line_grid() -> Grid:
    """1D hard-wall grid, spacing 0.1"""
    return Grid.line(161, 8.0)


@pytest.fixture
def small_grid() -> Grid:
    return Grid.line(41, 6.0)


@pytest.fixture
def plane_grid() -> Grid:
    return Grid(x=Axis(1), y=Axis(21, 5.0), z=Axis(25, 6.0))


@pytest.fixture
def harmonic_trap() -> TrapSpec:
    return TrapSpec()


@pytest.fixture
def double_well() -> TrapSpec:
    return TrapSpec(
        barrier_width=0.5,
        barrier_height=Ramp.constant(4.0),
        half_separation=Ramp.constant(2.0),
    )


@pytest.fixture
def harmonic_modes(line_grid: Grid, harmonic_trap: TrapSpec) -> ModePair:
    eigen = single_particle_modes(harmonic_trap, line_grid, 0.0, 2)
    return ModePair(grid=line_grid, phi=eigen.modes.astype(np.complex128))


@pytest.fixture
def run_document() -> str:
    """Static single well, no interactions, five steps"""
    return textwrap.dedent(
        """
        schema_version: 1
        label: smoke
        atoms:
          n_bosons: 4
          scattering_length: 0 nm
        trap:
          axial_frequency: 58 Hz
          barrier_width: 0.5 um
        grid:
          z: {points: 61, half_extent: 6 um}
        time:
          total: 0.5 ms
          dt: 0.1 ms
        """
    )


@pytest.fixture
def run_document_path(tmp_path, run_document):
    path = tmp_path / "run.yaml"
    path.write_text(run_document, encoding="utf-8")
    return path
