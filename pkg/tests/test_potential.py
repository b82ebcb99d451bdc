import numpy as np
import pytest

from app.trap.potential import Ramp, TrapSpec, potential, potential_on_grid, well_potential


class TestRamp:
    def test_interpolates_and_holds(self):
        ramp = Ramp.from_keyframes([(0.0, 0.0), (1.0, 10.0), (3.0, 10.0), (4.0, 0.0)])
        assert ramp(0.5) == pytest.approx(5.0)
        assert ramp(2.0) == 10.0
        assert ramp(-1.0) == 0.0
        assert ramp(9.0) == 0.0
        assert ramp.peak == 10.0

    def test_constant(self):
        assert Ramp.constant(2.5)(123.0) == 2.5

    def test_rejects_decreasing_times(self):
        with pytest.raises(ValueError):
            Ramp(times=(1.0, 0.0), values=(0.0, 1.0))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Ramp(times=(), values=())


def test_single_well_limit(line_grid):
    v = potential_on_grid(TrapSpec(), line_grid, 0.0)
    _, _, z = line_grid.mesh
    assert np.allclose(v, 0.5 * z**2)


def test_double_well_symmetry(line_grid, double_well):
    v = potential_on_grid(double_well, line_grid, 0.0)[0, 0]
    assert np.allclose(v, v[::-1])
    assert v[80] == pytest.approx(4.0 + 0.5 * 2.0**2)  # z = 0


def test_tilt_is_odd(line_grid):
    spec = TrapSpec(tilt=Ramp.constant(0.3), barrier_height=Ramp.constant(1.0))
    v = potential_on_grid(spec, line_grid, 0.0)[0, 0]
    _, _, z = line_grid.mesh
    assert np.allclose(v - v[::-1], 2 * 0.3 * z[0, 0])


def test_transverse_term():
    r = (np.array([1.0]), np.array([2.0]), np.array([0.0]))
    v = well_potential(r, omega_perp=2.0, half_separation=0.0, barrier_height=0.0, barrier_width=1.0, tilt=0.0)
    assert v[0] == pytest.approx(0.5 * 4.0 * 5.0)


def test_ramp_schedule_in_time():
    spec = TrapSpec(barrier_height=Ramp.from_keyframes([(0.0, 0.0), (2.0, 8.0)]))
    r = (np.zeros(1), np.zeros(1), np.zeros(1))
    assert potential(spec, r, 1.0)[0] == pytest.approx(4.0)
    assert not spec.is_static()
    assert TrapSpec().is_static()
