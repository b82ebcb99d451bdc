import csv
from dataclasses import replace

import numpy as np
import pytest

from app.cli.writers import (
    TIMESERIES_COLUMNS,
    ChunkedCSVWriter,
    RunWriter,
    load_checkpoint,
    read_field,
    write_field,
)
from app.core.errors import OutputError
from app.dynamics.evolve import SimConfig, run
from app.trap.potential import Ramp, TrapSpec


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


@pytest.fixture
def tiny_config(small_grid) -> SimConfig:
    return SimConfig(
        n_bosons=4,
        total_time=0.5,
        dt=0.05,
        grid=small_grid,
        trap=TrapSpec(tilt=Ramp.constant(0.1)),
        freeze_modes=True,
        integrator="rk4",
        every=2,
        record_pathways=True,
    )


class TestChunkedCSV:
    def test_buffers_until_flush(self, tmp_path):
        path = tmp_path / "rows.csv"
        writer = ChunkedCSVWriter(path, ["a", "b"], buffer_size=3)
        writer.write_row([1, 0.1])
        writer.write_row([2, 0.2])
        assert len(read_rows(path)) <= 1
        writer.write_row([3, 0.3])
        assert len(read_rows(path)) == 4
        writer.close()
        writer.close()

    def test_floats_round_trip_exactly(self, tmp_path):
        path = tmp_path / "rows.csv"
        value = 1 / 3
        writer = ChunkedCSVWriter(path, ["x"])
        writer.write_row([value])
        writer.close()
        assert float(read_rows(path)[1][0]) == value
        assert path.read_bytes().count(b"\r") == 0

    def test_append_keeps_header_once(self, tmp_path):
        path = tmp_path / "rows.csv"
        first = ChunkedCSVWriter(path, ["x"])
        first.write_row([1])
        first.close()
        second = ChunkedCSVWriter(path, ["x"], append=True)
        second.write_row([2])
        second.close()
        assert read_rows(path) == [["x"], ["1"], ["2"]]


class TestFields:
    def test_complex_field(self, tmp_path, rng):
        values = rng.normal(size=(2, 1, 1, 7)) + 1j * rng.normal(size=(2, 1, 1, 7))
        path = tmp_path / "modes_000003.bin"
        write_field(path, values, 0.25, 3)
        assert path.stat().st_size == values.size * 16
        header = path.with_suffix(".hdr").read_text(encoding="utf-8").splitlines()
        assert header[1] == "shape: 2 1 1 7"
        assert header[-1] == "step: 3"
        assert np.array_equal(read_field(path), values)

    def test_real_field(self, tmp_path):
        values = np.linspace(0, 1, 12).reshape(1, 3, 4)
        path = tmp_path / "density_000000.bin"
        write_field(path, values, 0.0, 0)
        assert path.with_suffix(".hdr").read_text(encoding="utf-8").startswith("dtype: float64")
        assert np.array_equal(read_field(path), values)


class TestRunWriter:
    def test_run_outputs(self, tmp_path, tiny_config):
        out = tmp_path / "run"
        with RunWriter(out, tiny_config.n_bosons) as writer:
            final = run(tiny_config, writer)
            writer.checkpoint(final)
            writer.write_pathways(final)
            writer.write_config({"label": "tiny"})

        series = read_rows(out / "timeseries.csv")
        assert tuple(series[0]) == TIMESERIES_COLUMNS
        assert [float(row[0]) for row in series[1:]] == pytest.approx([0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
        amplitudes = read_rows(out / "amplitudes.csv")
        assert amplitudes[0] == ["t", "p_-2", "p_-1", "p_0", "p_1", "p_2"]
        assert sum(float(p) for p in amplitudes[-1][1:]) == pytest.approx(1.0)

        pathways = read_rows(out / "pathways.csv")
        assert pathways[0] == ["k_final", "k_mid", "re", "im"]
        assert len(pathways) == 1 + 25
        summed = {}
        for k_final, _, re, im in pathways[1:]:
            summed[int(k_final)] = summed.get(int(k_final), 0) + complex(float(re), float(im))
        assert np.allclose([summed[k] for k in range(-2, 3)], final.amplitudes.b, atol=1e-12)

        payload = load_checkpoint(str(out / "checkpoint.npz"))
        assert int(payload["step"]) == 10
        assert np.array_equal(payload["b"], final.amplitudes.b)
        assert not (out / "checkpoint.partial.npz").exists()
        assert (out / "config.json").read_text(encoding="utf-8").startswith("{")

    def test_resume_truncates_later_rows(self, tmp_path, tiny_config):
        out = tmp_path / "run"
        with RunWriter(out, tiny_config.n_bosons) as writer:
            run(tiny_config, writer)
        with RunWriter(out, tiny_config.n_bosons, resume_from=0.2) as writer:
            pass
        times = [float(row[0]) for row in read_rows(out / "timeseries.csv")[1:]]
        assert times == pytest.approx([0.0, 0.1, 0.2])
        assert len(read_rows(out / "amplitudes.csv")) == 4

    def test_snapshots(self, tmp_path, tiny_config):
        out = tmp_path / "run"
        with RunWriter(out, tiny_config.n_bosons) as writer:
            run(replace(tiny_config, snapshot_every=5), writer)
        assert sorted(p.name for p in out.glob("modes_*.bin")) == [
            "modes_000000.bin",
            "modes_000005.bin",
            "modes_000010.bin",
        ]
        assert read_field(out / "density_000010.bin").shape == tiny_config.grid.shape

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        with pytest.raises(OutputError):
            RunWriter(blocker / "run", 4)

    def test_bad_checkpoint(self, tmp_path):
        path = tmp_path / "broken.npz"
        path.write_text("not an archive", encoding="utf-8")
        with pytest.raises(OutputError):
            load_checkpoint(str(path))
        with pytest.raises(OutputError):
            load_checkpoint(str(tmp_path / "absent.npz"))
