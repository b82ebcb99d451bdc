"""
Run output

timeseries.csv and amplitudes.csv are buffered CSV (floats as repr-exact '.17g'); field snapshots
are flat little-endian binaries with a text sidecar; checkpoints are numpy .npz archives.
"""

import csv
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import OutputError
from app.core.logging import get_logger
from app.dynamics.evolve import SimState, StepRecord, checkpoint_payload
from app.observables.correlation import pathway_contributions

logger = get_logger(__name__)

TIMESERIES_COLUMNS = (
    "t",
    "n2",
    "energy",
    "chemical_potential",
    "inner_iterations",
    "norm_residual",
    "x12_re",
    "x12_im",
)


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _truncate_after(path: Path, t: float) -> None:
    """Drop rows written after time `t` by an interrupted run"""
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    kept = rows[:1] + [row for row in rows[1:] if row and float(row[0]) <= t]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        csv.writer(handle, lineterminator="\n").writerows(kept)


class ChunkedCSVWriter:
    """Buffers rows and writes them in chunks"""

    def __init__(self, path: Path, header: Sequence[str], buffer_size: int = 1000, append: bool = False):
        self.path = path
        self.buffer_size = buffer_size
        self.buffer: List[List[str]] = []
        resume = append and path.exists()
        self._file = open(path, "a" if resume else "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._file, lineterminator="\n")
        if not resume:
            self._writer.writerow(header)

    def write_row(self, row: Sequence[Any]) -> None:
        self.buffer.append([_cell(value) for value in row])
        if len(self.buffer) >= self.buffer_size:
            self.flush()

    def flush(self) -> None:
        if self.buffer:
            self._writer.writerows(self.buffer)
            self.buffer = []
        self._file.flush()

    def close(self) -> None:
        if self._file.closed:
            return
        self.flush()
        self._file.close()


def write_field(path: Path, values: np.ndarray, t: float, step: int) -> None:
    """
    Raw little-endian binary plus a `.hdr` sidecar. Complex fields are 64-bit floats
    interleaved (re, im); real fields are plain 64-bit floats.
    """
    values = np.asarray(values)
    if np.iscomplexobj(values):
        data, dtype = values.astype("<c16"), "complex128 little-endian interleaved re/im"
    else:
        data, dtype = values.astype("<f8"), "float64 little-endian"
    data.tofile(path)
    header = [
        f"dtype: {dtype}",
        f"shape: {' '.join(str(n) for n in values.shape)}",
        "order: C",
        f"t: {t:.17g}",
        f"step: {step}",
    ]
    path.with_suffix(".hdr").write_text("\n".join(header) + "\n", encoding="utf-8")


def read_field(path: Path) -> np.ndarray:
    meta = {}
    for line in path.with_suffix(".hdr").read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition(":")
        meta[key.strip()] = value.strip()
    shape = tuple(int(n) for n in meta["shape"].split())
    dtype = "<c16" if meta["dtype"].startswith("complex") else "<f8"
    return np.fromfile(path, dtype=dtype).reshape(shape)


def load_checkpoint(path: str) -> Dict[str, np.ndarray]:
    try:
        with np.load(path, allow_pickle=False) as archive:
            return {name: archive[name] for name in archive.files}
    except (OSError, ValueError) as exc:
        raise OutputError("Cannot read checkpoint", details={"path": path, "error": str(exc)}) from exc


class RunWriter:
    """File sink for one run directory"""

    def __init__(
        self,
        output_dir: Path,
        n_bosons: int,
        resume_from: Optional[float] = None,
        checkpoint_name: Optional[str] = None,
    ):
        self.output_dir = Path(output_dir)
        self.checkpoint_path = self.output_dir / (checkpoint_name or settings.checkpoint_name)
        h = n_bosons // 2
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            timeseries = self.output_dir / "timeseries.csv"
            amplitudes = self.output_dir / "amplitudes.csv"
            if resume_from is not None:
                for path in (timeseries, amplitudes):
                    if path.exists():
                        _truncate_after(path, resume_from)
            append = resume_from is not None
            self.timeseries = ChunkedCSVWriter(timeseries, TIMESERIES_COLUMNS, append=append)
            self.amplitudes = ChunkedCSVWriter(
                amplitudes, ["t"] + [f"p_{k}" for k in range(-h, h + 1)], append=append
            )
        except OSError as exc:
            raise OutputError(
                "Cannot open run output", details={"path": str(self.output_dir), "error": str(exc)}
            ) from exc

    def __enter__(self) -> "RunWriter":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()

    def record(self, state: SimState, record: StepRecord) -> None:
        try:
            self.timeseries.write_row(
                [
                    record.t,
                    record.n2,
                    record.energy,
                    record.chemical_potential,
                    record.inner_iterations,
                    record.norm_residual,
                    record.x12.real,
                    record.x12.imag,
                ]
            )
            self.amplitudes.write_row([record.t, *record.probabilities])
        except OSError as exc:
            raise OutputError("Cannot write run output", details={"error": str(exc)}) from exc

    def snapshot(self, state: SimState, fields: Dict[str, np.ndarray]) -> None:
        try:
            for name, values in fields.items():
                write_field(self.output_dir / f"{name}_{state.step:06d}.bin", values, state.t, state.step)
        except OSError as exc:
            raise OutputError("Cannot write snapshot", details={"step": state.step, "error": str(exc)}) from exc

    def checkpoint(self, state: SimState) -> None:
        # write-then-rename
        staging = self.checkpoint_path.with_name(self.checkpoint_path.stem + ".partial.npz")
        try:
            self.flush()
            np.savez(staging, **checkpoint_payload(state))
            os.replace(staging, self.checkpoint_path)
        except OSError as exc:
            raise OutputError("Cannot write checkpoint", details={"step": state.step, "error": str(exc)}) from exc
        logger.info("writer.checkpoint", step=state.step, path=str(self.checkpoint_path))

    def write_pathways(self, state: SimState) -> None:
        if state.pathways is None:
            return
        contributions = pathway_contributions(state.pathways.first, state.pathways.second)
        h = state.amplitudes.n_bosons // 2
        path = self.output_dir / "pathways.csv"
        try:
            writer = ChunkedCSVWriter(path, ["k_final", "k_mid", "re", "im"])
            for n, row in enumerate(contributions):
                for m, value in enumerate(row):
                    writer.write_row([n - h, m - h, float(value.real), float(value.imag)])
            writer.close()
        except OSError as exc:
            raise OutputError("Cannot write pathways", details={"error": str(exc)}) from exc

    def write_config(self, effective: Dict[str, Any]) -> None:
        try:
            (self.output_dir / "config.json").write_text(
                json.dumps(effective, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
        except OSError as exc:
            raise OutputError("Cannot write effective config", details={"error": str(exc)}) from exc

    def flush(self) -> None:
        self.timeseries.flush()
        self.amplitudes.flush()

    def close(self) -> None:
        self.timeseries.close()
        self.amplitudes.close()
