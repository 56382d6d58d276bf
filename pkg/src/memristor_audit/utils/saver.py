"""Result saver - writes result files atomically."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import ResultFileError
from ..lang import t
from ..models import CircuitTrace, NoiseRecord

logger = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "t",
    "current",
    "node_voltage",
    "q_a",
    "q_b",
    "emf_power",
    "dissipation_a",
    "dissipation_b",
)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ResultSaver:
    """Writes one experiment's result directory.

    Layout: result.json, meta.json, traces/*.csv, records/*.f64 + *.json,
    and plot CSVs when used by the plot exporter.
    """

    def __init__(self, root: str | os.PathLike[str]):
        self.root = Path(root)
        self.written: list[Path] = []

    def _target(self, relative: str) -> Path:
        return self.root / relative

    def write_text(self, relative: str, text: str) -> Path:
        path = self._target(relative)
        atomic_write_bytes(path, text.encode("utf-8"))
        self.written.append(path)
        logger.debug(t("saver.saved", {"path": str(path)}))
        return path

    def write_json(self, relative: str, payload: Any) -> Path:
        return self.write_text(relative, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def write_csv(self, relative: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([float(v) if isinstance(v, np.floating) else v for v in row])
        return self.write_text(relative, buf.getvalue())

    def write_trace(self, relative: str, trace: CircuitTrace) -> Path:
        columns = [
            trace.time,
            trace.current,
            trace.node_voltage,
            trace.q_a,
            trace.q_b,
            trace.emf_power,
            trace.dissipation_a,
            trace.dissipation_b,
        ]
        return self.write_csv(relative, TRACE_COLUMNS, zip(*(c.tolist() for c in columns)))

    def write_record_csv(self, relative: str, record: NoiseRecord) -> Path:
        rows = ((i, i * record.dt, v) for i, v in enumerate(record.samples.tolist()))
        return self.write_csv(relative, ("index", "t", "value"), rows)

    def write_record_raw(self, stem: str, record: NoiseRecord) -> tuple[Path, Path]:
        """Little-endian float64 samples plus a JSON sidecar header."""
        raw = self._target(f"{stem}.f64")
        atomic_write_bytes(raw, record.samples.astype("<f8").tobytes())
        self.written.append(raw)
        header = self.write_json(f"{stem}.json", record.header())
        return raw, header


def read_record_raw(stem: str | os.PathLike[str]) -> tuple[np.ndarray, dict[str, Any]]:
    """Load a raw record written by ``ResultSaver.write_record_raw``."""
    stem = Path(stem)
    try:
        header = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
        samples = np.fromfile(stem.with_suffix(".f64"), dtype="<f8")
    except (OSError, ValueError) as e:
        raise ResultFileError(f"cannot read raw record {stem}: {e}") from e
    if samples.size != header.get("n_samples", samples.size):
        raise ResultFileError(f"raw record {stem} is truncated")
    return samples, header
