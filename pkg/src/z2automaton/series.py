"""Ensemble-averaged observable tables and their on-disk form.

A SeriesTable is the common currency between the simulation modules and
the fitting/plotting layers: strictly increasing x, per-point mean,
standard error and sample count, plus a metadata dict carrying the full
run configuration and a provenance string.  CSV bodies are written with
repr-roundtripping floats so identical runs are byte-identical.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

AXES = ("time", "subsystem_size", "chord_length")
CSV_HEADER = "x,mean,stderr,n"


@dataclass
class SeriesTable:
    axis: str
    x: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        self.x = np.asarray(self.x, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)
        self.n = np.asarray(self.n, dtype=np.int64)
        if not (self.x.shape == self.mean.shape == self.stderr.shape == self.n.shape):
            raise ValueError("column length mismatch")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("x must be strictly increasing")
        if np.any(self.n <= 0):
            raise ValueError("sample counts must be positive")
        if np.any(self.stderr < 0):
            raise ValueError("standard errors must be nonnegative")

    def __len__(self) -> int:
        return self.x.size

    def window(self, lo: float, hi: float) -> "SeriesTable":
        m = (self.x >= lo) & (self.x <= hi)
        return SeriesTable(self.axis, self.x[m], self.mean[m],
                           self.stderr[m], self.n[m], dict(self.metadata))

    # -- persistence -----------------------------------------------------

    def csv_body(self) -> str:
        lines = [CSV_HEADER]
        for xi, mi, si, ni in zip(self.x, self.mean, self.stderr, self.n):
            lines.append(f"{_fmt(xi)},{_fmt(mi)},{_fmt(si)},{int(ni)}")
        return "\n".join(lines) + "\n"

    def write(self, csv_path: str) -> None:
        """Write CSV plus a .json sidecar with the metadata, atomically."""
        _atomic_write(csv_path, self.csv_body())
        sidecar = {"axis": self.axis, **self.metadata}
        _atomic_write(_sidecar_path(csv_path),
                      json.dumps(sidecar, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, csv_path: str) -> "SeriesTable":
        with open(csv_path) as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise ValueError(f"unexpected CSV header {header!r}")
            rows = [line.strip().split(",") for line in fh if line.strip()]
        data = np.array([[float(v) for v in row] for row in rows], dtype=float)
        if data.size == 0:
            data = data.reshape(0, 4)
        meta_path = _sidecar_path(csv_path)
        metadata: dict = {}
        axis = "time"
        if os.path.exists(meta_path):
            with open(meta_path) as fh:
                metadata = json.load(fh)
            axis = metadata.pop("axis", "time")
        return cls(axis, data[:, 0], data[:, 1], data[:, 2],
                   data[:, 3].astype(np.int64), metadata)


def _fmt(v: float) -> str:
    return repr(float(v))


def _sidecar_path(csv_path: str) -> str:
    base, _ = os.path.splitext(csv_path)
    return base + ".json"


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def mean_stderr(samples: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and standard error of the mean along an axis."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[axis]
    mean = samples.mean(axis=axis)
    if n < 2:
        return mean, np.zeros_like(mean)
    sd = samples.std(axis=axis, ddof=1)
    return mean, sd / np.sqrt(n)
