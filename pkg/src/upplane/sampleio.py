"""SampleSet files: raw float32 row-major payload with a JSON sidecar, or CSV."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import CorruptHeader, TruncatedData, UnsupportedFormat
from .numstats import as_samples


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_samples(path, samples) -> None:
    """Write ``samples`` as ``<path>`` (f32 payload) plus ``<path>.json``."""
    x = as_samples(samples)
    n, d = x.shape
    Path(path).write_bytes(x.astype("<f4").tobytes(order="C"))
    sidecar_path(path).write_text(json.dumps({"n": n, "d": d, "dtype": "f32"}))


def _read_sidecar(path) -> tuple[int, int]:
    try:
        meta = json.loads(sidecar_path(path).read_text())
        n, d, dtype = int(meta["n"]), int(meta["d"]), meta["dtype"]
    except FileNotFoundError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptHeader(f"bad sample sidecar for {path}: {exc}") from exc
    if dtype != "f32":
        raise UnsupportedFormat(f"sample dtype {dtype!r} is not supported (only f32)")
    if n < 1 or d < 1:
        raise CorruptHeader(f"sidecar declares an empty set ({n}x{d})")
    return n, d


def read_samples(path) -> np.ndarray:
    """Read a sample set written by :func:`write_samples`, or a CSV file.

    CSV files hold one sample per row, comma separated, with no header.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return as_samples(np.loadtxt(path, delimiter=",", ndmin=2))
    n, d = _read_sidecar(path)
    raw = path.read_bytes()
    if len(raw) < 4 * n * d:
        raise TruncatedData(f"{path}: expected {4 * n * d} bytes, found {len(raw)}")
    if len(raw) > 4 * n * d:
        raise CorruptHeader(f"{path}: payload is longer than the sidecar declares")
    return as_samples(np.frombuffer(raw, dtype="<f4").reshape(n, d).astype(float))


def write_samples_csv(path, samples) -> None:
    x = as_samples(samples)
    with open(path, "w", newline="") as fh:
        for row in x:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
