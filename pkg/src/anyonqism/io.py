"""Serialization helpers: complex matrices, spectra, and atomic JSON/CSV writes."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

MATRIX_FORMAT = "anyonqism.matrix/1"
BASIS_ORDER = "sites L..1 left to right; local index 1 first; lexicographic product basis"


def cpair(z) -> list[float]:
    z = complex(z)
    # normalise negative zero so equal values always print identically
    return [float(z.real) + 0.0, float(z.imag) + 0.0]


def matrix_to_json(a: np.ndarray) -> dict:
    """Dense complex matrix as ``{format, shape, data}`` with ``data[i][j] = [re, im]``."""
    a = np.asarray(a, dtype=complex)
    return {
        "format": MATRIX_FORMAT,
        "shape": list(a.shape),
        "data": [[cpair(x) for x in row] for row in a],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    if obj.get("format") != MATRIX_FORMAT:
        raise ValueError(f"not a {MATRIX_FORMAT} document")
    data = np.asarray(obj["data"], dtype=float)
    out = data[..., 0] + 1j * data[..., 1]
    if list(out.shape) != list(obj["shape"]):
        raise ValueError("shape field disagrees with data")
    return out


def spectrum_record(model, spectrum, source: str | None = None) -> dict:
    return {
        "model": model.kind,
        "params": model.params(),
        "source": source or spectrum.source,
        "basis": BASIS_ORDER,
        "sector": None if spectrum.sector is None else list(spectrum.sector),
        "eigenvalues": [cpair(x) for x in spectrum.eigenvalues],
    }


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def dumps_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, float):
        return repr(x + 0.0)
    if isinstance(x, (np.floating,)):
        return repr(float(x) + 0.0)
    return x


def atomic_write(path: str | os.PathLike, text: str | bytes) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(text, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
