"""Canonical on-disk formats.

Matrices are CSV with a header row of ages and a leading column of years;
reals use 17 significant digits and missing values are empty cells.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile

import numpy as np

from .lattice import LexisLattice


def _cell(v):
    return "" if not np.isfinite(v) else format(float(v), ".17g")


def format_matrix_csv(matrix, lattice: LexisLattice) -> str:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != lattice.shape:
        raise ValueError(f"matrix {matrix.shape} does not match lattice {lattice.shape}")
    lines = [",".join(["year", *(str(a) for a in lattice.ages)])]
    for year, row in zip(lattice.years, matrix):
        lines.append(",".join([str(year), *(_cell(v) for v in row)]))
    return "\n".join(lines) + "\n"


def write_matrix_csv(path, matrix, lattice: LexisLattice):
    atomic_write_text(path, format_matrix_csv(matrix, lattice))


def read_matrix_csv(path):
    """Return ``(matrix, years, ages)``; empty cells become NaN."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    ages = np.array([int(a) for a in rows[0][1:]])
    years = np.array([int(r[0]) for r in rows[1:]])
    matrix = np.array([[float(v) if v != "" else np.nan for v in r[1:]] for r in rows[1:]])
    return matrix, years, ages


def lattice_metadata(lattice: LexisLattice, **extra) -> dict:
    meta = {
        "n_years": lattice.n_years,
        "n_ages": lattice.n_ages,
        "year_origin": lattice.year_origin,
        "age_origin": lattice.age_origin,
        "first_year": int(lattice.years[0]),
        "last_year": int(lattice.years[-1]),
        "first_age": int(lattice.ages[0]),
        "last_age": int(lattice.ages[-1]),
    }
    meta.update(extra)
    return meta


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_pgm(path, matrix):
    """Grayscale binary PGM heatmap (black = min). Missing cells are black.

    Returns the ``(min, max)`` used for scaling.
    """
    m = np.asarray(matrix, dtype=np.float64)
    finite = np.isfinite(m)
    lo = float(m[finite].min()) if finite.any() else 0.0
    hi = float(m[finite].max()) if finite.any() else 0.0
    span = hi - lo if hi > lo else 1.0
    pixels = np.zeros(m.shape, dtype=np.uint8)
    pixels[finite] = np.rint((m[finite] - lo) / span * 255).astype(np.uint8)
    # Rows are ages (oldest on top), columns are years.
    img = pixels.T[::-1]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())
    return lo, hi


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
