"""CSV and JSON persistence for fields, error series, fits and contour grids.

All text output uses LF line endings and '.' decimal separators.  Float cells
are written with repr(), which round-trips float64 exactly; integer count
cells are written as plain integers.  Field CSVs carry a JSON sidecar
(<stem>.meta.json) describing how the data was produced, so a reader can
reconstruct the right container type without guessing.

Field CSV layout: header ``t,z,phi1,phi2,phi3,phi4`` then one row per
reachable site, t-major with z ascending over the parity sublattice
(z = -t..t in steps of 2).  Contour CSVs (``t,z,value``) instead emit the
full rectangular grid including the off-parity zeros, which is what contour
plotters want.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .analysis import ErrorSeries, SlopeFit
from .lattice import FieldSet, SampleFieldSet

__all__ = [
    "meta_path",
    "write_json",
    "read_json",
    "write_fields_csv",
    "read_fields_csv",
    "write_series_csv",
    "read_series_csv",
    "write_fit_csv",
    "write_contour_csv",
]

_FIELDS_HEADER = ["t", "z", "phi1", "phi2", "phi3", "phi4"]


def meta_path(path) -> Path:
    """Sidecar location for a fields CSV: <stem>.meta.json next to it."""
    p = Path(path)
    return p.with_name(p.stem + ".meta.json")


def write_json(path, obj) -> None:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _open_writer(path):
    handle = open(path, "w", encoding="utf-8", newline="")
    return handle, csv.writer(handle, lineterminator="\n")


def write_fields_csv(path, fields, meta: dict | None = None) -> list[Path]:
    """Write one field container; returns the files created (CSV + sidecar).

    `meta` entries are merged into the sidecar on top of the structural keys
    (kind, t_max, and pair count for samples).
    """
    is_sample = isinstance(fields, SampleFieldSet)
    side = {"kind": "sample" if is_sample else "exact", "t_max": fields.t_max}
    if is_sample:
        side["n_pairs"] = fields.pairs
    if meta:
        side.update(meta)
    path = Path(path)
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(_FIELDS_HEADER)
        off = fields.z_offset
        for t in range(fields.t_max + 1):
            for z in range(-t, t + 1, 2):
                row = fields.data[:, t, z + off]
                if is_sample:
                    cells = [str(int(v)) for v in row]
                else:
                    cells = [repr(float(v)) for v in row]
                writer.writerow([str(t), str(z)] + cells)
    side_file = meta_path(path)
    write_json(side_file, side)
    return [path, side_file]


def read_fields_csv(path):
    """Rebuild a FieldSet or SampleFieldSet (as per sidecar) from CSV."""
    path = Path(path)
    side = read_json(meta_path(path))
    t_max = int(side["t_max"])
    is_sample = side.get("kind") == "sample"
    dtype = np.int64 if is_sample else np.float64
    data = np.zeros((4, t_max + 1, 2 * t_max + 1), dtype=dtype)
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != _FIELDS_HEADER:
            raise ValueError(f"unexpected fields header {header!r} in {path}")
        for row in reader:
            t, z = int(row[0]), int(row[1])
            for i in range(4):
                data[i, t, z + t_max] = dtype(row[2 + i])
    if is_sample:
        return SampleFieldSet(data, pairs=int(side["n_pairs"]))
    return FieldSet(data)


def write_series_csv(path, series: ErrorSeries) -> list[Path]:
    """Error series rows ``n,t,i,E`` in stored order."""
    path = Path(path)
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["n", "t", "i", "E"])
        for n, t, i, e in series.entries:
            writer.writerow([str(int(n)), str(int(t)), str(int(i)), repr(float(e))])
    return [path]


def read_series_csv(path) -> ErrorSeries:
    entries = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["n", "t", "i", "E"]:
            raise ValueError(f"unexpected series header {header!r} in {path}")
        for row in reader:
            entries.append((int(row[0]), int(row[1]), int(row[2]), float(row[3])))
    return ErrorSeries(entries)


def write_fit_csv(path, fit: SlopeFit) -> list[Path]:
    """Single-row fit summary ``n,slope,intercept`` (n = points fitted)."""
    path = Path(path)
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["n", "slope", "intercept"])
        writer.writerow([str(int(fit.n_points)), repr(float(fit.slope)),
                         repr(float(fit.intercept))])
    return [path]


def write_contour_csv(path, grid: np.ndarray) -> list[Path]:
    """Full-rectangle grid rows ``t,z,value`` for one field index.

    `grid` has shape (t_max + 1, 2 * t_max + 1) as returned by contour_grid;
    off-parity entries are zero and included deliberately.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 2 or grid.shape[1] != 2 * (grid.shape[0] - 1) + 1:
        raise ValueError(f"grid shape {grid.shape} is not (t+1, 2t+1)")
    t_max = grid.shape[0] - 1
    path = Path(path)
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["t", "z", "value"])
        for t in range(t_max + 1):
            for z in range(-t_max, t_max + 1):
                writer.writerow([str(t), str(z), repr(float(grid[t, z + t_max]))])
    return [path]
