"""Deterministic CSV exchange of sampled fields.

Scalar schema: lon_deg,lat_deg,value. Vector schema:
lon_deg,lat_deg,vx,vy,vz. Values are written with 17 significant digits
(lossless for float64), rows in grid index order, decimal point '.', UTF-8,
newline-delimited. A leading comment line carries the grid construction
parameters so a load can rebuild the exact grid; files without it load as
bare samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SphericalCap
from .quadrature import (
    KIND_BOUNDARY,
    KIND_CAP,
    KIND_SPHERE,
    FieldSamples,
    QuadratureGrid,
    build_boundary_grid,
    build_cap_grid,
    build_sphere_grid,
)

_SCALAR_HEADER = "lon_deg,lat_deg,value"
_VECTOR_HEADER = "lon_deg,lat_deg,vx,vy,vz"


class CsvFormatError(ValueError):
    """Malformed field CSV (schema, finiteness, or node problems)."""


@dataclass(frozen=True)
class LoadedField:
    """Samples read from CSV, with the rebuilt grid when metadata allows."""

    lons: np.ndarray
    lats: np.ndarray
    values: np.ndarray
    metadata: dict
    samples: FieldSamples | None


def _lonlat_of(nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lon = np.degrees(np.arctan2(nodes[:, 1], nodes[:, 0]))
    lat = np.degrees(np.arcsin(np.clip(nodes[:, 2], -1.0, 1.0)))
    return lon, lat


def _format(x: float) -> str:
    return format(float(x), ".17g")


def _grid_metadata(grid: QuadratureGrid) -> dict:
    # cap centers stored as exact components: lossless and bit-stable on
    # reload, unlike a degree round trip
    meta = {"kind": grid.kind}
    if grid.kind == KIND_SPHERE:
        meta.update(nt=grid.shape[0], nphi=grid.shape[1])
        return meta
    cx, cy, cz = (float(c) for c in grid.cap.center)
    if grid.kind == KIND_CAP:
        meta.update(nt=grid.shape[0], nphi=grid.shape[1])
    else:
        meta.update(m=grid.shape[0])
    meta.update(cx=cx, cy=cy, cz=cz, rho=grid.cap.radius)
    return meta


def _rebuild_grid(meta: dict) -> QuadratureGrid | None:
    kind = meta.get("kind")
    try:
        if kind == KIND_SPHERE:
            return build_sphere_grid(int(meta["nt"]), int(meta["nphi"]))
        center = np.array(
            [float(meta["cx"]), float(meta["cy"]), float(meta["cz"])]
        )
        cap = SphericalCap(center, float(meta["rho"]))
        if kind == KIND_CAP:
            return build_cap_grid(cap, int(meta["nt"]), int(meta["nphi"]))
        if kind == KIND_BOUNDARY:
            return build_boundary_grid(cap, int(meta["m"]))
    except (KeyError, ValueError):
        return None
    return None


def save_field_csv(path, samples: FieldSamples) -> None:
    """Write samples in grid index order; lossless and reproducible."""
    grid = samples.grid
    lon, lat = _lonlat_of(grid.nodes)
    vector = samples.values.ndim == 2
    meta = _grid_metadata(grid)
    meta_line = "# grid " + " ".join(f"{k}={_meta_value(v)}" for k, v in meta.items())
    lines = [meta_line, _VECTOR_HEADER if vector else _SCALAR_HEADER]
    for i in range(len(grid)):
        cells = [_format(lon[i]), _format(lat[i])]
        if vector:
            cells.extend(_format(v) for v in samples.values[i])
        else:
            cells.append(_format(samples.values[i]))
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _meta_value(v) -> str:
    return _format(v) if isinstance(v, float) else str(v)


def load_field_csv(path) -> LoadedField:
    """Parse a field CSV; rejects malformed rows, non-finite values, and
    duplicate nodes. Returns grid-attached samples when the metadata line is
    present and consistent with the rows."""
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    meta: dict = {}
    lines = list(raw)
    if lines and lines[0].startswith("# grid"):
        for token in lines[0][len("# grid") :].split():
            key, _, val = token.partition("=")
            meta[key] = val
        lines = lines[1:]
    if not lines:
        raise CsvFormatError("empty file")
    header = lines[0].strip()
    if header == _SCALAR_HEADER:
        width, vector = 3, False
    elif header == _VECTOR_HEADER:
        width, vector = 5, True
    else:
        raise CsvFormatError(f"unrecognized header {header!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != width:
            raise CsvFormatError(f"row {lineno}: expected {width} columns")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise CsvFormatError(f"row {lineno}: {exc}") from None
        if not all(np.isfinite(rows[-1])):
            raise CsvFormatError(f"row {lineno}: non-finite value")
    data = np.array(rows, dtype=float).reshape(len(rows), width)
    lons, lats = data[:, 0], data[:, 1]
    pairs = {(lo, la) for lo, la in zip(lons, lats)}
    if len(pairs) != len(rows):
        raise CsvFormatError("duplicate nodes")
    values = data[:, 2:] if vector else data[:, 2]
    grid = _rebuild_grid(meta) if meta else None
    samples = None
    if grid is not None and len(grid) == len(rows):
        glon, glat = _lonlat_of(grid.nodes)
        if np.abs(glon - lons).max() < 1e-9 and np.abs(glat - lats).max() < 1e-9:
            samples = FieldSamples(grid, values)
    return LoadedField(lons, lats, values, meta, samples)
