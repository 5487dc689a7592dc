"""Desk-scale dataset ingestion: CSV loaders, ASCII rasters, time splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import (
    AllNoData,
    DuplicateId,
    MissingValue,
    NonMonotonicTimestamps,
    OutOfBounds,
    ParseError,
    RangeError,
    TooShort,
)
from .geo import Coordinate, NodeSet
from .predict import AttributeVector


@dataclass(frozen=True)
class RasterGrid:
    """North-up regular grid read from an ESRI ASCII file."""

    ncols: int
    nrows: int
    xllcorner: float
    yllcorner: float
    cellsize: float
    nodata: float
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.nrows, self.ncols):
            raise ValueError(f"values shape {v.shape} != ({self.nrows}, {self.ncols})")
        if self.cellsize <= 0:
            raise ValueError("cellsize must be positive")


@dataclass(frozen=True)
class TimeSeriesDataset:
    """Dense multivariate series: values[t, i] is node i at timestamp t."""

    node_ids: tuple[str, ...]
    timestamps: tuple[datetime, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (len(self.timestamps), len(self.node_ids)):
            raise ValueError(
                f"values shape {v.shape} != ({len(self.timestamps)}, {len(self.node_ids)})"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("time series values must be finite")
        for a, b in zip(self.timestamps, self.timestamps[1:]):
            if b <= a:
                raise NonMonotonicTimestamps(f"timestamp {b} does not follow {a}")

    def __len__(self) -> int:
        return len(self.timestamps)


def load_nodes_csv(path: str | Path) -> NodeSet:
    """Read a node table with header ``id,lon,lat``."""
    ids: list[str] = []
    coords: list[Coordinate] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "lon", "lat"]:
            raise ParseError(f"{path}: expected header 'id,lon,lat', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            node_id = row[0].strip()
            if not node_id:
                raise ParseError(f"{path}:{lineno}: empty node id")
            if node_id in seen:
                raise DuplicateId(f"{path}:{lineno}: duplicate node id {node_id!r}")
            seen.add(node_id)
            try:
                lon, lat = float(row[1]), float(row[2])
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: {e}") from e
            try:
                coords.append(Coordinate(lon=lon, lat=lat))
            except RangeError as e:
                raise RangeError(f"{path}:{lineno}: {e}") from e
            ids.append(node_id)
    if not ids:
        raise ParseError(f"{path}: no node rows")
    return NodeSet(ids=tuple(ids), coords=tuple(coords))


def _parse_rfc3339(text: str) -> datetime:
    return datetime.fromisoformat(text.replace("Z", "+00:00"))


def load_timeseries_csv(path: str | Path) -> TimeSeriesDataset:
    """Read a series table with header ``timestamp,<id1>,<id2>,...``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2 or header[0].strip() != "timestamp":
            raise ParseError(f"{path}: expected header 'timestamp,<id1>,...', got {header}")
        node_ids = [h.strip() for h in header[1:]]
        if len(set(node_ids)) != len(node_ids):
            raise DuplicateId(f"{path}: duplicate column ids in header")
        timestamps: list[datetime] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(node_ids) + 1:
                raise ParseError(
                    f"{path}:{lineno}: expected {len(node_ids) + 1} fields, got {len(row)}"
                )
            try:
                ts = _parse_rfc3339(row[0].strip())
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: bad timestamp {row[0]!r}: {e}") from e
            if timestamps and ts <= timestamps[-1]:
                raise NonMonotonicTimestamps(
                    f"{path}:{lineno}: timestamp {row[0]} not after previous row"
                )
            values = []
            for col, cell in enumerate(row[1:], start=2):
                cell = cell.strip()
                if cell == "":
                    raise MissingValue(f"{path}:{lineno}: empty cell in column {col}")
                try:
                    values.append(float(cell))
                except ValueError as e:
                    raise ParseError(f"{path}:{lineno}: column {col}: {e}") from e
            timestamps.append(ts)
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return TimeSeriesDataset(
        node_ids=tuple(node_ids),
        timestamps=tuple(timestamps),
        values=np.array(rows),
    )


def load_attribute_csv(path: str | Path, name: str | None = None) -> AttributeVector:
    """Read a label table with header ``id,value``."""
    ids: list[str] = []
    values: list[float] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "value"]:
            raise ParseError(f"{path}: expected header 'id,value', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            node_id = row[0].strip()
            if node_id in seen:
                raise DuplicateId(f"{path}:{lineno}: duplicate node id {node_id!r}")
            seen.add(node_id)
            try:
                values.append(float(row[1]))
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: {e}") from e
            ids.append(node_id)
    if not ids:
        raise ParseError(f"{path}: no rows")
    return AttributeVector(node_ids=tuple(ids), values=np.array(values), name=name or Path(path).stem)


_RASTER_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def load_raster_ascii(path: str | Path) -> RasterGrid:
    """Read an ESRI ASCII grid (6-line header, then north-up rows)."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    header: dict[str, float] = {}
    row_start = 0
    for lineno, line in enumerate(text):
        parts = line.split()
        if len(parts) == 2 and parts[0].lower() in _RASTER_HEADER_KEYS:
            try:
                header[parts[0].lower()] = float(parts[1])
            except ValueError as e:
                raise ParseError(f"{path}:{lineno + 1}: {e}") from e
            row_start = lineno + 1
        else:
            break
    missing = [k for k in _RASTER_HEADER_KEYS if k not in header]
    if missing:
        raise ParseError(f"{path}: raster header missing {missing}")
    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    cells: list[list[float]] = []
    for lineno, line in enumerate(text[row_start:], start=row_start + 1):
        if not line.strip():
            continue
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError as e:
            raise ParseError(f"{path}:{lineno}: {e}") from e
        if len(row) != ncols:
            raise ParseError(f"{path}:{lineno}: expected {ncols} cells, got {len(row)}")
        cells.append(row)
    if len(cells) != nrows:
        raise ParseError(f"{path}: expected {nrows} rows, got {len(cells)}")
    return RasterGrid(
        ncols=ncols,
        nrows=nrows,
        xllcorner=header["xllcorner"],
        yllcorner=header["yllcorner"],
        cellsize=header["cellsize"],
        nodata=header["nodata_value"],
        values=np.array(cells),
    )


def save_raster_ascii(grid: RasterGrid, path: str | Path) -> None:
    lines = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {float(grid.xllcorner)!r}",
        f"yllcorner {float(grid.yllcorner)!r}",
        f"cellsize {float(grid.cellsize)!r}",
        f"NODATA_value {float(grid.nodata)!r}",
    ]
    for row in grid.values:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def sample_raster(grid: RasterGrid, coord: Coordinate, k: int = 12) -> float:
    """Mean of the k pixels whose centers are nearest to the coordinate.

    Distances are Euclidean in degree space, ties break by row-major pixel
    index, and nodata pixels among the selected k are excluded from the
    mean. Raises OutOfBounds outside the grid, AllNoData when every
    selected pixel is nodata.
    """
    lon, lat = coord.lon, coord.lat
    if not (
        grid.xllcorner <= lon <= grid.xllcorner + grid.ncols * grid.cellsize
        and grid.yllcorner <= lat <= grid.yllcorner + grid.nrows * grid.cellsize
    ):
        raise OutOfBounds(f"({lat}, {lon}) outside raster bounds")
    cols = grid.xllcorner + (np.arange(grid.ncols) + 0.5) * grid.cellsize
    rows = grid.yllcorner + (grid.nrows - np.arange(grid.nrows) - 0.5) * grid.cellsize
    d2 = (rows[:, None] - lat) ** 2 + (cols[None, :] - lon) ** 2
    order = np.lexsort((np.arange(d2.size), d2.ravel()))
    nearest = order[: min(k, d2.size)]
    chosen = grid.values.ravel()[nearest]
    usable = chosen[chosen != grid.nodata]
    if usable.size == 0:
        raise AllNoData(f"all {len(nearest)} nearest pixels are nodata")
    return float(usable.mean())


def chronological_split(
    ds: TimeSeriesDataset,
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2),
    min_length: int = 0,
) -> tuple[TimeSeriesDataset, TimeSeriesDataset, TimeSeriesDataset]:
    """Contiguous train/val/test split at floors of the cumulative ratios.

    min_length (typically history + horizon) guards against splits too
    short to hold a single forecasting window.
    """
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be positive and sum to 1, got {ratios}")
    t = len(ds)
    n1 = int(t * ratios[0])
    n2 = int(t * (ratios[0] + ratios[1]))
    bounds = [(0, n1), (n1, n2), (n2, t)]
    parts = []
    for lo, hi in bounds:
        if hi - lo < max(min_length, 1):
            raise TooShort(
                f"split [{lo}:{hi}] has {hi - lo} steps, needs at least {max(min_length, 1)}"
            )
        parts.append(
            TimeSeriesDataset(
                node_ids=ds.node_ids,
                timestamps=ds.timestamps[lo:hi],
                values=ds.values[lo:hi],
            )
        )
    return parts[0], parts[1], parts[2]
