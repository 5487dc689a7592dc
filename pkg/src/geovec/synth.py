"""Synthetic desk-scale datasets with known spatial structure.

The generators here stand in for full-scale rasters and sensor networks:
node attributes and series parameters are smooth functions of coordinates,
so a coordinate-aware representation carries real signal and enhancement
effects can be asserted with margins.
"""

from __future__ import annotations

import hashlib
from datetime import datetime, timedelta, timezone

import numpy as np

from .dataio import TimeSeriesDataset
from .embedding import GeoRepresentation, RffProvider, build_geovec, instruction_only_source
from .geo import Coordinate, NodeSet
from .predict import AttributeVector
from .prompts import PromptVariant, instruction_only


def derive_seed(seed: int, purpose: str) -> int:
    """Independent sub-seed for a named purpose, from one master seed."""
    digest = hashlib.sha256(f"{seed}:{purpose}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def grid_nodes(
    nx: int,
    ny: int,
    lon0: float = -5.0,
    lat0: float = -4.0,
    spacing_deg: float = 0.5,
) -> NodeSet:
    """nx * ny nodes on a regular lon/lat grid, row-major ids."""
    ids = []
    coords = []
    for j in range(ny):
        for i in range(nx):
            ids.append(f"n{j * nx + i:03d}")
            coords.append(Coordinate(lon=lon0 + i * spacing_deg, lat=lat0 + j * spacing_deg))
    return NodeSet(ids=tuple(ids), coords=tuple(coords))


def scattered_nodes(
    n: int,
    seed: int,
    lon_range: tuple[float, float] = (-30.0, 30.0),
    lat_range: tuple[float, float] = (-20.0, 20.0),
    prefix: str = "n",
) -> NodeSet:
    """n nodes uniform over a lon/lat box."""
    rng = np.random.default_rng(seed)
    lons = rng.uniform(*lon_range, size=n)
    lats = rng.uniform(*lat_range, size=n)
    return NodeSet(
        ids=tuple(f"{prefix}{i:04d}" for i in range(n)),
        coords=tuple(Coordinate(lon=float(lo), lat=float(la)) for lo, la in zip(lons, lats)),
    )


def smooth_attribute(nodes: NodeSet, seed: int, noise_sd: float = 0.05) -> AttributeVector:
    """sin(lon/15) + cos(lat/10) plus Gaussian noise; the GP test target."""
    rng = np.random.default_rng(seed)
    lons = np.array([c.lon for c in nodes.coords])
    lats = np.array([c.lat for c in nodes.coords])
    values = np.sin(lons / 15.0) + np.cos(lats / 10.0) + rng.normal(0.0, noise_sd, size=len(nodes))
    return AttributeVector(node_ids=nodes.ids, values=values, name="smooth-synthetic")


def rff_representation(
    nodes: NodeSet,
    dim: int = 256,
    seed: int = 0,
    lengthscale_deg: float = 10.0,
    variant: PromptVariant | None = None,
) -> GeoRepresentation:
    """Coordinate representation through the full build pipeline."""
    variant = variant or instruction_only()
    provider = RffProvider(dim=dim, seed=seed, lengthscale_deg=lengthscale_deg)
    return build_geovec(nodes, provider, variant, instruction_only_source(variant))


def signal_params(
    nodes: NodeSet,
    low_amp: float = 0.1,
    high_amp: float = 1.3,
    steepness: float = 6.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-node amplitude and offset, smooth over the coordinate box.

    The amplitude field is a steep sigmoid of a smooth spatial wave, so it
    plateaus near low_amp (windows drowned in noise) and high_amp (windows
    clearly periodic) with smooth transitions. Short windows from the two
    plateaus can look alike while needing opposite continuations, which is
    exactly the ambiguity a coordinate-aware representation resolves.
    """
    lons = np.array([c.lon for c in nodes.coords])
    lats = np.array([c.lat for c in nodes.coords])
    lon_span = max(lons.max() - lons.min(), 1e-9)
    lat_span = max(lats.max() - lats.min(), 1e-9)
    u = (lons - lons.min()) / lon_span
    v = (lats - lats.min()) / lat_span
    field = np.sin(2.0 * np.pi * u) * np.cos(np.pi * v)
    amplitude = low_amp + (high_amp - low_amp) / (1.0 + np.exp(-steepness * field))
    offset = 1.5 * np.cos(np.pi * u) + 0.8 * np.sin(np.pi * v)
    return amplitude, offset


def geo_signal_series(
    nodes: NodeSet,
    t_steps: int,
    seed: int,
    noise_sd: float = 0.1,
    period: float = 24.0,
) -> TimeSeriesDataset:
    """Hourly sinusoid per node: amplitude(coord) * sin(2 pi t / period) + offset(coord) + noise."""
    amplitude, offset = signal_params(nodes)
    rng = np.random.default_rng(seed)
    t = np.arange(t_steps)
    clean = amplitude[None, :] * np.sin(2.0 * np.pi * t / period)[:, None] + offset[None, :]
    values = clean + rng.normal(0.0, noise_sd, size=clean.shape)
    start = datetime(2020, 1, 1, tzinfo=timezone.utc)
    stamps = tuple(start + timedelta(hours=int(step)) for step in t)
    return TimeSeriesDataset(node_ids=nodes.ids, timestamps=stamps, values=values)


def split_alternating(nodes: NodeSet) -> tuple[NodeSet, NodeSet]:
    """Two disjoint interleaved regions from one pool (even/odd positions)."""
    even = [(nid, c) for i, (nid, c) in enumerate(zip(nodes.ids, nodes.coords)) if i % 2 == 0]
    odd = [(nid, c) for i, (nid, c) in enumerate(zip(nodes.ids, nodes.coords)) if i % 2 == 1]
    return (
        NodeSet(ids=tuple(n for n, _ in even), coords=tuple(c for _, c in even)),
        NodeSet(ids=tuple(n for n, _ in odd), coords=tuple(c for _, c in odd)),
    )


def subset_series(ds: TimeSeriesDataset, node_ids: tuple[str, ...]) -> TimeSeriesDataset:
    """Column subset of a dataset, keeping timestamps."""
    pos = {nid: i for i, nid in enumerate(ds.node_ids)}
    cols = [pos[nid] for nid in node_ids]
    return TimeSeriesDataset(
        node_ids=tuple(node_ids),
        timestamps=ds.timestamps,
        values=ds.values[:, cols],
    )


def write_nodes_csv(nodes: NodeSet, path) -> None:
    lines = ["id,lon,lat"]
    for nid, coord in zip(nodes.ids, nodes.coords):
        lines.append(f"{nid},{float(coord.lon)!r},{float(coord.lat)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_attribute_csv(attr: AttributeVector, path) -> None:
    lines = ["id,value"]
    for nid, value in zip(attr.node_ids, attr.values):
        lines.append(f"{nid},{float(value)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_timeseries_csv(ds: TimeSeriesDataset, path) -> None:
    lines = ["timestamp," + ",".join(ds.node_ids)]
    for ts, row in zip(ds.timestamps, ds.values):
        stamp = ts.isoformat().replace("+00:00", "Z")
        lines.append(stamp + "," + ",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
