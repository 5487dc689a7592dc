"""Great-circle geodesy and inverse-distance graph construction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBearing, RangeError

EARTH_RADIUS_KM = 6371.0088
"""IUGG arithmetic mean Earth radius in kilometers."""

CARDINAL_NAMES = (
    "North",
    "Northeast",
    "East",
    "Southeast",
    "South",
    "Southwest",
    "West",
    "Northwest",
)


@dataclass(frozen=True)
class Coordinate:
    """A point on the sphere in signed degrees.

    lon must lie in [-180, 180] and lat in [-90, 90]; both must be finite.
    """

    lon: float
    lat: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lon) and math.isfinite(self.lat)):
            raise RangeError(f"non-finite coordinate ({self.lon}, {self.lat})")
        if not -180.0 <= self.lon <= 180.0:
            raise RangeError(f"longitude {self.lon} outside [-180, 180]")
        if not -90.0 <= self.lat <= 90.0:
            raise RangeError(f"latitude {self.lat} outside [-90, 90]")


@dataclass(frozen=True)
class NodeSet:
    """An ordered collection of uniquely identified coordinates."""

    ids: tuple[str, ...]
    coords: tuple[Coordinate, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "coords", tuple(self.coords))
        if len(self.ids) != len(self.coords):
            raise ValueError(
                f"{len(self.ids)} ids but {len(self.coords)} coordinates"
            )
        if len(self.ids) == 0:
            raise ValueError("node set must contain at least one node")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("node ids must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.ids)

    def coord_of(self, node_id: str) -> Coordinate:
        try:
            return self.coords[self.ids.index(node_id)]
        except ValueError:
            raise KeyError(node_id) from None


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Dense symmetric inverse-distance weights (1/km) with zero diagonal."""

    n: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.shape != (self.n, self.n):
            raise ValueError(f"weights shape {w.shape} != ({self.n}, {self.n})")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("adjacency weights must be finite and non-negative")
        if np.any(np.diag(w) != 0.0):
            raise ValueError("adjacency diagonal must be zero")
        if not np.array_equal(w, w.T):
            raise ValueError("adjacency must be symmetric")


def haversine_km(a: Coordinate, b: Coordinate) -> float:
    """Great-circle distance in kilometers between two coordinates."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = (
        math.sin(dphi / 2.0) ** 2
        + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def initial_bearing_deg(a: Coordinate, b: Coordinate) -> float:
    """Initial great-circle bearing from a to b, clockwise from true north.

    Returns degrees in [0, 360). Raises DegenerateBearing when the two
    coordinates are identical.
    """
    if a == b:
        raise DegenerateBearing(f"bearing undefined from a point to itself: {a}")
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dlam = math.radians(b.lon - a.lon)
    x = math.sin(dlam) * math.cos(phi2)
    y = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(dlam)
    return math.degrees(math.atan2(x, y)) % 360.0


def cardinal_direction(bearing: float) -> str:
    """8-wind compass word for a bearing in degrees.

    Bins are half-open and centered on multiples of 45 degrees, so North
    covers [337.5, 360) and [0, 22.5).
    """
    return CARDINAL_NAMES[int(((bearing + 22.5) % 360.0) // 45.0)]


def build_adjacency(nodes: NodeSet, min_dist_km: float = 0.1) -> AdjacencyMatrix:
    """Inverse-distance adjacency: weights[i][j] = 1 / max(dist, min_dist_km).

    The clamp keeps coincident or near-coincident nodes from producing
    infinite weights. Diagonal entries are zero.
    """
    n = len(nodes)
    if n < 2:
        raise ValueError("adjacency needs at least two nodes")
    if min_dist_km <= 0:
        raise ValueError("min_dist_km must be positive")
    weights = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = max(haversine_km(nodes.coords[i], nodes.coords[j]), min_dist_km)
            weights[i, j] = weights[j, i] = 1.0 / d
    return AdjacencyMatrix(n=n, weights=weights)
