"""Clients for reverse geocoding and nearby-place search.

Two upstream services are supported: a Nominatim-style reverse geocoder
(GET, JSON) and an Overpass-style place search (POST, OverpassQL). Every
live response is cached on disk before parsing, keyed by a canonical hash
of the query, and an offline fixture mode serves committed responses from
the same keys so tests never touch the network.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlencode, urlparse

import requests

from .errors import (
    CacheCorrupt,
    FixtureMiss,
    NoAddressFound,
    UpstreamUnavailable,
)
from .geo import Coordinate, cardinal_direction, haversine_km, initial_bearing_deg

DEFAULT_GEOCODE_URL = "https://nominatim.openstreetmap.org/reverse"
DEFAULT_OVERPASS_URL = "https://overpass-api.de/api/interpreter"
ENV_GEOCODE_URL = "GEOVEC_GEOCODE_URL"
ENV_OVERPASS_URL = "GEOVEC_OVERPASS_URL"

USER_AGENT = "geovec/0.1 (embedding toolkit; batch size 1)"

KIND_POI = "poi"
KIND_STREET = "street"

# Address keys that are codes rather than place names.
_SKIPPED_ADDRESS_KEYS = ("country_code",)

# A named node counts as a point of interest when it carries any of these.
_POI_TAG_KEYS = ("amenity", "shop", "tourism", "leisure")


@dataclass(frozen=True)
class GeocodeResult:
    """Ordered address components, most local first."""

    components: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(tuple(c) for c in self.components))
        if not self.components:
            raise ValueError("geocode result needs at least one component")

    @property
    def display(self) -> str:
        return ", ".join(value for _, value in self.components)


@dataclass(frozen=True)
class PlaceOfInterest:
    """A named nearby place with its offset from the queried coordinate."""

    name: str
    coord: Coordinate
    distance_km: float
    bearing_deg: float
    direction: str
    kind: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("place name must be non-empty")
        if self.kind not in (KIND_POI, KIND_STREET):
            raise ValueError(f"unknown place kind {self.kind!r}")


@dataclass(frozen=True)
class CacheEntry:
    key: str
    body: bytes
    fetched_at: float


def canonical_key(endpoint: str, params: dict[str, str]) -> str:
    """Stable hex key for a query; identical queries always collide."""
    canon = endpoint + "?" + urlencode(sorted(params.items()))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def reverse_key(coord: Coordinate) -> str:
    return canonical_key(
        "reverse",
        {"format": "json", "lat": f"{coord.lat:.6f}", "lon": f"{coord.lon:.6f}"},
    )


def places_key(coord: Coordinate, radius_km: float) -> str:
    return canonical_key(
        "overpass",
        {
            "lat": f"{coord.lat:.6f}",
            "lon": f"{coord.lon:.6f}",
            "radius_m": str(int(round(radius_km * 1000))),
        },
    )


class RateLimiter:
    """Spaces requests to each host at least ``min_interval_s`` apart.

    Clock and sleep are injectable so tests can assert the spacing without
    waiting on wall time.
    """

    def __init__(
        self,
        min_interval_s: float = 1.0,
        now=time.monotonic,
        sleep=time.sleep,
    ) -> None:
        self.min_interval_s = min_interval_s
        self._now = now
        self._sleep = sleep
        self._lock = threading.Lock()
        self._reserved: dict[str, float] = {}

    def acquire(self, host: str) -> None:
        with self._lock:
            t = self._now()
            last = self._reserved.get(host)
            wait = 0.0 if last is None else max(0.0, last + self.min_interval_s - t)
            self._reserved[host] = t + wait
        if wait > 0.0:
            self._sleep(wait)


class ResponseCache:
    """Append-only directory cache: one file per key, filename = key hex."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._master = threading.Lock()
        self._inflight: dict[str, threading.Lock] = {}

    def path_for(self, key: str) -> Path:
        return self.root / key

    def get(self, key: str) -> bytes | None:
        path = self.path_for(key)
        if not path.exists():
            return None
        try:
            return path.read_bytes()
        except OSError as e:
            raise CacheCorrupt(f"cannot read cache entry {key}: {e}") from e

    def put(self, key: str, body: bytes) -> None:
        path = self.path_for(key)
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(body)
        tmp.replace(path)

    def entry(self, key: str) -> CacheEntry:
        body = self.get(key)
        if body is None:
            raise KeyError(key)
        return CacheEntry(key=key, body=body, fetched_at=self.path_for(key).stat().st_mtime)

    def lookup_or_fetch(self, key: str, fetcher) -> bytes:
        """Return the cached body, or fetch, persist and return it.

        Concurrent callers with the same key share a single fetch
        (single-flight); fetcher errors propagate and nothing is cached.
        """
        body = self.get(key)
        if body is not None:
            return body
        with self._master:
            lock = self._inflight.setdefault(key, threading.Lock())
        with lock:
            body = self.get(key)
            if body is not None:
                return body
            body = fetcher()
            self.put(key, body)
            return body


class FixtureSource:
    """Committed offline responses, keyed like the live cache."""

    def __init__(self, entries: dict[str, bytes]) -> None:
        self._entries = entries

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureSource":
        records = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls({r["query_key"]: r["body"].encode("utf-8") for r in records})

    def get(self, key: str) -> bytes:
        try:
            return self._entries[key]
        except KeyError:
            raise FixtureMiss(f"no fixture for query key {key}") from None


def parse_reverse_response(body: bytes) -> GeocodeResult:
    """Parse a Nominatim-style reverse geocoding body.

    The address object is kept in upstream order, which runs from the most
    local component to the most national one; code-like keys are skipped.
    """
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise UpstreamUnavailable(f"unparseable geocoding response: {e}") from e
    address = doc.get("address") if isinstance(doc, dict) else None
    if not address:
        raise NoAddressFound("reverse geocoding returned no address")
    components = [
        (key, str(value))
        for key, value in address.items()
        if key not in _SKIPPED_ADDRESS_KEYS and not key.startswith("ISO3166")
    ]
    if not components:
        raise NoAddressFound("address object carried no usable components")
    return GeocodeResult(components=tuple(components))


def _place_from_element(origin: Coordinate, name: str, lon: float, lat: float, kind: str) -> PlaceOfInterest:
    coord = Coordinate(lon=lon, lat=lat)
    distance = haversine_km(origin, coord)
    if coord == origin:
        bearing = 0.0
    else:
        bearing = initial_bearing_deg(origin, coord)
    return PlaceOfInterest(
        name=name,
        coord=coord,
        distance_km=distance,
        bearing_deg=bearing,
        direction=cardinal_direction(bearing),
        kind=kind,
    )


def parse_places_response(
    body: bytes,
    origin: Coordinate,
    radius_km: float,
    k: int,
) -> list[PlaceOfInterest]:
    """Parse an Overpass-style ``elements`` body into ranked places.

    Named nodes tagged with any point-of-interest key are preferred; when
    none fall within the radius, named highway ways stand in (streets).
    Duplicate names keep their nearest occurrence, ranking is by distance
    with lexicographic names breaking ties, and at most k entries return.
    """
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise UpstreamUnavailable(f"unparseable place-search response: {e}") from e
    pois: list[PlaceOfInterest] = []
    streets: list[PlaceOfInterest] = []
    for el in doc.get("elements", []):
        tags = el.get("tags") or {}
        name = tags.get("name")
        if not name:
            continue
        if el.get("type") == "node" and any(key in tags for key in _POI_TAG_KEYS):
            if "lat" in el and "lon" in el:
                pois.append(_place_from_element(origin, name, el["lon"], el["lat"], KIND_POI))
        elif el.get("type") == "way" and "highway" in tags:
            center = el.get("center") or {}
            if "lat" in center and "lon" in center:
                streets.append(
                    _place_from_element(origin, name, center["lon"], center["lat"], KIND_STREET)
                )

    def ranked(places: list[PlaceOfInterest]) -> list[PlaceOfInterest]:
        inside = [p for p in places if p.distance_km <= radius_km]
        inside.sort(key=lambda p: (p.distance_km, p.name))
        seen: set[str] = set()
        unique = []
        for p in inside:
            if p.name not in seen:
                seen.add(p.name)
                unique.append(p)
        return unique[:k]

    chosen = ranked(pois)
    if chosen:
        return chosen
    return ranked(streets)


def overpass_query(coord: Coordinate, radius_km: float) -> str:
    r = int(round(radius_km * 1000))
    at = f"around:{r},{coord.lat:.6f},{coord.lon:.6f}"
    lines = ["[out:json][timeout:60];", "("]
    for key in _POI_TAG_KEYS:
        lines.append(f'  node({at})["name"]["{key}"];')
    lines.append(f'  way({at})["highway"]["name"];')
    lines.append(");")
    lines.append("out center;")
    return "\n".join(lines)


class OsmClient:
    """Cached, rate-limited access to the two map services.

    offline=True (the default) serves every query from the fixture file
    and never opens a connection; live mode caches responses on disk and
    keeps at least one second between requests to the same host.
    """

    def __init__(
        self,
        cache_dir: str | Path,
        offline: bool = True,
        fixtures: FixtureSource | None = None,
        geocode_url: str | None = None,
        overpass_url: str | None = None,
        rate_limiter: RateLimiter | None = None,
        session: requests.Session | None = None,
        timeout_s: float = 30.0,
    ) -> None:
        self.cache = ResponseCache(cache_dir)
        self.offline = offline
        self.fixtures = fixtures
        self.geocode_url = geocode_url or os.environ.get(ENV_GEOCODE_URL, DEFAULT_GEOCODE_URL)
        self.overpass_url = overpass_url or os.environ.get(ENV_OVERPASS_URL, DEFAULT_OVERPASS_URL)
        self.rate_limiter = rate_limiter or RateLimiter()
        self.session = session or requests.Session()
        self.timeout_s = timeout_s

    def _resolve(self, source: str | None) -> str:
        if source is None:
            return "fixture" if self.offline else "live"
        if source not in ("live", "fixture"):
            raise ValueError(f"unknown source {source!r}")
        return source

    def _http(self, url: str, do_request) -> bytes:
        self.rate_limiter.acquire(urlparse(url).netloc)
        try:
            resp = do_request()
        except requests.RequestException as e:
            raise UpstreamUnavailable(f"request to {url} failed: {e}") from e
        if resp.status_code != 200:
            raise UpstreamUnavailable(f"{url} returned HTTP {resp.status_code}")
        return resp.content

    def _body(self, key: str, source: str, live_fetch) -> bytes:
        if source == "fixture":
            if self.fixtures is None:
                raise FixtureMiss("offline mode without a fixture file")
            return self.fixtures.get(key)
        return self.cache.lookup_or_fetch(key, live_fetch)

    def reverse_geocode(self, coord: Coordinate, source: str | None = None) -> GeocodeResult:
        key = reverse_key(coord)

        def fetch() -> bytes:
            return self._http(
                self.geocode_url,
                lambda: self.session.get(
                    self.geocode_url,
                    params={"lat": f"{coord.lat:.6f}", "lon": f"{coord.lon:.6f}", "format": "json"},
                    headers={"User-Agent": USER_AGENT},
                    timeout=self.timeout_s,
                ),
            )

        body = self._body(key, self._resolve(source), fetch)
        return parse_reverse_response(body)

    def nearby_places(
        self,
        coord: Coordinate,
        radius_km: float = 100.0,
        k: int = 10,
        source: str | None = None,
    ) -> list[PlaceOfInterest]:
        if radius_km <= 0:
            raise ValueError("radius_km must be positive")
        if k < 1:
            raise ValueError("k must be >= 1")
        key = places_key(coord, radius_km)

        def fetch() -> bytes:
            return self._http(
                self.overpass_url,
                lambda: self.session.post(
                    self.overpass_url,
                    data={"data": overpass_query(coord, radius_km)},
                    headers={"User-Agent": USER_AGENT},
                    timeout=self.timeout_s,
                ),
            )

        body = self._body(key, self._resolve(source), fetch)
        return parse_places_response(body, coord, radius_km, k)
