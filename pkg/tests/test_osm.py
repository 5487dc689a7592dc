import json
import threading

import pytest
import requests

from conftest import NYC, OCEAN, coord_at_km, overpass_body, write_fixture_file
from geovec.errors import CacheCorrupt, FixtureMiss, NoAddressFound, UpstreamUnavailable
from geovec.geo import Coordinate, cardinal_direction, haversine_km, initial_bearing_deg
from geovec.osm import (
    KIND_POI,
    KIND_STREET,
    FixtureSource,
    OsmClient,
    RateLimiter,
    ResponseCache,
    canonical_key,
    parse_places_response,
    places_key,
    reverse_key,
)


class FakeResponse:
    def __init__(self, status_code=200, content=b"{}"):
        self.status_code = status_code
        self.content = content


class FakeSession:
    """Scripted session: pops one response (or exception) per request."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = 0

    def _next(self):
        self.calls += 1
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item

    def get(self, *args, **kwargs):
        return self._next()

    def post(self, *args, **kwargs):
        return self._next()


class TestCanonicalKey:
    def test_deterministic_and_order_free(self):
        a = canonical_key("reverse", {"lat": "1.000000", "lon": "2.000000"})
        b = canonical_key("reverse", {"lon": "2.000000", "lat": "1.000000"})
        assert a == b
        assert a != canonical_key("reverse", {"lat": "1.000001", "lon": "2.000000"})

    def test_k_not_part_of_places_key(self):
        assert places_key(NYC, 100.0) == places_key(NYC, 100.0)


class TestReverseGeocode:
    def test_nyc_fixture(self, osm_client):
        result = osm_client.reverse_geocode(NYC)
        assert result.components[-1][1] == "United States"
        assert "New York" in result.display
        assert result.display == ", ".join(v for _, v in result.components)

    def test_ocean_fixture(self, osm_client):
        with pytest.raises(NoAddressFound):
            osm_client.reverse_geocode(OCEAN)

    def test_fixture_miss(self, osm_client):
        with pytest.raises(FixtureMiss):
            osm_client.reverse_geocode(Coordinate(lon=1.0, lat=1.0))

    def test_live_caches_and_reuses(self, tmp_path):
        body = json.dumps({"address": {"road": "A", "country": "B"}}).encode()
        session = FakeSession([FakeResponse(200, body)])
        client = OsmClient(
            cache_dir=tmp_path, offline=False, session=session,
            rate_limiter=RateLimiter(now=lambda: 0.0, sleep=lambda s: None),
        )
        first = client.reverse_geocode(NYC)
        second = client.reverse_geocode(NYC)
        assert session.calls == 1
        assert first == second

    def test_http_500(self, tmp_path):
        session = FakeSession([FakeResponse(500)])
        client = OsmClient(
            cache_dir=tmp_path, offline=False, session=session,
            rate_limiter=RateLimiter(now=lambda: 0.0, sleep=lambda s: None),
        )
        with pytest.raises(UpstreamUnavailable):
            client.reverse_geocode(NYC)

    def test_network_error(self, tmp_path):
        session = FakeSession([requests.ConnectionError("down")])
        client = OsmClient(
            cache_dir=tmp_path, offline=False, session=session,
            rate_limiter=RateLimiter(now=lambda: 0.0, sleep=lambda s: None),
        )
        with pytest.raises(UpstreamUnavailable):
            client.reverse_geocode(NYC)

    def test_env_var_overrides_base_urls(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GEOVEC_GEOCODE_URL", "http://geocode.test/reverse")
        monkeypatch.setenv("GEOVEC_OVERPASS_URL", "http://overpass.test/api")
        client = OsmClient(cache_dir=tmp_path)
        assert client.geocode_url == "http://geocode.test/reverse"
        assert client.overpass_url == "http://overpass.test/api"


class TestNearbyPlaces:
    def _client(self, tmp_path, records):
        path = write_fixture_file(tmp_path / "fx.json", records)
        return OsmClient(cache_dir=tmp_path / "c", offline=True, fixtures=FixtureSource.from_file(path))

    def test_radius_filter_and_sort(self, tmp_path):
        origin = Coordinate(lon=0.0, lat=0.0)
        pois = [
            ("Far", coord_at_km(origin, 200.0).lat, 0.0),
            ("Mid", coord_at_km(origin, 5.0).lat, 0.0),
            ("Near", coord_at_km(origin, 1.0).lat, 0.0),
        ]
        client = self._client(
            tmp_path, [{"query_key": places_key(origin, 100.0), "body": overpass_body(pois=pois)}]
        )
        got = client.nearby_places(origin, radius_km=100.0, k=10)
        assert [p.name for p in got] == ["Near", "Mid"]
        assert got[0].distance_km < got[1].distance_km

    def test_street_fallback(self, tmp_path):
        origin = Coordinate(lon=0.0, lat=0.0)
        streets = [(f"Street {i}", coord_at_km(origin, 1.0 + i).lat, 0.0) for i in range(4)]
        client = self._client(
            tmp_path,
            [{"query_key": places_key(origin, 100.0), "body": overpass_body(streets=streets)}],
        )
        got = client.nearby_places(origin, radius_km=100.0, k=10)
        assert len(got) == 4
        assert all(p.kind == KIND_STREET for p in got)

    def test_top10_matches_brute_force(self, tmp_path):
        origin = Coordinate(lon=0.0, lat=0.0)
        import numpy as np

        rng = np.random.default_rng(12)
        pois = [
            (f"Place {i:02d}", float(rng.uniform(-0.8, 0.8)), float(rng.uniform(-0.8, 0.8)))
            for i in range(25)
        ]
        client = self._client(
            tmp_path, [{"query_key": places_key(origin, 100.0), "body": overpass_body(pois=pois)}]
        )
        got = client.nearby_places(origin, radius_km=100.0, k=10)
        oracle = sorted(
            (haversine_km(origin, Coordinate(lon=lon, lat=lat)), name)
            for name, lat, lon in pois
            if haversine_km(origin, Coordinate(lon=lon, lat=lat)) <= 100.0
        )[:10]
        assert [p.name for p in got] == [name for _, name in oracle]

    def test_prefix_closed_ranking(self, tmp_path):
        origin = Coordinate(lon=0.0, lat=0.0)
        pois = [(f"P{i}", coord_at_km(origin, 1.0 + i).lat, 0.0) for i in range(8)]
        client = self._client(
            tmp_path, [{"query_key": places_key(origin, 100.0), "body": overpass_body(pois=pois)}]
        )
        for k in range(1, 8):
            assert client.nearby_places(origin, k=k) == client.nearby_places(origin, k=k + 1)[:k]

    def test_derived_fields_match_geo(self, osm_client):
        for place in osm_client.nearby_places(NYC, radius_km=100.0, k=10):
            assert place.distance_km == haversine_km(NYC, place.coord)
            if place.coord != NYC:
                bearing = initial_bearing_deg(NYC, place.coord)
                assert place.bearing_deg == bearing
                assert place.direction == cardinal_direction(bearing)

    def test_poi_requires_known_tag(self):
        body = json.dumps(
            {
                "elements": [
                    {"type": "node", "id": 1, "lat": 0.01, "lon": 0.0, "tags": {"name": "Untyped"}},
                    {"type": "node", "id": 2, "lat": 0.02, "lon": 0.0,
                     "tags": {"name": "Cafe", "amenity": "cafe"}},
                ]
            }
        ).encode()
        got = parse_places_response(body, Coordinate(lon=0, lat=0), 100.0, 10)
        assert [p.name for p in got] == ["Cafe"]
        assert got[0].kind == KIND_POI


class TestCache:
    def test_miss_fetches_once_and_persists(self, tmp_path):
        cache = ResponseCache(tmp_path)
        calls = []
        body = cache.lookup_or_fetch("aa" * 32, lambda: calls.append(1) or b"payload")
        assert body == b"payload" and len(calls) == 1
        assert cache.lookup_or_fetch("aa" * 32, lambda: calls.append(1) or b"other") == b"payload"
        assert len(calls) == 1

    def test_corrupt_entry(self, tmp_path):
        cache = ResponseCache(tmp_path)
        (tmp_path / ("bb" * 32)).mkdir()
        with pytest.raises(CacheCorrupt):
            cache.get("bb" * 32)

    def test_entry_metadata(self, tmp_path):
        cache = ResponseCache(tmp_path)
        cache.put("dd" * 32, b"body")
        entry = cache.entry("dd" * 32)
        assert entry.body == b"body" and entry.fetched_at > 0

    def test_single_flight(self, tmp_path):
        cache = ResponseCache(tmp_path)
        started = threading.Event()
        release = threading.Event()
        calls = []

        def slow_fetch():
            calls.append(1)
            started.set()
            release.wait(timeout=5)
            return b"x"

        results = []
        threads = [
            threading.Thread(target=lambda: results.append(cache.lookup_or_fetch("cc" * 32, slow_fetch)))
            for _ in range(4)
        ]
        for t in threads:
            t.start()
        started.wait(timeout=5)
        release.set()
        for t in threads:
            t.join(timeout=5)
        assert len(calls) == 1
        assert results == [b"x"] * 4


class TestRateLimiter:
    def test_spacing_at_least_interval(self):
        clock = {"t": 0.0}

        def now():
            return clock["t"]

        def sleep(s):
            clock["t"] += s

        limiter = RateLimiter(min_interval_s=1.0, now=now, sleep=sleep)
        stamps = []
        for _ in range(5):
            limiter.acquire("host")
            stamps.append(now())
            clock["t"] += 0.2  # request takes 200 ms
        gaps = [b - a for a, b in zip(stamps, stamps[1:])]
        assert all(gap >= 1.0 - 1e-9 for gap in gaps)

    def test_hosts_independent(self):
        clock = {"t": 0.0}
        limiter = RateLimiter(min_interval_s=1.0, now=lambda: clock["t"], sleep=lambda s: clock.__setitem__("t", clock["t"] + s))
        limiter.acquire("a")
        t0 = clock["t"]
        limiter.acquire("b")
        assert clock["t"] == t0
