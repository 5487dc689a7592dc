import json
import math
from pathlib import Path

import pytest

from geovec.geo import Coordinate, EARTH_RADIUS_KM
from geovec.osm import FixtureSource, OsmClient


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") == "call" and "test_acceptance" in rep.nodeid:
                rows.append((rep.nodeid.split("::")[-1], outcome))
    if rows:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, outcome in sorted(rows):
            terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")

DATA = Path(__file__).parent / "data"

NYC = Coordinate(lon=-73.9857, lat=40.7484)
OCEAN = Coordinate(lon=-160.0, lat=0.0)


@pytest.fixture
def nyc_coord():
    return NYC


@pytest.fixture
def osm_fixtures():
    return FixtureSource.from_file(DATA / "osm_fixtures.json")


@pytest.fixture
def osm_client(tmp_path, osm_fixtures):
    return OsmClient(cache_dir=tmp_path / "cache", offline=True, fixtures=osm_fixtures)


def golden(name: str) -> str:
    return (DATA / name).read_text(encoding="utf-8")


def coord_at_km(origin: Coordinate, km: float) -> Coordinate:
    """A coordinate due north of origin at the given great-circle distance."""
    return Coordinate(lon=origin.lon, lat=origin.lat + math.degrees(km / EARTH_RADIUS_KM))


def write_fixture_file(path: Path, records: list[dict]) -> Path:
    path.write_text(json.dumps(records), encoding="utf-8")
    return path


def overpass_body(pois=(), streets=()) -> str:
    """Build an Overpass-style JSON body from (name, lat, lon) tuples."""
    elements = []
    for i, (name, lat, lon) in enumerate(pois):
        elements.append(
            {"type": "node", "id": i, "lat": lat, "lon": lon, "tags": {"name": name, "amenity": "yes"}}
        )
    for i, (name, lat, lon) in enumerate(streets):
        elements.append(
            {
                "type": "way",
                "id": 10_000 + i,
                "center": {"lat": lat, "lon": lon},
                "tags": {"name": name, "highway": "residential"},
            }
        )
    return json.dumps({"elements": elements})
