import numpy as np
import pytest

from geovec.dataio import (
    RasterGrid,
    chronological_split,
    load_attribute_csv,
    load_nodes_csv,
    load_raster_ascii,
    load_timeseries_csv,
    sample_raster,
    save_raster_ascii,
)
from geovec.errors import (
    AllNoData,
    DuplicateId,
    MissingValue,
    NonMonotonicTimestamps,
    OutOfBounds,
    ParseError,
    RangeError,
    TooShort,
)
from geovec.geo import Coordinate
from geovec.synth import geo_signal_series, grid_nodes, write_timeseries_csv


class TestNodesCsv:
    def test_well_formed(self, tmp_path):
        path = tmp_path / "nodes.csv"
        path.write_text("id,lon,lat\na,1.0,2.0\nb,3.0,4.0\nc,-5.0,-6.0\n")
        nodes = load_nodes_csv(path)
        assert len(nodes) == 3
        assert nodes.coord_of("b") == Coordinate(lon=3.0, lat=4.0)

    def test_range_error_names_line(self, tmp_path):
        path = tmp_path / "nodes.csv"
        path.write_text("id,lon,lat\na,1.0,2.0\nb,3.0,91.0\n")
        with pytest.raises(RangeError, match=":3"):
            load_nodes_csv(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "nodes.csv"
        path.write_text("id,lon,lat\na,1.0,2.0\na,3.0,4.0\n")
        with pytest.raises(DuplicateId):
            load_nodes_csv(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "nodes.csv"
        path.write_text("identifier,x,y\na,1.0,2.0\n")
        with pytest.raises(ParseError):
            load_nodes_csv(path)

    def test_unparseable_number(self, tmp_path):
        path = tmp_path / "nodes.csv"
        path.write_text("id,lon,lat\na,one,2.0\n")
        with pytest.raises(ParseError, match=":2"):
            load_nodes_csv(path)


class TestTimeseriesCsv:
    def test_well_formed(self, tmp_path):
        path = tmp_path / "ts.csv"
        rows = "\n".join(
            f"2020-01-01T{h:02d}:00:00Z,{h * 1.0},{h * 2.0}" for h in range(5)
        )
        path.write_text("timestamp,a,b\n" + rows + "\n")
        ds = load_timeseries_csv(path)
        assert len(ds) == 5
        assert ds.node_ids == ("a", "b")
        assert ds.values[3, 1] == 6.0

    def test_out_of_order(self, tmp_path):
        path = tmp_path / "ts.csv"
        path.write_text(
            "timestamp,a\n2020-01-01T02:00:00Z,1.0\n2020-01-01T01:00:00Z,2.0\n"
        )
        with pytest.raises(NonMonotonicTimestamps):
            load_timeseries_csv(path)

    def test_missing_value_names_cell(self, tmp_path):
        path = tmp_path / "ts.csv"
        path.write_text("timestamp,a,b\n2020-01-01T00:00:00Z,1.0,\n")
        with pytest.raises(MissingValue, match="2.*column 3"):
            load_timeseries_csv(path)

    def test_round_trip_with_writer(self, tmp_path):
        ds = geo_signal_series(grid_nodes(3, 2), 20, seed=1)
        path = tmp_path / "ts.csv"
        write_timeseries_csv(ds, path)
        loaded = load_timeseries_csv(path)
        assert loaded.node_ids == ds.node_ids
        assert np.array_equal(loaded.values, ds.values)


class TestAttributeCsv:
    def test_well_formed(self, tmp_path):
        path = tmp_path / "attr.csv"
        path.write_text("id,value\na,1.5\nb,-2.0\n")
        attr = load_attribute_csv(path)
        assert attr.node_ids == ("a", "b")
        assert attr.values[1] == -2.0

    def test_bad_header(self, tmp_path):
        path = tmp_path / "attr.csv"
        path.write_text("id,score\na,1.5\n")
        with pytest.raises(ParseError):
            load_attribute_csv(path)


def uniform_grid(value=4.25, ncols=5, nrows=5, nodata=-9999.0):
    return RasterGrid(
        ncols=ncols,
        nrows=nrows,
        xllcorner=0.0,
        yllcorner=0.0,
        cellsize=1.0,
        nodata=nodata,
        values=np.full((nrows, ncols), value),
    )


def brute_force_sample(grid, coord, k=12):
    """Enumerate every pixel center; average the k nearest non-nodata."""
    entries = []
    flat = 0
    for i in range(grid.nrows):
        for j in range(grid.ncols):
            cx = grid.xllcorner + (j + 0.5) * grid.cellsize
            cy = grid.yllcorner + (grid.nrows - i - 0.5) * grid.cellsize
            d2 = (cx - coord.lon) ** 2 + (cy - coord.lat) ** 2
            entries.append((d2, flat, grid.values[i, j]))
            flat += 1
    entries.sort(key=lambda e: (e[0], e[1]))
    chosen = [v for _, _, v in entries[:k] if v != grid.nodata]
    if not chosen:
        raise AssertionError("oracle found only nodata")
    return sum(chosen) / len(chosen)


class TestSampleRaster:
    def test_uniform_identity(self):
        grid = uniform_grid(7.5)
        assert sample_raster(grid, Coordinate(lon=2.3, lat=3.1)) == 7.5

    def test_out_of_bounds(self):
        grid = uniform_grid()
        with pytest.raises(OutOfBounds):
            sample_raster(grid, Coordinate(lon=9.0, lat=1.0))

    def test_checkerboard_matches_oracle(self):
        values = np.indices((5, 5)).sum(axis=0) % 2
        grid = RasterGrid(
            ncols=5, nrows=5, xllcorner=0.0, yllcorner=0.0, cellsize=1.0,
            nodata=-9999.0, values=values.astype(float),
        )
        coord = Coordinate(lon=2.5, lat=2.5)
        assert sample_raster(grid, coord) == pytest.approx(brute_force_sample(grid, coord), abs=1e-12)

    def test_random_coords_match_oracle(self):
        rng = np.random.default_rng(20)
        values = rng.normal(size=(6, 7))
        grid = RasterGrid(
            ncols=7, nrows=6, xllcorner=-3.0, yllcorner=10.0, cellsize=0.5,
            nodata=-9999.0, values=values,
        )
        for _ in range(25):
            coord = Coordinate(
                lon=float(rng.uniform(-3.0, -3.0 + 7 * 0.5)),
                lat=float(rng.uniform(10.0, 10.0 + 6 * 0.5)),
            )
            assert sample_raster(grid, coord) == pytest.approx(
                brute_force_sample(grid, coord), abs=1e-12
            )

    def test_nodata_excluded(self):
        values = np.full((5, 5), -9999.0)
        values[0, 0] = 3.0
        grid = RasterGrid(
            ncols=5, nrows=5, xllcorner=0.0, yllcorner=0.0, cellsize=1.0,
            nodata=-9999.0, values=values,
        )
        assert sample_raster(grid, Coordinate(lon=0.5, lat=4.5)) == 3.0

    def test_all_nodata(self):
        grid = uniform_grid(value=-9999.0)
        with pytest.raises(AllNoData):
            sample_raster(grid, Coordinate(lon=2.0, lat=2.0))

    def test_serializer_round_trip_preserves_samples(self, tmp_path):
        rng = np.random.default_rng(21)
        grid = RasterGrid(
            ncols=4, nrows=3, xllcorner=1.0, yllcorner=2.0, cellsize=0.25,
            nodata=-1.0, values=rng.normal(size=(3, 4)),
        )
        path = tmp_path / "grid.asc"
        save_raster_ascii(grid, path)
        loaded = load_raster_ascii(path)
        coord = Coordinate(lon=1.5, lat=2.4)
        assert sample_raster(loaded, coord) == sample_raster(grid, coord)

    def test_header_errors(self, tmp_path):
        path = tmp_path / "grid.asc"
        path.write_text("ncols 3\nnrows 2\n1 2 3\n4 5 6\n")
        with pytest.raises(ParseError):
            load_raster_ascii(path)


class TestChronologicalSplit:
    def test_ratio_lengths(self):
        ds = geo_signal_series(grid_nodes(2, 2), 100, seed=0)
        train, val, test = chronological_split(ds)
        assert (len(train), len(val), len(test)) == (70, 10, 20)

    def test_too_short(self):
        ds = geo_signal_series(grid_nodes(2, 2), 10, seed=0)
        with pytest.raises(TooShort):
            chronological_split(ds, min_length=20)

    def test_partition_reproduces_matrix(self):
        ds = geo_signal_series(grid_nodes(2, 2), 57, seed=0)
        train, val, test = chronological_split(ds)
        stacked = np.vstack([train.values, val.values, test.values])
        assert np.array_equal(stacked, ds.values)
        assert train.timestamps[-1] < val.timestamps[0] < test.timestamps[0]

    def test_bad_ratios(self):
        ds = geo_signal_series(grid_nodes(2, 2), 50, seed=0)
        with pytest.raises(ValueError):
            chronological_split(ds, ratios=(0.5, 0.2, 0.2))
