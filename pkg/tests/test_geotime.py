"""Tests for spatio-temporal selection, aggregation, and series predicates.

Oracles: naive full scans (per-record Python loops, per-point floor
division, per-sample predicate + run merging) implemented here.
"""

import math

import numpy as np
import pytest

from streetlens.core import (
    GeoPoint,
    ImageRecord,
    IntervalSet,
    InvalidParameterError,
    Polygon,
    SpatioTemporalConstraint,
)
from streetlens.geotime import (
    aggregate_grid,
    aggregate_partition,
    intervals_where,
    select,
    temporal_histogram,
)
from streetlens.store import Corpus, PartitionLayer, TimeSeries


# --------------------------------------------------------------------------
# Oracles
# --------------------------------------------------------------------------

def oracle_ring_contains(x, y, ring):
    crossings = 0
    for i in range(len(ring) - 1):
        x1, y1 = ring[i]
        x2, y2 = ring[i + 1]
        if (y1 > y) != (y2 > y):
            t = (y - y1) / (y2 - y1)
            if x1 + t * (x2 - x1) > x:
                crossings += 1
    return crossings % 2 == 1


def oracle_inside(x, y, poly):
    if not oracle_ring_contains(x, y, poly.exterior):
        return False
    return not any(oracle_ring_contains(x, y, h) for h in poly.holes)


def oracle_select(records, polygon, pairs):
    out = []
    for r in records:
        if pairs is not None and not any(s <= r.timestamp < e for s, e in pairs):
            continue
        if polygon is not None and not oracle_inside(
            r.location.lon, r.location.lat, polygon
        ):
            continue
        out.append(r.id)
    return sorted(out)


def oracle_partition_counts(lats, lons, polygons):
    counts = [0] * len(polygons)
    overlapped = False
    for x, y in zip(lons, lats):
        hits = 0
        for j, poly in enumerate(polygons):
            if oracle_inside(x, y, poly):
                counts[j] += 1
                hits += 1
        overlapped = overlapped or hits > 1
    return counts, overlapped


def oracle_grid_counts(lats, lons, bbox, cell):
    min_lon, min_lat, max_lon, max_lat = bbox
    nx = math.ceil((max_lon - min_lon) / cell)
    ny = math.ceil((max_lat - min_lat) / cell)
    grid = np.zeros((ny, nx), dtype=np.int64)
    for x, y in zip(lons, lats):
        i = math.floor((x - min_lon) / cell)
        j = math.floor((y - min_lat) / cell)
        if 0 <= i < nx and 0 <= j < ny:
            grid[j, i] += 1
    return grid


def oracle_intervals_where(ts, vals, op, threshold):
    import operator

    fn = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}[op]
    good = [fn(v, threshold) for v in vals]
    gaps = [b - a for a, b in zip(ts[:-1], ts[1:])]
    step = int(np.median(gaps)) if gaps else 1
    ends = list(ts[1:]) + [ts[-1] + step]
    pairs = []
    for t, e, g in zip(ts, ends, good):
        if not g:
            continue
        if pairs and pairs[-1][1] == t:
            pairs[-1] = (pairs[-1][0], e)
        else:
            pairs.append((t, e))
    return pairs


def make_records(n, seed, bbox=(-74.1, 40.5, -73.8, 40.8), t0=0, t1=1_000_000):
    rng = np.random.default_rng(seed)
    lons = rng.uniform(bbox[0], bbox[2], n)
    lats = rng.uniform(bbox[1], bbox[3], n)
    ts = rng.integers(t0, t1, n)
    return [
        ImageRecord(
            id=i + 1,
            timestamp=int(ts[i]),
            location=GeoPoint(float(lats[i]), float(lons[i])),
            heading=0.0,
            camera_id=0,
            vehicle_id=0,
            blob_ref="",
        )
        for i in range(n)
    ]


CONCAVE = Polygon(
    (
        (-74.05, 40.55),
        (-73.95, 40.75),
        (-73.90, 40.58),
        (-73.85, 40.78),
        (-74.00, 40.70),
        (-74.08, 40.77),
    )
)


# --------------------------------------------------------------------------
# select
# --------------------------------------------------------------------------

class TestSelect:
    def test_universal_constraint_returns_all(self):
        records = make_records(50, seed=1)
        corpus = Corpus(records)
        bbox_poly = Polygon.from_bbox(-74.2, 40.4, -73.7, 40.9)
        c = SpatioTemporalConstraint(
            polygon=bbox_poly,
            intervals=IntervalSet.from_pairs([(0, 1_000_000)]),
        )
        got = select(corpus, c)
        assert sorted(got.tolist()) == sorted(r.id for r in records)

    def test_empty_interval_set_selects_nothing(self):
        corpus = Corpus(make_records(20, seed=2))
        c = SpatioTemporalConstraint(intervals=IntervalSet(()))
        assert select(corpus, c).size == 0

    def test_empty_constraint_rejected(self):
        corpus = Corpus(make_records(5, seed=3))
        with pytest.raises(InvalidParameterError):
            select(corpus, SpatioTemporalConstraint())

    def test_temporal_only(self):
        records = make_records(200, seed=4)
        corpus = Corpus(records)
        pairs = [(100_000, 300_000), (500_000, 600_000)]
        c = SpatioTemporalConstraint(intervals=IntervalSet.from_pairs(pairs))
        got = sorted(select(corpus, c).tolist())
        assert got == oracle_select(records, None, pairs)

    def test_spatial_only(self):
        records = make_records(200, seed=5)
        corpus = Corpus(records)
        c = SpatioTemporalConstraint(polygon=CONCAVE)
        got = sorted(select(corpus, c).tolist())
        assert got == oracle_select(records, CONCAVE, None)

    def test_random_constraints_match_scan_oracle(self):
        records = make_records(10_000, seed=6)
        corpus = Corpus(records)
        rng = np.random.default_rng(7)
        for trial in range(5):
            edges = np.sort(rng.integers(0, 1_000_000, size=6))
            pairs = [
                (int(edges[0]), int(edges[1])),
                (int(edges[2]), int(edges[3])),
                (int(edges[4]), int(edges[5])),
            ]
            pairs = [(a, b) for a, b in pairs if a < b]
            c = SpatioTemporalConstraint(
                polygon=CONCAVE, intervals=IntervalSet.from_pairs(pairs)
            )
            got = sorted(select(corpus, c).tolist())
            assert got == oracle_select(records, CONCAVE, pairs)

    def test_conjunction_equals_intersection(self):
        records = make_records(2_000, seed=8)
        corpus = Corpus(records)
        pairs = [(200_000, 700_000)]
        both = select(
            corpus,
            SpatioTemporalConstraint(
                polygon=CONCAVE, intervals=IntervalSet.from_pairs(pairs)
            ),
        )
        time_only = select(
            corpus, SpatioTemporalConstraint(intervals=IntervalSet.from_pairs(pairs))
        )
        space_only = select(corpus, SpatioTemporalConstraint(polygon=CONCAVE))
        assert set(both.tolist()) == set(time_only.tolist()) & set(space_only.tolist())

    def test_parallel_equals_sequential(self):
        records = make_records(5_000, seed=9)
        corpus = Corpus(records)
        c = SpatioTemporalConstraint(
            polygon=CONCAVE, intervals=IntervalSet.from_pairs([(0, 900_000)])
        )
        np.testing.assert_array_equal(
            select(corpus, c, workers=1), select(corpus, c, workers=4)
        )


# --------------------------------------------------------------------------
# aggregate_partition
# --------------------------------------------------------------------------

def grid_layer(nx, ny, bbox):
    min_lon, min_lat, max_lon, max_lat = bbox
    dx = (max_lon - min_lon) / nx
    dy = (max_lat - min_lat) / ny
    polys = []
    props = []
    for r in range(ny):
        for c in range(nx):
            polys.append(
                Polygon.from_bbox(
                    min_lon + c * dx,
                    min_lat + r * dy,
                    min_lon + (c + 1) * dx,
                    min_lat + (r + 1) * dy,
                )
            )
            props.append({"name": f"{r}_{c}"})
    return PartitionLayer(layer_id="grid", polygons=polys, properties=props)


class TestAggregatePartition:
    BBOX = (-74.1, 40.5, -73.8, 40.8)

    def test_single_covering_polygon(self):
        rng = np.random.default_rng(10)
        lats = rng.uniform(40.55, 40.75, 100)
        lons = rng.uniform(-74.05, -73.85, 100)
        layer = PartitionLayer(
            layer_id="one",
            polygons=[Polygon.from_bbox(-74.2, 40.4, -73.7, 40.9)],
            properties=[{"name": "all"}],
        )
        result = aggregate_partition(lats, lons, layer)
        assert result.counts.tolist() == [100]
        assert result.warning is None

    def test_point_outside_every_polygon(self):
        layer = grid_layer(2, 2, self.BBOX)
        result = aggregate_partition(
            np.array([50.0]), np.array([10.0]), layer
        )
        assert result.counts.sum() == 0

    def test_matches_quadratic_oracle(self):
        rng = np.random.default_rng(11)
        n = 5_000
        lats = rng.uniform(40.45, 40.85, n)
        lons = rng.uniform(-74.15, -73.75, n)
        layer = grid_layer(6, 5, self.BBOX)
        result = aggregate_partition(lats, lons, layer)
        expected, overlapped = oracle_partition_counts(lats, lons, layer.polygons)
        assert result.counts.tolist() == expected
        assert not overlapped
        assert result.warning is None

    def test_weighted_sums(self):
        rng = np.random.default_rng(12)
        n = 500
        lats = rng.uniform(40.5, 40.8, n)
        lons = rng.uniform(-74.1, -73.8, n)
        weights = rng.uniform(0.0, 10.0, n)
        layer = grid_layer(3, 3, self.BBOX)
        result = aggregate_partition(lats, lons, layer, weights=weights)
        # independent accumulation
        sums = [0.0] * 9
        for j, poly in enumerate(layer.polygons):
            for i in range(n):
                if oracle_inside(lons[i], lats[i], poly):
                    sums[j] += weights[i]
        np.testing.assert_allclose(result.sums, sums, rtol=1e-9)

    def test_overlap_produces_warning(self):
        layer = PartitionLayer(
            layer_id="bad",
            polygons=[
                Polygon.from_bbox(0.0, 0.0, 2.0, 2.0),
                Polygon.from_bbox(1.0, 1.0, 3.0, 3.0),
            ],
            properties=[{"name": "a"}, {"name": "b"}],
        )
        result = aggregate_partition(
            np.array([1.5, 0.5]), np.array([1.5, 0.5]), layer
        )
        assert result.warning is not None
        assert "overlap" in result.warning

    def test_conservation_on_partition(self):
        rng = np.random.default_rng(13)
        n = 2_000
        lats = rng.uniform(40.4, 40.9, n)
        lons = rng.uniform(-74.2, -73.7, n)
        layer = grid_layer(4, 4, self.BBOX)
        result = aggregate_partition(lats, lons, layer)
        inside_some = sum(
            1
            for i in range(n)
            if any(oracle_inside(lons[i], lats[i], p) for p in layer.polygons)
        )
        assert int(result.counts.sum()) == inside_some

    def test_parallel_equals_sequential(self):
        rng = np.random.default_rng(14)
        n = 3_000
        lats = rng.uniform(40.4, 40.9, n)
        lons = rng.uniform(-74.2, -73.7, n)
        layer = grid_layer(5, 4, self.BBOX)
        a = aggregate_partition(lats, lons, layer, workers=1)
        b = aggregate_partition(lats, lons, layer, workers=3)
        np.testing.assert_array_equal(a.counts, b.counts)


# --------------------------------------------------------------------------
# aggregate_grid
# --------------------------------------------------------------------------

class TestAggregateGrid:
    BBOX = (0.0, 0.0, 1.0, 1.0)

    def test_point_at_min_corner(self):
        grid = aggregate_grid(
            np.array([0.0]), np.array([0.0]), self.BBOX, cell_size_deg=0.25
        )
        assert grid[0, 0] == 1
        assert grid.sum() == 1

    def test_conservation(self):
        rng = np.random.default_rng(15)
        lats = rng.uniform(-0.5, 1.5, 1_000)
        lons = rng.uniform(-0.5, 1.5, 1_000)
        grid = aggregate_grid(lats, lons, self.BBOX, cell_size_deg=0.1)
        inside = (
            (lons >= 0.0) & (lons < 1.0) & (lats >= 0.0) & (lats < 1.0)
        ).sum()
        assert grid.sum() == inside

    def test_matches_floor_division_oracle(self):
        rng = np.random.default_rng(16)
        lats = rng.uniform(-0.2, 1.2, 2_000)
        lons = rng.uniform(-0.2, 1.2, 2_000)
        for cell in (0.3, 0.25, 0.07):
            got = aggregate_grid(lats, lons, self.BBOX, cell_size_deg=cell)
            np.testing.assert_array_equal(
                got, oracle_grid_counts(lats, lons, self.BBOX, cell)
            )

    def test_invalid_cell_size(self):
        with pytest.raises(InvalidParameterError):
            aggregate_grid(np.array([0.0]), np.array([0.0]), self.BBOX, 0.0)


# --------------------------------------------------------------------------
# temporal_histogram
# --------------------------------------------------------------------------

class TestTemporalHistogram:
    def test_single_point(self):
        series = temporal_histogram(np.array([100], dtype=np.int64), bin_width=60)
        assert series.timestamps.tolist() == [100]
        assert series.values.tolist() == [1.0]

    def test_conservation(self):
        rng = np.random.default_rng(17)
        ts = rng.integers(0, 10_000, 500)
        series = temporal_histogram(ts, bin_width=777)
        assert series.values.sum() == 500

    def test_matches_naive_binning_oracle(self):
        rng = np.random.default_rng(18)
        ts = np.sort(rng.integers(1_000, 50_000, 300))
        width = 1_234
        series = temporal_histogram(ts, bin_width=width, origin=0)
        counts = {}
        for t in ts:
            b = (int(t) // width) * width
            counts[b] = counts.get(b, 0) + 1
        got = {int(t): int(v) for t, v in zip(series.timestamps, series.values) if v}
        assert got == counts

    def test_bins_align_to_origin(self):
        ts = np.array([5, 15, 25], dtype=np.int64)
        series = temporal_histogram(ts, bin_width=10, origin=0)
        assert series.timestamps.tolist() == [0, 10, 20]
        assert series.values.tolist() == [1.0, 1.0, 1.0]

    def test_invalid_bin_width(self):
        with pytest.raises(InvalidParameterError):
            temporal_histogram(np.array([1], dtype=np.int64), bin_width=0)


# --------------------------------------------------------------------------
# intervals_where
# --------------------------------------------------------------------------

def series_of(ts, vals):
    return TimeSeries(
        series_id="s",
        timestamps=np.array(ts, dtype=np.int64),
        values=np.array(vals, dtype=np.float64),
    )


class TestIntervalsWhere:
    def test_all_satisfy_single_interval(self):
        s = series_of([0, 10, 20, 30], [5, 6, 7, 8])
        out = intervals_where(s, ">", 0.0)
        assert out.to_pairs() == [(0, 40)]  # last sample extends one median step

    def test_none_satisfy_empty(self):
        s = series_of([0, 10, 20], [1, 1, 1])
        out = intervals_where(s, ">", 5.0)
        assert out.to_pairs() == []

    def test_alternating_matches_oracle(self):
        ts = list(range(0, 200, 10))
        vals = [(i % 3) * 1.5 for i in range(20)]
        s = series_of(ts, vals)
        for op in ("<", "<=", ">", ">="):
            got = intervals_where(s, op, 1.5).to_pairs()
            assert got == oracle_intervals_where(ts, vals, op, 1.5), op

    def test_irregular_gaps_use_median_step_for_last(self):
        ts = [0, 10, 20, 100]
        vals = [1, 1, 1, 1]
        s = series_of(ts, vals)
        out = intervals_where(s, ">=", 1.0)
        assert out.to_pairs() == [(0, 110)]  # median gap = 10

    def test_single_sample_uses_unit_step(self):
        s = series_of([42], [3.0])
        assert intervals_where(s, ">", 0.0).to_pairs() == [(42, 43)]

    def test_random_series_match_oracle(self):
        rng = np.random.default_rng(19)
        for trial in range(10):
            n = int(rng.integers(1, 40))
            ts = np.sort(rng.choice(np.arange(10_000), size=n, replace=False))
            vals = rng.uniform(-1, 1, n)
            s = series_of(ts, vals)
            thr = float(rng.uniform(-1, 1))
            for op in ("<", "<=", ">", ">="):
                got = intervals_where(s, op, thr).to_pairs()
                assert got == oracle_intervals_where(
                    ts.tolist(), vals.tolist(), op, thr
                )

    def test_bad_operator_rejected(self):
        s = series_of([0], [1.0])
        with pytest.raises(InvalidParameterError):
            intervals_where(s, "!=", 0.0)

    def test_empty_series_rejected(self):
        with pytest.raises(InvalidParameterError):
            intervals_where(
                TimeSeries(
                    series_id="e",
                    timestamps=np.array([], dtype=np.int64),
                    values=np.array([]),
                ),
                ">",
                0.0,
            )
