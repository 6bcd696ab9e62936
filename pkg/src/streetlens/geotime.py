"""Spatio-temporal selection and aggregation over corpus metadata.

Selection narrows a corpus to the image ids satisfying a polygon/interval
constraint. Aggregation buckets point sets into partition layers or uniform
grids, and series predicates turn attribute thresholds into time intervals
that can feed back into selection.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .core import (
    IntervalSet,
    InvalidParameterError,
    Polygon,
    SpatioTemporalConstraint,
    points_in_polygon,
)
from .store.metadata import Corpus
from .store.urban import PartitionLayer, TimeSeries

__all__ = [
    "AggregateResult",
    "aggregate_grid",
    "aggregate_partition",
    "intervals_where",
    "select",
    "temporal_histogram",
]

_MIN_PARALLEL = 4096  # below this, thread dispatch costs more than it saves


def _temporal_candidates(corpus: Corpus, intervals: IntervalSet) -> np.ndarray:
    """Indices of records whose timestamp falls in the interval set.

    Corpus timestamps are sorted, so each interval maps to one contiguous
    index range via binary search.
    """
    ts = corpus.timestamps
    chunks = []
    for iv in intervals.intervals:
        lo = int(np.searchsorted(ts, iv.start, side="left"))
        hi = int(np.searchsorted(ts, iv.end, side="left"))
        if hi > lo:
            chunks.append(np.arange(lo, hi, dtype=np.int64))
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)


def _spatial_mask(
    lats: np.ndarray, lons: np.ndarray, polygon: Polygon, workers: int
) -> np.ndarray:
    if workers <= 1 or lats.size < _MIN_PARALLEL:
        return points_in_polygon(lats, lons, polygon)
    bounds = np.linspace(0, lats.size, workers + 1).astype(np.int64)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(
            pool.map(
                lambda se: points_in_polygon(lats[se[0] : se[1]], lons[se[0] : se[1]], polygon),
                zip(bounds[:-1], bounds[1:]),
            )
        )
    return np.concatenate(parts)


def select(
    corpus: Corpus, constraint: SpatioTemporalConstraint, workers: int = 1
) -> np.ndarray:
    """Image ids (sorted ascending) satisfying the constraint.

    The temporal side binary-searches the timestamp-sorted corpus; the
    spatial polygon test then runs only on the surviving candidates. An
    interval set with zero intervals legitimately selects nothing, while a
    constraint with neither side raises: an all-pass filter is almost always
    a caller bug.
    """
    if constraint.is_empty:
        raise InvalidParameterError("constraint has neither polygon nor intervals")
    if constraint.intervals is not None:
        idx = _temporal_candidates(corpus, constraint.intervals)
    else:
        idx = np.arange(len(corpus.ids), dtype=np.int64)
    if constraint.polygon is not None and idx.size:
        mask = _spatial_mask(
            corpus.lats[idx], corpus.lons[idx], constraint.polygon, workers
        )
        idx = idx[mask]
    return np.sort(corpus.ids[idx])


@dataclass
class AggregateResult:
    """Per-bucket tallies from aggregating points into a partition layer."""

    layer_id: str
    bucket_names: Tuple[str, ...]
    counts: np.ndarray
    sums: Optional[np.ndarray] = None
    warning: Optional[str] = None

    @property
    def means(self) -> Optional[np.ndarray]:
        """Per-bucket weight means; NaN where a bucket is empty."""
        if self.sums is None:
            return None
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / self.counts, np.nan)


class _PointGrid:
    """Uniform-grid candidate filter over a point set.

    Cell size is tuned to the median polygon bbox diagonal so each polygon
    touches O(1) cells; correctness never depends on the tuning because
    candidates still pass through the exact polygon test.
    """

    def __init__(self, lats: np.ndarray, lons: np.ndarray, cell: float):
        self.cell = cell
        self.ox = float(lons.min())
        self.oy = float(lats.min())
        cx = np.floor((lons - self.ox) / cell).astype(np.int64)
        cy = np.floor((lats - self.oy) / cell).astype(np.int64)
        self.nx = int(cx.max()) + 1
        self.ny = int(cy.max()) + 1
        lin = cy * self.nx + cx
        self.order = np.argsort(lin, kind="stable")
        self.sorted_lin = lin[self.order]

    def candidates(self, bbox: Tuple[float, float, float, float]) -> np.ndarray:
        gx0 = max(0, int(np.floor((bbox[0] - self.ox) / self.cell)))
        gy0 = max(0, int(np.floor((bbox[1] - self.oy) / self.cell)))
        gx1 = min(self.nx - 1, int(np.floor((bbox[2] - self.ox) / self.cell)))
        gy1 = min(self.ny - 1, int(np.floor((bbox[3] - self.oy) / self.cell)))
        if gx0 > gx1 or gy0 > gy1:
            return np.empty(0, dtype=np.int64)
        rows = []
        for gy in range(gy0, gy1 + 1):
            lo = np.searchsorted(self.sorted_lin, gy * self.nx + gx0, side="left")
            hi = np.searchsorted(self.sorted_lin, gy * self.nx + gx1, side="right")
            if hi > lo:
                rows.append(self.order[lo:hi])
        if not rows:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(rows)


def aggregate_partition(
    lats: Union[np.ndarray, Sequence[float]],
    lons: Union[np.ndarray, Sequence[float]],
    layer: PartitionLayer,
    weights: Optional[np.ndarray] = None,
    workers: int = 1,
) -> AggregateResult:
    """Count points (and optionally sum weights) per layer polygon.

    Points inside no polygon are dropped. A point inside more than one
    polygon is counted in every one it hits, and the result carries a
    warning because the layer then is not a true partition.
    """
    lats = np.asarray(lats, dtype=np.float64)
    lons = np.asarray(lons, dtype=np.float64)
    if lats.shape != lons.shape or lats.ndim != 1:
        raise InvalidParameterError("lat/lon arrays must align 1-d")
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != lats.shape:
            raise InvalidParameterError("weights must align with points")

    n_poly = len(layer.polygons)
    counts = np.zeros(n_poly, dtype=np.int64)
    sums = np.zeros(n_poly, dtype=np.float64) if weights is not None else None
    if lats.size == 0 or n_poly == 0:
        return AggregateResult(layer.layer_id, tuple(layer.bucket_names()), counts, sums)

    bboxes = [p.bbox for p in layer.polygons]
    diags = [np.hypot(b[2] - b[0], b[3] - b[1]) for b in bboxes]
    cell = float(np.median(diags))
    if cell <= 0.0:
        cell = 1e-9
    grid = _PointGrid(lats, lons, cell)

    def hits_of(j: int) -> np.ndarray:
        cand = grid.candidates(bboxes[j])
        if cand.size == 0:
            return cand
        inside = points_in_polygon(lats[cand], lons[cand], layer.polygons[j])
        return cand[inside]

    if workers > 1 and n_poly > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_poly = list(pool.map(hits_of, range(n_poly)))
    else:
        per_poly = [hits_of(j) for j in range(n_poly)]

    membership = np.zeros(lats.size, dtype=np.int64)
    for j, idx in enumerate(per_poly):
        counts[j] = idx.size
        if sums is not None:
            sums[j] = float(weights[idx].sum())
        membership[idx] += 1

    warning = None
    n_multi = int((membership > 1).sum())
    if n_multi:
        warning = (
            f"{n_multi} point(s) fall inside more than one polygon; "
            "layer buckets overlap"
        )
    return AggregateResult(layer.layer_id, tuple(layer.bucket_names()), counts, sums, warning)


def aggregate_grid(
    lats: Union[np.ndarray, Sequence[float]],
    lons: Union[np.ndarray, Sequence[float]],
    bbox: Tuple[float, float, float, float],
    cell_size_deg: float,
) -> np.ndarray:
    """Count points into a uniform grid over bbox; shape (ny, nx).

    Cells are half-open: cell [0, 0] anchors at (min_lon, min_lat) and a
    point lands in cell floor((coord - min) / cell_size). Points outside
    the grid extent are dropped.
    """
    if not cell_size_deg > 0.0:
        raise InvalidParameterError("cell_size_deg must be positive")
    min_lon, min_lat, max_lon, max_lat = (float(v) for v in bbox)
    if not (min_lon < max_lon and min_lat < max_lat):
        raise InvalidParameterError("bbox must have positive extent")
    lats = np.asarray(lats, dtype=np.float64)
    lons = np.asarray(lons, dtype=np.float64)
    if lats.shape != lons.shape or lats.ndim != 1:
        raise InvalidParameterError("lat/lon arrays must align 1-d")

    nx = int(np.ceil((max_lon - min_lon) / cell_size_deg))
    ny = int(np.ceil((max_lat - min_lat) / cell_size_deg))
    ix = np.floor((lons - min_lon) / cell_size_deg).astype(np.int64)
    iy = np.floor((lats - min_lat) / cell_size_deg).astype(np.int64)
    ok = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    lin = iy[ok] * nx + ix[ok]
    return np.bincount(lin, minlength=nx * ny).reshape(ny, nx)


def temporal_histogram(
    timestamps: Union[np.ndarray, Sequence[int]],
    bin_width: int,
    origin: Optional[int] = None,
) -> TimeSeries:
    """Bin timestamps into fixed-width counts, returned as a time series.

    Bin edges align to origin (default: the earliest timestamp), each bin
    labeled by its left edge. With an explicit origin, earlier timestamps
    are dropped.
    """
    if int(bin_width) < 1:
        raise InvalidParameterError("bin_width must be a positive number of seconds")
    width = int(bin_width)
    ts = np.asarray(timestamps, dtype=np.int64)
    if ts.size == 0:
        return TimeSeries(
            series_id="histogram",
            timestamps=np.empty(0, dtype=np.int64),
            values=np.empty(0, dtype=np.float64),
        )
    start = int(ts.min()) if origin is None else int(origin)
    offs = ts - start
    offs = offs[offs >= 0]
    bins = offs // width
    counts = np.bincount(bins)
    return TimeSeries(
        series_id="histogram",
        timestamps=start + np.arange(counts.size, dtype=np.int64) * width,
        values=counts.astype(np.float64),
    )


_OPS = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
}


def intervals_where(series: TimeSeries, op: str, threshold: float) -> IntervalSet:
    """Time intervals over which the series satisfies `value <op> threshold`.

    Sample i governs [t_i, t_{i+1}); the final sample extends one median
    step past its timestamp (1 s for a single-sample series). Adjacent
    qualifying samples merge into a single interval.
    """
    if op not in _OPS:
        raise InvalidParameterError(f"unknown comparison operator: {op!r}")
    n = series.sample_count
    if n == 0:
        raise InvalidParameterError("series has no samples")
    ts = series.timestamps
    good = _OPS[op](series.values, float(threshold))
    gaps = np.diff(ts)
    step = int(np.median(gaps)) if gaps.size else 1
    ends = np.append(ts[1:], ts[-1] + step)

    prev = np.concatenate(([False], good[:-1]))
    nxt = np.concatenate((good[1:], [False]))
    starts = np.flatnonzero(good & ~prev)
    stops = np.flatnonzero(good & ~nxt)
    return IntervalSet.from_pairs(
        (int(ts[s]), int(ends[e])) for s, e in zip(starts, stops)
    )
