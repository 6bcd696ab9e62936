"""Shared domain types and geometric/temporal primitives.

Conventions used across the engine:

- Timestamps are 64-bit integer seconds since the Unix epoch, UTC only.
  Wire formats carry ISO-8601 strings; parsing/formatting lives here.
- Geometry is planar in WGS84 degrees (lon as x, lat as y). At city scale
  the curvature error is negligible for point-in-polygon and aggregation.
- Point-in-polygon uses the crossing-number test with a half-open edge
  rule, so boundary points resolve deterministically (scanline semantics).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGeometryError(EngineError):
    """Polygon or point violates its structural invariants."""


class InvalidParameterError(EngineError, ValueError):
    """An operation was called with an out-of-range or malformed argument.

    Also a ValueError so estimator-style callers can catch it conventionally.
    """


class FormatError(EngineError):
    """A persisted file does not conform to its documented layout."""


class DuplicateIdError(EngineError):
    """An image id appeared more than once during ingestion."""

    def __init__(self, image_id: int):
        super().__init__(f"duplicate image id: {image_id}")
        self.image_id = image_id


class UnknownImageError(EngineError):
    """An operation referenced an image id not present in the corpus."""

    def __init__(self, image_id: int):
        super().__init__(f"unknown image id: {image_id}")
        self.image_id = image_id


class UnknownAttributeError(EngineError):
    """A sort or aggregation referenced an attribute that cannot be resolved."""


# --------------------------------------------------------------------------
# Timestamps
# --------------------------------------------------------------------------

def parse_timestamp(text: str) -> int:
    """Parse an ISO-8601 UTC instant to integer epoch seconds.

    Accepts a trailing "Z" or an explicit offset; naive strings are taken
    as UTC. Sub-second precision is rejected (the engine stores seconds).
    """
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise InvalidParameterError(f"bad timestamp {text!r}: {exc}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    if dt.microsecond != 0:
        raise InvalidParameterError(f"bad timestamp {text!r}: sub-second precision unsupported")
    return int(dt.timestamp())


def format_timestamp(seconds: int) -> str:
    """Render integer epoch seconds as an ISO-8601 UTC string with Z suffix."""
    dt = datetime.fromtimestamp(int(seconds), tz=timezone.utc)
    return dt.isoformat().replace("+00:00", "Z")


# --------------------------------------------------------------------------
# Geo / temporal value types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 position in degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise InvalidGeometryError(f"non-finite coordinates ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidGeometryError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise InvalidGeometryError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class TimeInterval:
    """Half-open UTC interval [start, end) in epoch seconds."""

    start: int
    end: int

    def __post_init__(self):
        if self.start >= self.end:
            raise InvalidParameterError(f"empty interval [{self.start}, {self.end})")

    def contains(self, t: int) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, pairwise-disjoint half-open intervals.

    Allows touching intervals ([a,b) followed by [b,c)); merging is the
    producer's concern, not a structural requirement.
    """

    intervals: Tuple[TimeInterval, ...]

    def __post_init__(self):
        prev_end = None
        for iv in self.intervals:
            if prev_end is not None and iv.start < prev_end:
                raise InvalidParameterError(
                    f"intervals overlap or are unsorted near [{iv.start}, {iv.end})"
                )
            prev_end = iv.end

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[int, int]]) -> "IntervalSet":
        return cls(tuple(TimeInterval(int(s), int(e)) for s, e in pairs))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def to_pairs(self) -> list:
        return [(iv.start, iv.end) for iv in self.intervals]

    def contains(self, t: int) -> bool:
        """True iff some member interval satisfies start <= t < end."""
        starts = [iv.start for iv in self.intervals]
        i = bisect_right(starts, t) - 1
        return i >= 0 and t < self.intervals[i].end


def interval_contains(s: IntervalSet, t: int) -> bool:
    """Binary-searched membership test over a sorted disjoint interval set."""
    return s.contains(t)


@dataclass(frozen=True)
class Polygon:
    """Simple polygon with optional holes, in (lon, lat) degree coordinates.

    Rings are normalized to be explicitly closed (first vertex repeated at
    the end). Each ring needs at least 3 distinct vertices. Self-intersecting
    input is not detected; results for such polygons are unspecified.
    """

    exterior: Tuple[Tuple[float, float], ...]
    holes: Tuple[Tuple[Tuple[float, float], ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "exterior", _normalize_ring(self.exterior))
        object.__setattr__(self, "holes", tuple(_normalize_ring(h) for h in self.holes))

    @property
    def bbox(self) -> Tuple[float, float, float, float]:
        """(min_lon, min_lat, max_lon, max_lat) of the exterior ring."""
        xs = [p[0] for p in self.exterior]
        ys = [p[1] for p in self.exterior]
        return (min(xs), min(ys), max(xs), max(ys))

    @classmethod
    def from_bbox(cls, min_lon: float, min_lat: float, max_lon: float, max_lat: float) -> "Polygon":
        return cls(
            (
                (min_lon, min_lat),
                (max_lon, min_lat),
                (max_lon, max_lat),
                (min_lon, max_lat),
            )
        )


def _normalize_ring(ring: Sequence[Tuple[float, float]]) -> Tuple[Tuple[float, float], ...]:
    pts = [(float(x), float(y)) for x, y in ring]
    for x, y in pts:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InvalidGeometryError(f"non-finite ring vertex ({x}, {y})")
    if pts and pts[0] == pts[-1]:
        pts = pts[:-1]
    if len(pts) < 3:
        raise InvalidGeometryError(f"ring needs at least 3 distinct vertices, got {len(pts)}")
    pts.append(pts[0])
    return tuple(pts)


# --------------------------------------------------------------------------
# Point-in-polygon
# --------------------------------------------------------------------------

def _ring_crossings(x: float, y: float, ring: Sequence[Tuple[float, float]]) -> bool:
    """Odd/even crossing test for one closed ring (half-open in y)."""
    inside = False
    for (x1, y1), (x2, y2) in zip(ring[:-1], ring[1:]):
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def point_in_polygon(p: GeoPoint, poly: Polygon) -> bool:
    """Crossing-number containment test; holes subtract.

    Boundary behavior follows the half-open edge rule: a point exactly on
    an edge or vertex resolves deterministically to one side, consistent
    with the bulk implementation used by aggregation.
    """
    if not _ring_crossings(p.lon, p.lat, poly.exterior):
        return False
    for hole in poly.holes:
        if _ring_crossings(p.lon, p.lat, hole):
            return False
    return True


def _ring_crossings_bulk(xs: np.ndarray, ys: np.ndarray, ring) -> np.ndarray:
    ring_arr = np.asarray(ring, dtype=np.float64)
    x1, y1 = ring_arr[:-1, 0], ring_arr[:-1, 1]
    x2, y2 = ring_arr[1:, 0], ring_arr[1:, 1]
    inside = np.zeros(xs.shape[0], dtype=bool)
    for i in range(x1.shape[0]):
        straddles = (y1[i] > ys) != (y2[i] > ys)
        if not straddles.any():
            continue
        dy = y2[i] - y1[i]
        x_cross = x1[i] + (ys - y1[i]) * (x2[i] - x1[i]) / dy
        inside ^= straddles & (xs < x_cross)
    return inside


def points_in_polygon(lats: np.ndarray, lons: np.ndarray, poly: Polygon) -> np.ndarray:
    """Vectorized point_in_polygon over coordinate arrays.

    Agrees with the scalar version on every input (same crossing rule).
    """
    xs = np.asarray(lons, dtype=np.float64)
    ys = np.asarray(lats, dtype=np.float64)
    if xs.shape != ys.shape:
        raise InvalidParameterError("lat/lon arrays must have identical shapes")
    inside = _ring_crossings_bulk(xs, ys, poly.exterior)
    for hole in poly.holes:
        inside &= ~_ring_crossings_bulk(xs, ys, hole)
    return inside


# --------------------------------------------------------------------------
# Region grid
# --------------------------------------------------------------------------

class Grid(Enum):
    """The two fixed region partitions of an image."""

    G2X2 = 2
    G4X4 = 4


@dataclass(frozen=True)
class RegionId:
    """One cell of the 2x2 or 4x4 image partition (row-major indexing)."""

    grid: Grid
    row: int
    col: int

    def __post_init__(self):
        n = self.grid.value
        if not (0 <= self.row < n and 0 <= self.col < n):
            raise InvalidParameterError(
                f"cell ({self.row}, {self.col}) outside {n}x{n} grid"
            )

    @property
    def code(self) -> int:
        """Stable serial code: 0-3 for the 2x2 cells, 4-19 for the 4x4 cells."""
        n = self.grid.value
        base = 0 if self.grid is Grid.G2X2 else 4
        return base + self.row * n + self.col

    @classmethod
    def from_code(cls, code: int) -> "RegionId":
        if 0 <= code < 4:
            return cls(Grid.G2X2, code // 2, code % 2)
        if 4 <= code < 20:
            c = code - 4
            return cls(Grid.G4X4, c // 4, c % 4)
        raise InvalidParameterError(f"region code {code} outside [0, 20)")

    def cell_rect(self) -> Tuple[float, float, float, float]:
        """Cell extent (x0, y0, x1, y1) in normalized [0,1]^2 image coordinates."""
        n = self.grid.value
        return (self.col / n, self.row / n, (self.col + 1) / n, (self.row + 1) / n)


# Fixed serialization order: 2x2 row-major, then 4x4 row-major.
REGION_IDS: Tuple[RegionId, ...] = tuple(RegionId.from_code(c) for c in range(20))
REGION_COUNT = len(REGION_IDS)

# Provenance code for the whole-image coarse descriptor.
COARSE_CODE = 20


@dataclass(frozen=True)
class ImageRecord:
    """Identity and capture metadata for one image."""

    id: int
    timestamp: int
    location: GeoPoint
    heading: float
    camera_id: int
    vehicle_id: int
    blob_ref: str

    def __post_init__(self):
        if not 0.0 <= self.heading < 360.0:
            raise InvalidParameterError(f"heading {self.heading} outside [0, 360)")

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "timestamp": format_timestamp(self.timestamp),
            "lat": self.location.lat,
            "lon": self.location.lon,
            "heading": self.heading,
            "camera_id": self.camera_id,
            "vehicle_id": self.vehicle_id,
            "blob_ref": self.blob_ref,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ImageRecord":
        return cls(
            id=int(obj["id"]),
            timestamp=parse_timestamp(obj["timestamp"]),
            location=GeoPoint(float(obj["lat"]), float(obj["lon"])),
            heading=float(obj["heading"]),
            camera_id=int(obj["camera_id"]),
            vehicle_id=int(obj["vehicle_id"]),
            blob_ref=str(obj["blob_ref"]),
        )


@dataclass(frozen=True)
class SpatioTemporalConstraint:
    """Conjunction of an optional polygon and an optional interval set."""

    polygon: Optional[Polygon] = None
    intervals: Optional[IntervalSet] = None

    @property
    def is_empty(self) -> bool:
        return self.polygon is None and self.intervals is None
