"""Auxiliary urban datasets: polygonal partition layers and time series.

Layers persist as geo-feature-collection JSON (one polygon + properties per
feature, coordinates in lon/lat order); time series persist as two-column
CSV "timestamp,value" with ISO-8601 UTC timestamps.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from ..core import (
    FormatError,
    InvalidGeometryError,
    InvalidParameterError,
    Polygon,
    format_timestamp,
    parse_timestamp,
)


@dataclass
class PartitionLayer:
    """A named set of polygons with per-polygon attributes.

    Polygons are expected to be pairwise non-overlapping; that is the
    producer's contract and is cross-checked (with a warning, not an error)
    during aggregation.
    """

    layer_id: str
    polygons: List[Polygon]
    properties: List[Dict] = field(default_factory=list)

    def __post_init__(self):
        if not self.properties:
            self.properties = [{} for _ in self.polygons]
        if len(self.properties) != len(self.polygons):
            raise InvalidParameterError(
                "properties must align one-to-one with polygons"
            )

    @property
    def polygon_count(self) -> int:
        return len(self.polygons)

    def bucket_names(self) -> List[str]:
        """Per-polygon display names; falls back to the polygon index."""
        return [
            str(props.get("name", i)) for i, props in enumerate(self.properties)
        ]


@dataclass
class TimeSeries:
    """Timestamped numeric samples with strictly increasing timestamps."""

    series_id: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.timestamps = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.timestamps.shape != self.values.shape or self.timestamps.ndim != 1:
            raise InvalidParameterError("timestamps and values must align 1-d")
        if self.timestamps.shape[0] > 1 and not (np.diff(self.timestamps) > 0).all():
            raise InvalidParameterError("timestamps must be strictly increasing")
        if not np.isfinite(self.values).all():
            raise InvalidParameterError("series values must be finite")

    @property
    def sample_count(self) -> int:
        return int(self.timestamps.shape[0])


def _ring_to_coords(ring) -> list:
    return [[x, y] for x, y in ring]


def _coords_to_ring(coords, path, what) -> tuple:
    try:
        return tuple((float(x), float(y)) for x, y in coords)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad {what} coordinates: {exc}") from None


def save_layer(layer: PartitionLayer, path: Union[str, Path]) -> None:
    features = []
    for poly, props in zip(layer.polygons, layer.properties):
        coordinates = [_ring_to_coords(poly.exterior)]
        coordinates.extend(_ring_to_coords(h) for h in poly.holes)
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": coordinates},
                "properties": props,
            }
        )
    doc = {"type": "FeatureCollection", "name": layer.layer_id, "features": features}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def layer_from_geojson(doc, fallback_id: str, source: str = "layer") -> PartitionLayer:
    """Build a PartitionLayer from a FeatureCollection mapping.

    Shared by file loading and inline layers supplied over the wire;
    `source` only labels error messages.
    """
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise FormatError(f"{source}: expected a FeatureCollection")
    features = doc.get("features", [])
    if not isinstance(features, list):
        raise FormatError(f"{source}: features must be a list")
    polygons: List[Polygon] = []
    properties: List[Dict] = []
    for i, feature in enumerate(features):
        if not isinstance(feature, dict):
            raise FormatError(f"{source}: feature {i}: not an object")
        geom = feature.get("geometry") or {}
        if not isinstance(geom, dict) or geom.get("type") != "Polygon":
            raise FormatError(
                f"{source}: feature {i}: only Polygon geometries are supported"
            )
        coords = geom.get("coordinates") or []
        if not coords:
            raise FormatError(f"{source}: feature {i}: empty coordinates")
        exterior = _coords_to_ring(coords[0], source, f"feature {i} exterior")
        holes = tuple(
            _coords_to_ring(ring, source, f"feature {i} hole") for ring in coords[1:]
        )
        try:
            polygons.append(Polygon(exterior, holes=holes))
        except InvalidGeometryError as exc:
            raise FormatError(f"{source}: feature {i}: {exc}") from None
        properties.append(dict(feature.get("properties") or {}))
    layer_id = str(doc.get("name") or fallback_id)
    return PartitionLayer(layer_id=layer_id, polygons=polygons, properties=properties)


def load_layer(path: Union[str, Path]) -> PartitionLayer:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from None
    return layer_from_geojson(doc, fallback_id=path.stem, source=str(path))


def save_series(series: TimeSeries, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["timestamp", "value"])
        for t, v in zip(series.timestamps, series.values):
            writer.writerow([format_timestamp(int(t)), repr(float(v))])


def load_series(path: Union[str, Path]) -> TimeSeries:
    path = Path(path)
    timestamps = []
    values = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["timestamp", "value"]:
            raise FormatError(f"{path}: expected header 'timestamp,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path}: line {lineno}: expected 2 columns")
            try:
                timestamps.append(parse_timestamp(row[0]))
                values.append(float(row[1]))
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from None
    try:
        return TimeSeries(
            series_id=path.stem,
            timestamps=np.array(timestamps, dtype=np.int64),
            values=np.array(values, dtype=np.float64),
        )
    except InvalidParameterError as exc:
        raise FormatError(f"{path}: {exc}") from None
