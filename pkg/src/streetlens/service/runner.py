"""Query composition shared by the HTTP endpoints and the CLI.

Each function turns one validated wire spec into engine calls; the HTTP
layer adds only serialization and pagination on top, which keeps the
CLI `query` command and the service behavior-identical by construction.
"""

import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..cluster import Cluster, cluster_results, sort_clusters, sort_within
from ..core import (
    IntervalSet,
    InvalidParameterError,
    Polygon,
    SpatioTemporalConstraint,
    UnknownAttributeError,
)
from ..geotime import AggregateResult, aggregate_partition, intervals_where, select
from ..lsh import Hit, Signature, hash_vector
from ..store import Corpus, PartitionLayer, layer_from_geojson
from ..store.features import REGION_DIM
from .schemas import AggregateSpec, ClusterQuerySpec, PolygonSpec, QuerySpec, TemporalSpec
from .snapshot import EmptyConstraintsError, Snapshot

__all__ = [
    "execute_aggregate",
    "execute_clusters",
    "execute_search",
    "hit_wire",
    "metadata_values",
    "paginate",
]

_FULL_CROP = (0.0, 0.0, 1.0, 1.0)


def build_polygon(spec: PolygonSpec) -> Polygon:
    return Polygon(
        tuple((float(x), float(y)) for x, y in spec.exterior),
        holes=tuple(
            tuple((float(x), float(y)) for x, y in ring) for ring in spec.holes
        ),
    )


def build_intervals(snapshot: Snapshot, spec: TemporalSpec) -> IntervalSet:
    if spec.intervals is not None:
        return IntervalSet.from_pairs(spec.intervals)
    series = snapshot.series_for(spec.series_id)
    return intervals_where(series, spec.op, spec.threshold)


def filter_ids_for(
    snapshot: Snapshot,
    spatial: Optional[PolygonSpec],
    temporal: Optional[TemporalSpec],
) -> Optional[np.ndarray]:
    """Spatio-temporal id filter; None when no constraint was given."""
    if spatial is None and temporal is None:
        return None
    constraint = SpatioTemporalConstraint(
        polygon=build_polygon(spatial) if spatial is not None else None,
        intervals=build_intervals(snapshot, temporal) if temporal is not None else None,
    )
    return select(snapshot.corpus, constraint)


def _query_groups(snapshot: Snapshot, spec: QuerySpec) -> List[List[Signature]]:
    if not spec.constraints:
        raise EmptyConstraintsError()
    groups: List[List[Signature]] = []
    for c in spec.constraints:
        if c.vector is not None:
            vec = np.asarray(c.vector, dtype=np.float32)
            if vec.shape != (REGION_DIM,):
                raise InvalidParameterError(
                    f"query vector has dimension {vec.shape[0]}, expected {REGION_DIM}"
                )
            groups.append([hash_vector(snapshot.index.region_family, vec)])
        else:
            rect = c.crop.rect() if c.crop is not None else _FULL_CROP
            groups.append(snapshot.index.crop_to_query(int(c.image_id), rect))
    return groups


def execute_search(snapshot: Snapshot, spec: QuerySpec, workers: int = 1) -> List[Hit]:
    """The full (unpaginated) hit list for a query spec."""
    groups = _query_groups(snapshot, spec)
    allowed = filter_ids_for(snapshot, spec.spatial, spec.temporal)
    tau = spec.tau if spec.tau is not None else snapshot.default_tau
    return snapshot.index.intersect_search(
        groups, tau=tau, k=spec.k, filter_ids=allowed, workers=workers
    )


def metadata_values(corpus: Corpus, key: str) -> Dict[int, float]:
    """Numeric per-image values for a metadata attribute."""
    if key == "timestamp":
        return {int(i): float(t) for i, t in zip(corpus.ids, corpus.timestamps)}
    if key in ("heading", "camera_id", "vehicle_id"):
        return {r.id: float(getattr(r, key)) for r in corpus.records}
    raise UnknownAttributeError(f"unknown metadata attribute: {key!r}")


def execute_clusters(snapshot: Snapshot, spec: ClusterQuerySpec) -> List[Cluster]:
    """Search, cluster, and order clusters per the spec's sort key."""
    hits = execute_search(snapshot, spec)
    theta = spec.theta_c if spec.theta_c is not None else snapshot.default_theta_c
    clusters = cluster_results(hits, snapshot.index, theta)
    if spec.sort_by == "size":
        if spec.reverse:
            clusters = sort_clusters(clusters, key="size", reverse=True)
    else:
        values = metadata_values(snapshot.corpus, spec.sort_by)
        clusters = sort_clusters(
            clusters, key=spec.sort_by, values=values, reverse=spec.reverse
        )
    if spec.within_by is not None:
        clusters = apply_within(snapshot, clusters, spec.within_by)
    return clusters


def apply_within(
    snapshot: Snapshot, clusters: Sequence[Cluster], key: str
) -> List[Cluster]:
    if key in ("timestamp", "vehicle_id"):
        return [sort_within(c, key, corpus=snapshot.corpus) for c in clusters]
    values = metadata_values(snapshot.corpus, key)
    return [sort_within(c, key, values=values) for c in clusters]


def _resolve_layer(snapshot: Snapshot, spec: AggregateSpec) -> PartitionLayer:
    if (spec.layer_id is None) == (spec.layer is None):
        raise InvalidParameterError("provide exactly one of layer_id or layer")
    if spec.layer_id is not None:
        return snapshot.layer_for(spec.layer_id)
    return layer_from_geojson(spec.layer, fallback_id="inline", source="inline layer")


def execute_aggregate(snapshot: Snapshot, spec: AggregateSpec) -> AggregateResult:
    """Aggregate image, hit, or attribute mass onto a partition layer."""
    layer = _resolve_layer(snapshot, spec)
    corpus = snapshot.corpus
    if spec.source not in ("image_density", "hit_density", "attribute"):
        raise InvalidParameterError(f"unknown aggregation source: {spec.source!r}")

    allowed = filter_ids_for(snapshot, spec.spatial, spec.temporal)
    if spec.source == "hit_density":
        if spec.query is None:
            raise InvalidParameterError("hit_density requires a query spec")
        hits = execute_search(snapshot, spec.query)
        hit_ids = np.array([h.image_id for h in hits], dtype=np.int64)
        rows = np.isin(corpus.ids, hit_ids)
        if allowed is not None:
            rows &= np.isin(corpus.ids, allowed)
    elif allowed is not None:
        rows = np.isin(corpus.ids, allowed)
    else:
        rows = np.ones(corpus.ids.shape[0], dtype=bool)

    weights = None
    if spec.source == "attribute":
        if spec.attribute is None:
            raise InvalidParameterError("attribute source requires an attribute name")
        values = metadata_values(corpus, spec.attribute)
        weights = np.array(
            [values[int(i)] for i in corpus.ids[rows]], dtype=np.float64
        )
    return aggregate_partition(
        corpus.lats[rows], corpus.lons[rows], layer, weights=weights
    )


def paginate(items: Sequence, page: int, page_size: int):
    """1-based slice; concatenating all pages reproduces the full list."""
    lo = (page - 1) * page_size
    return list(items[lo : lo + page_size]), len(items)


def hit_wire(snapshot: Snapshot, hit: Hit) -> dict:
    """The JSON shape of one search hit (shared by the HTTP and CLI paths)."""
    record = snapshot.corpus.record_for(hit.image_id)
    doc = record.to_json_dict()
    return {
        "image_id": hit.image_id,
        "angle": hit.angle,
        "query_code": hit.query_code,
        "corpus_code": hit.corpus_code,
        "timestamp": doc["timestamp"],
        "lat": record.location.lat,
        "lon": record.location.lon,
    }
