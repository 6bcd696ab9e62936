"""HTTP JSON API over an immutable corpus snapshot."""

from .app import create_app
from .loader import load_snapshot
from .runner import (
    execute_aggregate,
    execute_clusters,
    execute_search,
    hit_wire,
    metadata_values,
    paginate,
)
from .schemas import (
    AggregateSpec,
    ClusterQuerySpec,
    ConstraintSpec,
    CropSpec,
    IntervalRequest,
    PolygonSpec,
    QuerySpec,
    TemporalSpec,
    WorkspaceAdd,
)
from .snapshot import (
    EmptyConstraintsError,
    Snapshot,
    UnknownLayerError,
    UnknownSeriesError,
)
from .workspace import Workspace

__all__ = [
    "AggregateSpec",
    "ClusterQuerySpec",
    "ConstraintSpec",
    "CropSpec",
    "EmptyConstraintsError",
    "IntervalRequest",
    "PolygonSpec",
    "QuerySpec",
    "Snapshot",
    "TemporalSpec",
    "UnknownLayerError",
    "UnknownSeriesError",
    "Workspace",
    "WorkspaceAdd",
    "create_app",
    "execute_aggregate",
    "execute_clusters",
    "execute_search",
    "hit_wire",
    "load_snapshot",
    "metadata_values",
    "paginate",
]
