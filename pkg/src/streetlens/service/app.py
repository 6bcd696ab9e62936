"""FastAPI application factory wiring endpoints to the engine."""

import math
from pathlib import Path
from typing import Union

from fastapi import FastAPI, Query, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..core import (
    EngineError,
    FormatError,
    InvalidGeometryError,
    InvalidParameterError,
    UnknownAttributeError,
    UnknownImageError,
)
from ..geotime import intervals_where
from .runner import (
    execute_aggregate,
    execute_clusters,
    execute_search,
    hit_wire,
    paginate,
)
from .schemas import (
    AggregateSpec,
    ClusterQuerySpec,
    IntervalRequest,
    QuerySpec,
    WorkspaceAdd,
)
from .snapshot import (
    EmptyConstraintsError,
    Snapshot,
    UnknownLayerError,
    UnknownSeriesError,
)
from .workspace import Workspace

__all__ = ["create_app"]

_PREVIEW_SIZE = 8


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _cluster_wire(snapshot: Snapshot, cluster) -> dict:
    preview = [
        {
            "image_id": m,
            "timestamp": snapshot.corpus.record_for(m).to_json_dict()["timestamp"],
        }
        for m in cluster.member_ids[:_PREVIEW_SIZE]
    ]
    return {
        "leader_id": cluster.leader_id,
        "size": cluster.size,
        "thumbnail_id": cluster.thumbnail_id,
        "member_ids": list(cluster.member_ids),
        "preview": preview,
    }


def _bucket_wire(result) -> list:
    counts = result.counts.tolist()
    sums = result.sums.tolist() if result.sums is not None else None
    buckets = []
    for i, name in enumerate(result.bucket_names):
        total = sums[i] if sums is not None else None
        mean = (
            total / counts[i] if total is not None and counts[i] > 0 else None
        )
        buckets.append(
            {"name": name, "count": counts[i], "sum": total, "mean": mean}
        )
    return buckets


def create_app(snapshot: Snapshot, workspace_path: Union[str, Path]) -> FastAPI:
    app = FastAPI(title="streetlens", docs_url=None, redoc_url=None)
    workspace = Workspace(Path(workspace_path), snapshot.corpus)

    @app.exception_handler(RequestValidationError)
    async def _on_validation(request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(p) for p in first.get("loc", ()))
        message = f"{where}: {first.get('msg', 'invalid request')}"
        return _error(400, "invalid_spec", message)

    @app.exception_handler(EngineError)
    async def _on_engine_error(request, exc: EngineError):
        if isinstance(exc, (UnknownImageError, UnknownSeriesError, UnknownLayerError)):
            return _error(404, "unknown_id", str(exc))
        if isinstance(exc, EmptyConstraintsError):
            return _error(422, "empty_constraints", str(exc))
        if isinstance(exc, UnknownAttributeError):
            return _error(400, "unknown_attribute", str(exc))
        return _error(400, "invalid_spec", str(exc))

    @app.exception_handler(FormatError)
    async def _on_format_error(request, exc: FormatError):
        return _error(400, "invalid_spec", str(exc))

    @app.post("/query/search")
    def query_search(spec: QuerySpec):
        hits = execute_search(snapshot, spec)
        page_hits, total = paginate(hits, spec.page, spec.page_size)
        return {
            "total": total,
            "page": spec.page,
            "page_size": spec.page_size,
            "hits": [hit_wire(snapshot, h) for h in page_hits],
        }

    @app.post("/query/clusters")
    def query_clusters(spec: ClusterQuerySpec):
        clusters = execute_clusters(snapshot, spec)
        page_clusters, total = paginate(clusters, spec.page, spec.page_size)
        return {
            "total": total,
            "page": spec.page,
            "page_size": spec.page_size,
            "clusters": [_cluster_wire(snapshot, c) for c in page_clusters],
        }

    @app.post("/aggregate")
    def aggregate(spec: AggregateSpec):
        result = execute_aggregate(snapshot, spec)
        return {
            "layer_id": result.layer_id,
            "buckets": _bucket_wire(result),
            "warning": result.warning,
        }

    @app.get("/images/{image_id}/meta")
    def image_meta(image_id: int):
        return snapshot.corpus.record_for(image_id).to_json_dict()

    @app.get("/images/{image_id}")
    def image_bytes(image_id: int):
        return Response(content=snapshot.blob_bytes(image_id), media_type="image/bmp")

    @app.get("/timeseries/{series_id}")
    def get_series(series_id: str):
        series = snapshot.series_for(series_id)
        return {
            "series_id": series.series_id,
            "timestamps": series.timestamps.tolist(),
            "values": series.values.tolist(),
        }

    @app.post("/timeseries/{series_id}/intervals")
    def series_intervals(series_id: str, body: IntervalRequest):
        series = snapshot.series_for(series_id)
        intervals = intervals_where(series, body.op, body.threshold)
        return {
            "series_id": series.series_id,
            "op": body.op,
            "threshold": body.threshold,
            "intervals": [list(p) for p in intervals.to_pairs()],
        }

    @app.post("/workspace")
    def workspace_add(body: WorkspaceAdd):
        return workspace.add(body.image_id, note=body.note, attributes=body.attributes)

    @app.get("/workspace")
    def workspace_items():
        return {"items": workspace.items()}

    @app.get("/workspace/export")
    def workspace_export(format: str = Query("csv")):
        if format == "csv":
            return Response(content=workspace.export_csv(), media_type="text/csv")
        if format == "json":
            return workspace.export_json()
        raise InvalidParameterError(f"unknown export format: {format!r}")

    return app
