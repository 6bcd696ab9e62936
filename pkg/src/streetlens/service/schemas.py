"""Wire-format request models.

Structural validation lives here; semantic checks (tau range, geometry,
unknown ids) stay in the engine so the CLI shares them.
"""

from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

__all__ = [
    "AggregateSpec",
    "ClusterQuerySpec",
    "ConstraintSpec",
    "CropSpec",
    "IntervalRequest",
    "PolygonSpec",
    "QuerySpec",
    "TemporalSpec",
    "WorkspaceAdd",
]


class CropSpec(BaseModel):
    """Normalized crop rectangle in [0, 1] image coordinates."""

    model_config = ConfigDict(extra="forbid")

    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0

    def rect(self) -> Tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)


class ConstraintSpec(BaseModel):
    """One query constraint: a corpus image (optionally cropped) or a raw
    region descriptor."""

    model_config = ConfigDict(extra="forbid")

    image_id: Optional[int] = None
    crop: Optional[CropSpec] = None
    vector: Optional[List[float]] = None

    @model_validator(mode="after")
    def _exactly_one_source(self):
        if (self.image_id is None) == (self.vector is None):
            raise ValueError("constraint needs exactly one of image_id or vector")
        if self.vector is not None and self.crop is not None:
            raise ValueError("crop applies only to image constraints")
        return self


class PolygonSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    exterior: List[Tuple[float, float]]
    holes: List[List[Tuple[float, float]]] = []


class TemporalSpec(BaseModel):
    """Either explicit [start, end) epoch-second pairs or a series
    predicate resolved server-side via intervals_where."""

    model_config = ConfigDict(extra="forbid")

    intervals: Optional[List[Tuple[int, int]]] = None
    series_id: Optional[str] = None
    op: Optional[str] = None
    threshold: Optional[float] = None

    @model_validator(mode="after")
    def _one_form(self):
        predicate = [self.series_id, self.op, self.threshold]
        if self.intervals is not None:
            if any(v is not None for v in predicate):
                raise ValueError("give either intervals or a series predicate")
        elif any(v is None for v in predicate):
            raise ValueError(
                "series predicate needs series_id, op, and threshold together"
            )
        return self


class QuerySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    constraints: List[ConstraintSpec] = []
    tau: Optional[float] = Field(None, gt=0.0)
    k: Optional[int] = Field(None, ge=1)
    spatial: Optional[PolygonSpec] = None
    temporal: Optional[TemporalSpec] = None
    page: int = Field(1, ge=1)
    page_size: int = Field(50, ge=1, le=1000)


class ClusterQuerySpec(QuerySpec):
    page_size: int = Field(12, ge=1, le=1000)
    theta_c: Optional[float] = Field(None, gt=0.0)
    sort_by: str = "size"
    within_by: Optional[str] = None
    reverse: bool = False


class AggregateSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    layer_id: Optional[str] = None
    layer: Optional[dict] = None
    source: str = "image_density"
    attribute: Optional[str] = None
    query: Optional[QuerySpec] = None
    spatial: Optional[PolygonSpec] = None
    temporal: Optional[TemporalSpec] = None


class IntervalRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    op: str
    threshold: float


class WorkspaceAdd(BaseModel):
    model_config = ConfigDict(extra="forbid")

    image_id: int
    note: str = ""
    attributes: Dict[str, Union[bool, int, float, str]] = {}
