"""Immutable corpus snapshot served over HTTP.

One snapshot bundles everything a running service needs: metadata, the
signature index, urban data layers and series, and the blob root. All of
it is read-only; the workspace is the only mutable store and lives apart.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from ..core import EngineError, UnknownImageError
from ..lsh import SignatureIndex
from ..store import Corpus, PartitionLayer, TimeSeries

__all__ = [
    "EmptyConstraintsError",
    "Snapshot",
    "UnknownLayerError",
    "UnknownSeriesError",
]


class UnknownSeriesError(EngineError):
    def __init__(self, series_id: str):
        super().__init__(f"unknown series id: {series_id}")
        self.series_id = series_id


class UnknownLayerError(EngineError):
    def __init__(self, layer_id: str):
        super().__init__(f"unknown layer id: {layer_id}")
        self.layer_id = layer_id


class EmptyConstraintsError(EngineError):
    def __init__(self):
        super().__init__("query has no constraints")


@dataclass(frozen=True)
class Snapshot:
    """Read-only bundle of corpus, index, and urban data for serving."""

    corpus: Corpus
    index: SignatureIndex
    layers: Mapping[str, PartitionLayer] = field(default_factory=dict)
    series: Mapping[str, TimeSeries] = field(default_factory=dict)
    root: Optional[Path] = None
    default_tau: float = 0.35
    default_theta_c: float = 0.5

    def layer_for(self, layer_id: str) -> PartitionLayer:
        try:
            return self.layers[layer_id]
        except KeyError:
            raise UnknownLayerError(layer_id) from None

    def series_for(self, series_id: str) -> TimeSeries:
        try:
            return self.series[series_id]
        except KeyError:
            raise UnknownSeriesError(series_id) from None

    def blob_bytes(self, image_id: int) -> bytes:
        """Raw image bytes for an id; missing file counts as unknown."""
        record = self.corpus.record_for(image_id)
        if self.root is None or not record.blob_ref:
            raise UnknownImageError(image_id)
        path = Path(self.root) / record.blob_ref
        if not path.is_file():
            raise UnknownImageError(image_id)
        return path.read_bytes()
