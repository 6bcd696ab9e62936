"""Assemble a read-only snapshot from an on-disk corpus and index."""

from __future__ import annotations

from pathlib import Path
from typing import Union

from ..lsh import SignatureIndex
from ..store import ingest_metadata, load_layer, load_series
from .snapshot import Snapshot


def load_snapshot(
    corpus_dir: Union[str, Path],
    index_dir: Union[str, Path],
    default_tau: float = 0.35,
    default_theta_c: float = 0.5,
) -> Snapshot:
    """Load metadata, signatures, and every sidecar layer/series found in
    ``corpus_dir`` (`*.geojson` and `*.csv` at the top level)."""
    corpus_dir = Path(corpus_dir)
    corpus = ingest_metadata(corpus_dir / "meta.jsonl")
    index = SignatureIndex.load(index_dir)
    layers = {}
    for path in sorted(corpus_dir.glob("*.geojson")):
        layer = load_layer(path)
        layers[layer.layer_id] = layer
    series = {}
    for path in sorted(corpus_dir.glob("*.csv")):
        ts = load_series(path)
        series[ts.series_id] = ts
    return Snapshot(
        corpus=corpus,
        index=index,
        layers=layers,
        series=series,
        root=corpus_dir,
        default_tau=default_tau,
        default_theta_c=default_theta_c,
    )
