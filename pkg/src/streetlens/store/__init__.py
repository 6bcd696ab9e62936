"""Persistence and ingestion: feature files, metadata, urban datasets, and
the synthetic corpus generator."""

from .features import (
    COARSE_DIM,
    RAW_BYTES_PER_IMAGE,
    REGION_DIM,
    FeatureCatalog,
    read_features,
    write_features,
)
from .metadata import Corpus, ingest_metadata
from .synthetic import SyntheticCorpus, gen_synthetic_corpus, make_bmp, write_corpus
from .urban import (
    PartitionLayer,
    TimeSeries,
    layer_from_geojson,
    load_layer,
    load_series,
    save_layer,
    save_series,
)

__all__ = [
    "COARSE_DIM",
    "RAW_BYTES_PER_IMAGE",
    "REGION_DIM",
    "Corpus",
    "FeatureCatalog",
    "PartitionLayer",
    "SyntheticCorpus",
    "TimeSeries",
    "gen_synthetic_corpus",
    "ingest_metadata",
    "layer_from_geojson",
    "load_layer",
    "load_series",
    "make_bmp",
    "read_features",
    "save_layer",
    "save_series",
    "write_corpus",
    "write_features",
]
