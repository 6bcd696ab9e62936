"""Descriptor extraction for the image-exploration engine's feature format."""

from .features import (
    COARSE_DIM,
    GRID_CELLS,
    REGION_COUNT,
    REGION_DIM,
    write_metadata_stub,
    write_umfv,
)
from .model import DescriptorModel, ExtractionConfig, describe_images, region_crops

__all__ = [
    "COARSE_DIM",
    "GRID_CELLS",
    "REGION_COUNT",
    "REGION_DIM",
    "DescriptorModel",
    "ExtractionConfig",
    "describe_images",
    "region_crops",
    "write_metadata_stub",
    "write_umfv",
]
