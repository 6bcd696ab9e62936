"""Raw descriptor storage: the in-memory catalog and its binary file format.

Per image the catalog holds 20 region vectors (4096-d, fixed region order:
2x2 row-major then 4x4 row-major) and one coarse 512-d vector. The file
format is a fixed-layout little-endian dump: an 8-byte header then one
329,736-byte block per image (8-byte id + the 329,728 raw vector bytes).
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ..core import (
    COARSE_CODE,
    REGION_COUNT,
    DuplicateIdError,
    FormatError,
    InvalidParameterError,
)

REGION_DIM = 4096
COARSE_DIM = 512

# Raw float32 payload per image: 20 region vectors + 1 coarse vector.
RAW_BYTES_PER_IMAGE = (REGION_COUNT * REGION_DIM + COARSE_DIM) * 4

_UMFV_MAGIC = b"UMFV"
_UMFV_HEADER = struct.Struct("<4sHH")
_BLOCK_DTYPE = np.dtype(
    [
        ("id", "<u8"),
        ("region", "<f4", (REGION_COUNT, REGION_DIM)),
        ("coarse", "<f4", (COARSE_DIM,)),
    ]
)

# Images per validation/write chunk; bounds temporaries to ~100 MB.
_CHUNK = 256


class FeatureCatalog:
    """All raw descriptors of a corpus, ordered by ascending image id."""

    def __init__(self, ids: np.ndarray, region: np.ndarray, coarse: np.ndarray):
        ids = np.ascontiguousarray(ids, dtype=np.int64)
        region = np.ascontiguousarray(region, dtype=np.float32)
        coarse = np.ascontiguousarray(coarse, dtype=np.float32)
        m = ids.shape[0]
        if region.shape != (m, REGION_COUNT, REGION_DIM):
            raise InvalidParameterError(
                f"region array shape {region.shape} != ({m}, {REGION_COUNT}, {REGION_DIM})"
            )
        if coarse.shape != (m, COARSE_DIM):
            raise InvalidParameterError(
                f"coarse array shape {coarse.shape} != ({m}, {COARSE_DIM})"
            )
        uniq, counts = np.unique(ids, return_counts=True)
        if uniq.shape[0] != m:
            raise DuplicateIdError(int(uniq[counts > 1][0]))
        order = np.argsort(ids, kind="stable")
        if not np.array_equal(order, np.arange(m)):
            ids = ids[order]
            region = region[order]
            coarse = coarse[order]
        for lo in range(0, m, _CHUNK):
            hi = min(lo + _CHUNK, m)
            r = region[lo:hi]
            c = coarse[lo:hi]
            if not (np.isfinite(r).all() and np.isfinite(c).all()):
                raise InvalidParameterError("feature vectors must be finite")
            if (np.abs(r).max(axis=2) == 0).any() or (
                np.abs(c).max(axis=1) == 0
            ).any():
                raise InvalidParameterError(
                    "all-zero feature vector (angle undefined)"
                )
        self.ids = ids
        self.region = region
        self.coarse = coarse

    @property
    def image_count(self) -> int:
        return int(self.ids.shape[0])

    @property
    def vector_count(self) -> int:
        """Global vector count: 21 per image (20 regions + 1 coarse)."""
        return self.image_count * (REGION_COUNT + 1)

    def provenance(self, vector_index: int) -> Tuple[int, int]:
        """Map a global vector index to (image id, region code).

        Vectors enumerate image-major: codes 0..19 then the coarse vector
        (code 20) for each image in ascending id order.
        """
        per = REGION_COUNT + 1
        if not 0 <= vector_index < self.vector_count:
            raise InvalidParameterError(
                f"vector index {vector_index} outside [0, {self.vector_count})"
            )
        img_row, slot = divmod(vector_index, per)
        code = slot if slot < REGION_COUNT else COARSE_CODE
        return int(self.ids[img_row]), code

    def row_of(self, image_id: int) -> int:
        pos = int(np.searchsorted(self.ids, image_id))
        if pos >= self.image_count or self.ids[pos] != image_id:
            raise InvalidParameterError(f"image id {image_id} not in catalog")
        return pos


def write_features(catalog: FeatureCatalog, path: Union[str, Path]) -> None:
    """Write the catalog to its binary file; blocks in ascending id order."""
    path = Path(path)
    with open(path, "wb") as f:
        f.write(_UMFV_HEADER.pack(_UMFV_MAGIC, 1, 0))
        m = catalog.image_count
        for lo in range(0, m, _CHUNK):
            hi = min(lo + _CHUNK, m)
            block = np.empty(hi - lo, dtype=_BLOCK_DTYPE)
            block["id"] = catalog.ids[lo:hi]
            block["region"] = catalog.region[lo:hi]
            block["coarse"] = catalog.coarse[lo:hi]
            f.write(block.tobytes())


def read_features(path: Union[str, Path]) -> FeatureCatalog:
    """Read a feature file back into a catalog; bit-exact round trip."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _UMFV_HEADER.size:
        raise FormatError(f"{path}: too short for a feature-file header")
    magic, version, _reserved = _UMFV_HEADER.unpack_from(data)
    if magic != _UMFV_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version}")
    body = len(data) - _UMFV_HEADER.size
    if body % _BLOCK_DTYPE.itemsize != 0:
        raise FormatError(
            f"{path}: body size {body} is not a multiple of the "
            f"{_BLOCK_DTYPE.itemsize}-byte image block (truncated?)"
        )
    count = body // _BLOCK_DTYPE.itemsize
    blocks = np.frombuffer(data, dtype=_BLOCK_DTYPE, count=count,
                           offset=_UMFV_HEADER.size)
    return FeatureCatalog(
        blocks["id"].astype(np.int64),
        blocks["region"],
        blocks["coarse"],
    )
