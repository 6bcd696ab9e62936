"""The binary feature-file format and the fixed region grid.

This package talks to the engine only through its documented file
formats: the UMFV feature file written here and the JSON-lines metadata
stub. Layout: 8-byte header (magic ``UMFV``, version u16 = 1, reserved
u16 = 0), then per-image blocks in ascending id order of
8 (id, u64 LE) + 20*4096*4 (region vectors, f4 LE, row-major) +
512*4 (coarse vector, f4 LE) bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

REGION_DIM = 4096
COARSE_DIM = 512
REGION_COUNT = 20

_HEADER = struct.Struct("<4sHH")
_MAGIC = b"UMFV"
_BLOCK_DTYPE = np.dtype(
    [
        ("id", "<u8"),
        ("region", "<f4", (REGION_COUNT, REGION_DIM)),
        ("coarse", "<f4", (COARSE_DIM,)),
    ]
)

# Serial cell order: 2x2 row-major (codes 0-3), then 4x4 row-major
# (codes 4-19), in normalized (x0, y0, x1, y1) image coordinates with the
# origin at the top-left corner.
GRID_CELLS: Tuple[Tuple[float, float, float, float], ...] = tuple(
    (col / n, row / n, (col + 1) / n, (row + 1) / n)
    for n in (2, 4)
    for row in range(n)
    for col in range(n)
)
assert len(GRID_CELLS) == REGION_COUNT


def write_umfv(
    path: Union[str, Path],
    ids: Sequence[int],
    region: np.ndarray,
    coarse: np.ndarray,
) -> None:
    """Write one feature file; blocks are emitted in ascending id order."""
    ids = np.asarray(ids, dtype=np.int64)
    m = ids.shape[0]
    if region.shape != (m, REGION_COUNT, REGION_DIM):
        raise ValueError(f"region array shape {region.shape}")
    if coarse.shape != (m, COARSE_DIM):
        raise ValueError(f"coarse array shape {coarse.shape}")
    order = np.argsort(ids, kind="stable")
    block = np.empty(m, dtype=_BLOCK_DTYPE)
    block["id"] = ids[order]
    block["region"] = region[order]
    block["coarse"] = coarse[order]
    with open(path, "wb") as f:
        f.write(_HEADER.pack(_MAGIC, 1, 0))
        f.write(block.tobytes())


def write_metadata_stub(
    path: Union[str, Path], ids: Sequence[int], blob_refs: Sequence[str]
) -> None:
    """Placeholder metadata the engine can ingest; capture fields are
    zeroed for later enrichment."""
    rows: List[str] = []
    for image_id, ref in sorted(zip(ids, blob_refs)):
        rows.append(
            json.dumps(
                {
                    "id": int(image_id),
                    "timestamp": "1970-01-01T00:00:00Z",
                    "lat": 0.0,
                    "lon": 0.0,
                    "heading": 0.0,
                    "camera_id": 0,
                    "vehicle_id": 0,
                    "blob_ref": ref,
                }
            )
        )
    Path(path).write_text("\n".join(rows) + ("\n" if rows else ""), encoding="utf-8")
