"""Image metadata: JSON-lines ingestion and the timestamp-sorted corpus.

Records sort by (timestamp, id); the timestamp order enables the coarse
temporal query (binary search over contiguous ranges), the id tie-break
makes reruns byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..core import (
    DuplicateIdError,
    FormatError,
    ImageRecord,
    UnknownImageError,
)


class Corpus:
    """Immutable, timestamp-sorted view of a corpus' image records."""

    def __init__(self, records: Sequence[ImageRecord]):
        ordered = sorted(records, key=lambda r: (r.timestamp, r.id))
        seen = set()
        for r in ordered:
            if r.id in seen:
                raise DuplicateIdError(r.id)
            seen.add(r.id)
        self.records: Tuple[ImageRecord, ...] = tuple(ordered)
        self.timestamps = np.array([r.timestamp for r in ordered], dtype=np.int64)
        self.ids = np.array([r.id for r in ordered], dtype=np.int64)
        self.lats = np.array([r.location.lat for r in ordered], dtype=np.float64)
        self.lons = np.array([r.location.lon for r in ordered], dtype=np.float64)
        self._by_id = {r.id: r for r in ordered}

    @property
    def image_count(self) -> int:
        return len(self.records)

    @property
    def epoch_bounds(self) -> Tuple[int, int]:
        """(min timestamp, max timestamp); only valid for non-empty corpora."""
        if not self.records:
            raise UnknownImageError(-1)
        return int(self.timestamps[0]), int(self.timestamps[-1])

    def record_for(self, image_id: int) -> ImageRecord:
        try:
            return self._by_id[image_id]
        except KeyError:
            raise UnknownImageError(image_id) from None

    def __contains__(self, image_id: int) -> bool:
        return image_id in self._by_id

    def write_jsonl(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for r in self.records:
                f.write(json.dumps(r.to_json_dict()) + "\n")


def ingest_metadata(path: Union[str, Path]) -> Corpus:
    """Parse a JSON-lines metadata file into a timestamp-sorted corpus."""
    path = Path(path)
    records: List[ImageRecord] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                records.append(ImageRecord.from_json_dict(obj))
            except (ValueError, KeyError, TypeError) as exc:
                # DuplicateIdError is raised later with the id; everything
                # wrong within a single line is a format problem here
                raise FormatError(f"{path}: line {lineno}: {exc}") from None
    return Corpus(records)
