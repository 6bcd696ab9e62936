"""Saved-image workspace, persisted as JSON lines beside the corpus."""

import csv
import io
import json
import threading
from pathlib import Path
from typing import Dict, List

from ..core import format_timestamp
from ..store import Corpus

__all__ = ["Workspace"]

_FIXED_COLUMNS = ["id", "timestamp", "lat", "lon", "note"]


class Workspace:
    """Append-only store of saved images with notes and attribute snapshots.

    Items live in memory and are appended to a JSON-lines file under a
    lock, so concurrent requests serialize through a single writer and a
    restart replays the file.
    """

    def __init__(self, path: Path, corpus: Corpus):
        self._path = Path(path)
        self._corpus = corpus
        self._lock = threading.Lock()
        self._items: List[dict] = []
        if self._path.is_file():
            for line in self._path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._items.append(json.loads(line))

    def add(self, image_id: int, note: str = "", attributes: Dict = None) -> dict:
        record = self._corpus.record_for(image_id)
        item = {
            "image_id": record.id,
            "timestamp": format_timestamp(record.timestamp),
            "lat": record.location.lat,
            "lon": record.location.lon,
            "note": note,
            "attributes": dict(attributes or {}),
        }
        with self._lock:
            self._items.append(item)
            with open(self._path, "a", encoding="utf-8") as f:
                f.write(json.dumps(item, sort_keys=True) + "\n")
        return item

    def items(self) -> List[dict]:
        with self._lock:
            return [dict(item) for item in self._items]

    def export_csv(self) -> str:
        """One row per item; fixed columns then sorted attribute keys."""
        items = self.items()
        attr_keys = sorted({k for item in items for k in item["attributes"]})
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(_FIXED_COLUMNS + attr_keys)
        for item in items:
            writer.writerow(
                [
                    item["image_id"],
                    item["timestamp"],
                    item["lat"],
                    item["lon"],
                    item["note"],
                ]
                + [item["attributes"].get(k, "") for k in attr_keys]
            )
        return buf.getvalue()

    def export_json(self) -> dict:
        return {"items": self.items()}
