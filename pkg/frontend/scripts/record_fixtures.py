"""Record service responses as JSON fixtures for the UI unit tests.

Rebuilds a small seeded corpus, runs one scripted exchange against the
service app, and snapshots each response body verbatim. Rerun after any
wire-format change:

    python3 scripts/record_fixtures.py
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from streetlens.core import TimeInterval, parse_timestamp
from streetlens.lsh import HashFamily, SignatureIndex
from streetlens.service import create_app, load_snapshot
from streetlens.store import gen_synthetic_corpus, write_corpus
from streetlens.store.features import COARSE_DIM, REGION_DIM

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

SEED = 7
IMAGES = 40
CLUSTERS = 4
N_BITS = 256
BBOX = (-74.05, 40.55, -73.85, 40.75)
EPOCH = TimeInterval(
    parse_timestamp("2016-04-01T00:00:00Z"), parse_timestamp("2017-04-01T00:00:00Z")
)


def build_client(root: Path) -> TestClient:
    sc = gen_synthetic_corpus(SEED, IMAGES, CLUSTERS, BBOX, EPOCH)
    write_corpus(sc, root)
    index = SignatureIndex.build(
        sc.catalog.ids,
        sc.catalog.region,
        sc.catalog.coarse,
        region_family=HashFamily.create(d=REGION_DIM, n_bits=N_BITS, seed=1),
        coarse_family=HashFamily.create(d=COARSE_DIM, n_bits=N_BITS, seed=2),
    )
    index.save(root / "index")
    snapshot = load_snapshot(root, root / "index")
    return TestClient(create_app(snapshot, workspace_path=root / "workspace.jsonl"))


def snap(name: str, response) -> None:
    assert response.status_code in (200, 404), (name, response.status_code)
    FIXTURES.mkdir(parents=True, exist_ok=True)
    path = FIXTURES / f"{name}.json"
    path.write_text(json.dumps(response.json(), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path}")


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        client = build_client(Path(tmp))
        query = {"constraints": [{"image_id": 1}], "tau": 0.6}
        snap("search", client.post("/query/search", json=query))
        # tau = pi reaches every image, so every planted cluster shows up
        # and the mosaic spans two pages
        wide = {"constraints": [{"image_id": 1}], "tau": 3.14159265358979, "theta_c": 0.6}
        snap(
            "clusters_page1",
            client.post("/query/clusters", json={**wide, "page": 1, "page_size": 2}),
        )
        snap(
            "clusters_page2",
            client.post("/query/clusters", json={**wide, "page": 2, "page_size": 2}),
        )
        snap(
            "aggregate_counts",
            client.post(
                "/aggregate", json={"layer_id": "partition", "source": "image_density"}
            ),
        )
        snap(
            "aggregate_attribute",
            client.post(
                "/aggregate",
                json={
                    "layer_id": "partition",
                    "source": "attribute",
                    "attribute": "heading",
                },
            ),
        )
        snap("series", client.get("/timeseries/precipitation"))
        snap(
            "intervals",
            client.post(
                "/timeseries/precipitation/intervals",
                json={"op": ">", "threshold": 0.0},
            ),
        )
        snap("meta", client.get("/images/1/meta"))
        snap(
            "workspace_item",
            client.post(
                "/workspace",
                json={"image_id": 1, "note": "saved", "attributes": {"flag": True}},
            ),
        )
        snap("error", client.get("/images/999999/meta"))


if __name__ == "__main__":
    main()
