"""Command line entry points.

Every command emits JSON on stdout and a `{"code", "message"}` object on
stderr when it fails. Exit codes: 0 ok, 2 usage, 3 missing file,
4 malformed input, 5 engine error, 1 unexpected.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError

from .config import load_config
from .core import (
    REGION_COUNT,
    EngineError,
    FormatError,
    TimeInterval,
    parse_timestamp,
)
from .export_map import render_svg
from .lsh import HashFamily, SignatureIndex
from .lsh.index import COARSE_FAMILY_FILE, REGION_FAMILY_FILE
from .service import (
    QuerySpec,
    Snapshot,
    create_app,
    execute_search,
    hit_wire,
    load_snapshot,
    paginate,
)
from .store import (
    COARSE_DIM,
    RAW_BYTES_PER_IMAGE,
    REGION_DIM,
    gen_synthetic_corpus,
    ingest_metadata,
    load_layer,
    load_series,
    read_features,
    write_corpus,
    write_features,
)

# the synthetic corpus covers one year of one city by default
DEFAULT_BBOX = (-74.05, 40.55, -73.85, 40.75)
DEFAULT_EPOCH = ("2016-04-01T00:00:00Z", "2017-04-01T00:00:00Z")

_PATH = click.Path(path_type=Path)


def _fail(exit_code: int, code: str, message: str) -> None:
    click.echo(json.dumps({"code": code, "message": message}), err=True)
    sys.exit(exit_code)


def _guard(fn):
    """Map exceptions to the exit-code contract; click usage errors pass
    through untouched."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except FileNotFoundError as exc:
            _fail(3, "missing_file", str(exc))
        except FormatError as exc:
            _fail(4, "format_error", str(exc))
        except EngineError as exc:
            _fail(5, "engine_error", str(exc))
        except Exception as exc:  # pragma: no cover - last resort
            _fail(1, "internal_error", f"{type(exc).__name__}: {exc}")

    return wrapper


@click.group()
@click.option(
    "--config",
    "config_path",
    type=_PATH,
    default=None,
    help="Flat 'key = value' file supplying option defaults for every command.",
)
@click.pass_context
def main(ctx, config_path):
    """Explore large street-level image corpora via compact signatures."""
    if config_path is not None:
        try:
            cfg = load_config(config_path)
        except FileNotFoundError as exc:
            _fail(3, "missing_file", str(exc))
        except FormatError as exc:
            _fail(4, "format_error", str(exc))
        ctx.default_map = {name: dict(cfg) for name in main.commands}


@main.command("gen")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--images", type=int, default=1000, show_default=True)
@click.option("--clusters", type=int, default=10, show_default=True)
@click.option("--out", type=_PATH, required=True, help="Output corpus directory.")
@_guard
def gen(seed, images, clusters, out):
    """Generate a synthetic corpus (metadata, features, layer, series, blobs)."""
    epoch = TimeInterval(
        parse_timestamp(DEFAULT_EPOCH[0]), parse_timestamp(DEFAULT_EPOCH[1])
    )
    data = gen_synthetic_corpus(seed, images, clusters, DEFAULT_BBOX, epoch)
    write_corpus(data, out)
    click.echo(json.dumps({"images": images, "clusters": clusters, "out": str(out)}))


@main.command("ingest")
@click.option("--meta", type=_PATH, required=True, help="JSON-lines metadata file.")
@click.option("--features", type=_PATH, required=True, help="Binary feature file.")
@click.option("--out", type=_PATH, required=True, help="Canonical store directory.")
@_guard
def ingest(meta, features, out):
    """Validate a metadata/feature pair and write the canonical store."""
    corpus = ingest_metadata(meta)
    catalog = read_features(features)
    if not np.array_equal(np.sort(corpus.ids), np.sort(catalog.ids)):
        raise FormatError(
            f"{meta} and {features} describe different image id sets"
        )
    out.mkdir(parents=True, exist_ok=True)
    corpus.write_jsonl(out / "meta.jsonl")
    write_features(catalog, out / "features.umfv")
    click.echo(
        json.dumps(
            {
                "images": corpus.image_count,
                "vectors": corpus.image_count * (REGION_COUNT + 1),
                "out": str(out),
            }
        )
    )


@main.command("build-index")
@click.option("--features", type=_PATH, required=True)
@click.option("--index-dir", type=_PATH, required=True)
@click.option("--n-bits", type=int, default=1024, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_guard
def build_index(features, index_dir, n_bits, seed):
    """Hash a feature file into packed signatures.

    Existing hash families in the index directory are reused, so a rerun
    over the same inputs is byte-identical (and --seed is then ignored).
    """
    catalog = read_features(features)
    region_path = index_dir / REGION_FAMILY_FILE
    coarse_path = index_dir / COARSE_FAMILY_FILE
    if region_path.exists() and coarse_path.exists():
        region_family = HashFamily.load(region_path)
        coarse_family = HashFamily.load(coarse_path)
        if region_family.n_bits != n_bits:
            raise EngineError(
                f"existing index uses n_bits={region_family.n_bits}, "
                f"asked for {n_bits}"
            )
    else:
        region_family = HashFamily.create(d=REGION_DIM, n_bits=n_bits, seed=seed)
        coarse_family = HashFamily.create(d=COARSE_DIM, n_bits=n_bits, seed=seed + 1)
    index = SignatureIndex.build(
        catalog.ids, catalog.region, catalog.coarse, region_family, coarse_family
    )
    index.save(index_dir)
    click.echo(
        json.dumps(
            {"images": index.image_count, "n_bits": index.n_bits, "out": str(index_dir)}
        )
    )


@main.command("query")
@click.option("--index-dir", type=_PATH, required=True)
@click.option("--meta", type=_PATH, required=True)
@click.option(
    "--series",
    type=_PATH,
    multiple=True,
    help="Time-series CSV usable in temporal predicates (repeatable).",
)
@click.option("--spec", "spec_path", type=_PATH, required=True, help="Query JSON file.")
@click.option("--tau", type=float, default=None, help="Override the spec's tau.")
@_guard
def query(index_dir, meta, series, spec_path, tau):
    """Run one search; output matches POST /query/search byte for byte."""
    corpus = ingest_metadata(meta)
    index = SignatureIndex.load(index_dir)
    loaded = {}
    for path in series:
        ts = load_series(path)
        loaded[ts.series_id] = ts
    snapshot = Snapshot(corpus=corpus, index=index, series=loaded, root=meta.parent)
    doc = _read_json(spec_path)
    try:
        spec = QuerySpec.model_validate(doc)
    except ValidationError as exc:
        raise FormatError(f"{spec_path}: {exc.errors()[0]['msg']}") from None
    if tau is not None:
        spec = spec.model_copy(update={"tau": tau})
    hits = execute_search(snapshot, spec)
    page_hits, total = paginate(hits, spec.page, spec.page_size)
    click.echo(
        json.dumps(
            {
                "total": total,
                "page": spec.page,
                "page_size": spec.page_size,
                "hits": [hit_wire(snapshot, h) for h in page_hits],
            }
        )
    )


@main.command("stats")
@click.option("--features", type=_PATH, default=None)
@click.option("--index-dir", type=_PATH, default=None)
@_guard
def stats(features, index_dir):
    """Report storage footprint: per-signature bytes, per-image bytes, ratio."""
    if features is None and index_dir is None:
        raise EngineError("need --features and/or --index-dir")
    body = {"signatures_per_image": REGION_COUNT + 1}
    n_bits = 1024
    if index_dir is not None:
        index = SignatureIndex.load(index_dir)
        n_bits = index.n_bits
        body["images"] = index.image_count
        body["index_file_bytes"] = sum(
            p.stat().st_size for p in sorted(index_dir.iterdir()) if p.is_file()
        )
    if features is not None:
        catalog = read_features(features)
        body["images"] = int(catalog.ids.shape[0])
        body["features_file_bytes"] = features.stat().st_size
    body["n_bits"] = n_bits
    body["bytes_per_signature"] = n_bits // 8
    body["signature_bytes_per_image"] = (REGION_COUNT + 1) * (n_bits // 8)
    body["raw_bytes_per_image"] = RAW_BYTES_PER_IMAGE
    body["compression_ratio"] = RAW_BYTES_PER_IMAGE / body["signature_bytes_per_image"]
    click.echo(json.dumps(body))


@main.command("serve")
@click.option("--meta", type=_PATH, required=True, help="meta.jsonl of the corpus.")
@click.option("--index-dir", type=_PATH, required=True)
@click.option("--tau", type=float, default=0.35, show_default=True)
@click.option("--theta", type=float, default=0.5, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option(
    "--workspace",
    type=_PATH,
    default=None,
    help="Workspace file [default: <corpus>/workspace.jsonl].",
)
@_guard
def serve(meta, index_dir, tau, theta, host, port, workspace):
    """Serve the HTTP JSON API over one corpus snapshot."""
    import uvicorn

    corpus_dir = meta.parent
    snapshot = load_snapshot(
        corpus_dir, index_dir, default_tau=tau, default_theta_c=theta
    )
    app = create_app(
        snapshot,
        workspace_path=workspace or corpus_dir / "workspace.jsonl",
    )
    uvicorn.run(app, host=host, port=port)


@main.command("export-map")
@click.option("--layer", "layer_path", type=_PATH, required=True, help="GeoJSON layer.")
@click.option(
    "--aggregate",
    "aggregate_path",
    type=_PATH,
    default=None,
    help="Aggregation JSON (service response or plain value list) shading polygons.",
)
@click.option(
    "--points",
    "points_path",
    type=_PATH,
    default=None,
    help="Highlight points: [[lon, lat], ...] or a workspace export.",
)
@click.option("--out", type=_PATH, required=True, help="Output SVG file.")
@_guard
def export_map(layer_path, aggregate_path, points_path, out):
    """Render a layer, optional per-polygon values, and points to SVG."""
    layer = load_layer(layer_path)
    values = None
    if aggregate_path is not None:
        doc = _read_json(aggregate_path)
        if isinstance(doc, dict):
            values = [b["count"] for b in doc["buckets"]]
        else:
            values = list(doc)
    points = []
    if points_path is not None:
        doc = _read_json(points_path)
        rows = doc["items"] if isinstance(doc, dict) else doc
        for row in rows:
            if isinstance(row, dict):
                points.append((row["lon"], row["lat"]))
            else:
                points.append((row[0], row[1]))
    out.write_text(render_svg(layer, values=values, points=points))
    click.echo(
        json.dumps(
            {"polygons": layer.polygon_count, "points": len(points), "out": str(out)}
        )
    )


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


if __name__ == "__main__":
    main()
