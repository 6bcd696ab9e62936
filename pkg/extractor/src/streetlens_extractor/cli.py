"""Standalone extraction command: image directory in, feature file out."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import click
import numpy as np
from PIL import Image, UnidentifiedImageError

from .features import write_metadata_stub, write_umfv
from .model import DescriptorModel, ExtractionConfig, describe_images

log = logging.getLogger("streetlens_extractor")

_IMAGE_SUFFIXES = {".bmp", ".jpg", ".jpeg", ".png", ".gif", ".tif", ".tiff", ".webp"}


def decode_image(path: Path) -> Optional[np.ndarray]:
    """uint8 HxWx3 pixels, or None if the file is not a decodable image."""
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError):
        return None


def collect_images(image_dir: Path) -> Tuple[List[Tuple[int, Path]], List[str]]:
    """(id, path) pairs for numeric-stem image files; the rest is skipped."""
    found: List[Tuple[int, Path]] = []
    skipped: List[str] = []
    for path in sorted(image_dir.iterdir()):
        if not path.is_file() or path.suffix.lower() not in _IMAGE_SUFFIXES:
            continue
        if not path.stem.isdigit():
            skipped.append(path.name)
            log.warning("skipping %s: file name is not a numeric image id", path.name)
            continue
        found.append((int(path.stem), path))
    found.sort()
    ids = [i for i, _ in found]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise click.ClickException(f"duplicate image ids: {dupes}")
    return found, skipped


def run_extraction(image_dir: Path, config: ExtractionConfig):
    """(ids, region, coarse, blob_refs, skipped names) for one directory."""
    found, skipped = collect_images(image_dir)
    ids: List[int] = []
    refs: List[str] = []
    pixels: List[np.ndarray] = []
    for image_id, path in found:
        decoded = decode_image(path)
        if decoded is None:
            skipped.append(path.name)
            log.warning("skipping image %d: undecodable file %s", image_id, path.name)
            continue
        ids.append(image_id)
        refs.append(path.name)
        pixels.append(decoded)
    if not ids:
        raise click.ClickException(f"no decodable images in {image_dir}")
    model = DescriptorModel(config)
    region, coarse = describe_images(model, pixels)
    return np.asarray(ids, dtype=np.int64), region, coarse, refs, skipped


@click.command("streetlens-extract")
@click.option(
    "--images",
    "image_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    required=True,
)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option(
    "--meta",
    type=click.Path(path_type=Path),
    default=None,
    help="Also write a JSON-lines metadata stub.",
)
@click.option(
    "--weights",
    default="random",
    show_default=True,
    help="'random' (seeded init), 'pretrained', or a state_dict path.",
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--resize", type=int, default=224, show_default=True)
@click.option("--batch", "batch_size", type=int, default=16, show_default=True)
def main(image_dir, out, meta, weights, seed, resize, batch_size):
    """Extract per-region and whole-scene descriptors into a feature file."""
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(message)s")
    config = ExtractionConfig(
        weights=weights, seed=seed, resize=resize, batch_size=batch_size
    )
    ids, region, coarse, refs, skipped = run_extraction(image_dir, config)
    write_umfv(out, ids, region, coarse)
    if meta is not None:
        write_metadata_stub(meta, ids.tolist(), refs)
    click.echo(
        json.dumps(
            {"images": int(ids.shape[0]), "skipped": sorted(skipped), "out": str(out)}
        )
    )


if __name__ == "__main__":
    main()
