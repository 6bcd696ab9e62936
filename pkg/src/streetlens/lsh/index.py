"""Corpus-wide signature index and the search operations over it.

Layout: per image, 20 region signatures stored image-major in fixed region
order (codes 0..19), plus one coarse signature. Search semantics: an image
matches when the minimum estimated angle over (query signature x its 20
region signatures) is at or below tau; ranking is by that minimum
ascending, ties broken by image id. Ties among (query, region) pairs
prefer the earlier query signature, then the lower region code.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from ..core import (
    COARSE_CODE,
    REGION_COUNT,
    REGION_IDS,
    DuplicateIdError,
    FormatError,
    InvalidParameterError,
    UnknownImageError,
)
from .projection import HashFamily
from .signatures import Signature, hamming_to_many

_UMSG_MAGIC = b"UMSG"
_UMSG_HEADER = struct.Struct("<4sHIQ")
_PROVENANCE_DTYPE = np.dtype([("id", "<u8"), ("code", "u1")])

REGION_FAMILY_FILE = "family_regions.umhf"
COARSE_FAMILY_FILE = "family_coarse.umhf"
REGION_SIG_FILE = "signatures_regions.umsg"
COARSE_SIG_FILE = "signatures_coarse.umsg"

# Images per scan block; blocks are fixed so the parallel merge is
# independent of worker count.
_BLOCK_IMAGES = 8192


@dataclass(frozen=True)
class Hit:
    """One matching image: its id, the best-pair estimate, and which
    (query signature, corpus region) pair achieved it."""

    image_id: int
    angle: float
    query_code: int
    corpus_code: int


def write_signature_file(
    path: Union[str, Path],
    words: np.ndarray,
    image_ids: np.ndarray,
    region_codes: np.ndarray,
    n_bits: int,
) -> None:
    """Write one packed-signature array with its parallel provenance."""
    words = np.ascontiguousarray(words, dtype="<u8")
    count = words.shape[0]
    if words.ndim != 2 or words.shape[1] * 64 != n_bits:
        raise InvalidParameterError(
            f"words shape {words.shape} inconsistent with n_bits={n_bits}"
        )
    if image_ids.shape != (count,) or region_codes.shape != (count,):
        raise InvalidParameterError("provenance arrays must align with signatures")
    prov = np.empty(count, dtype=_PROVENANCE_DTYPE)
    prov["id"] = image_ids
    prov["code"] = region_codes
    with open(path, "wb") as f:
        f.write(_UMSG_HEADER.pack(_UMSG_MAGIC, 1, n_bits, count))
        f.write(words.tobytes())
        f.write(prov.tobytes())


def read_signature_file(
    path: Union[str, Path],
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Read a signature file; returns (words, image_ids, region_codes, n_bits)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _UMSG_HEADER.size:
        raise FormatError(f"{path}: too short for a signature header")
    magic, version, n_bits, count = _UMSG_HEADER.unpack_from(data)
    if magic != _UMSG_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version}")
    if n_bits <= 0 or n_bits % 64 != 0:
        raise FormatError(f"{path}: invalid signature width {n_bits}")
    sig_bytes = count * (n_bits // 8)
    expected = _UMSG_HEADER.size + sig_bytes + count * _PROVENANCE_DTYPE.itemsize
    if len(data) != expected:
        raise FormatError(
            f"{path}: size {len(data)} != expected {expected} "
            f"(truncated or trailing bytes)"
        )
    words = (
        np.frombuffer(data, dtype="<u8", count=count * (n_bits // 64),
                      offset=_UMSG_HEADER.size)
        .reshape(count, n_bits // 64)
        .copy()
    )
    prov = np.frombuffer(
        data, dtype=_PROVENANCE_DTYPE, count=count,
        offset=_UMSG_HEADER.size + sig_bytes,
    )
    return words, prov["id"].astype(np.int64), prov["code"].astype(np.uint8), n_bits


class SignatureIndex:
    """All region and coarse signatures of a corpus plus their hash families.

    image_ids are strictly ascending; region_words row 20*i + c holds the
    signature of image image_ids[i], region code c; coarse_words row i holds
    its whole-scene signature.
    """

    def __init__(
        self,
        image_ids: np.ndarray,
        region_words: np.ndarray,
        coarse_words: np.ndarray,
        region_family: HashFamily,
        coarse_family: HashFamily,
    ):
        image_ids = np.ascontiguousarray(image_ids, dtype=np.int64)
        region_words = np.ascontiguousarray(region_words, dtype=np.uint64)
        coarse_words = np.ascontiguousarray(coarse_words, dtype=np.uint64)
        m = image_ids.shape[0]
        if m > 1 and not (np.diff(image_ids) > 0).all():
            raise InvalidParameterError("image ids must be strictly ascending")
        if region_family.n_bits != coarse_family.n_bits:
            raise InvalidParameterError(
                "region and coarse families must share a signature width"
            )
        n_words = region_family.n_bits // 64
        if region_words.shape != (REGION_COUNT * m, n_words):
            raise InvalidParameterError(
                f"region signature array shape {region_words.shape} != "
                f"({REGION_COUNT * m}, {n_words})"
            )
        if coarse_words.shape != (m, n_words):
            raise InvalidParameterError(
                f"coarse signature array shape {coarse_words.shape} != ({m}, {n_words})"
            )
        self.image_ids = image_ids
        self.region_words = region_words
        self.coarse_words = coarse_words
        self.region_family = region_family
        self.coarse_family = coarse_family

    @property
    def n_bits(self) -> int:
        return self.region_family.n_bits

    @property
    def image_count(self) -> int:
        return int(self.image_ids.shape[0])

    @classmethod
    def build(
        cls,
        image_ids: np.ndarray,
        region_vectors: np.ndarray,
        coarse_vectors: np.ndarray,
        region_family: HashFamily,
        coarse_family: HashFamily,
    ) -> "SignatureIndex":
        """Hash a catalog's raw vectors; images are sorted by id."""
        image_ids = np.asarray(image_ids, dtype=np.int64)
        m = image_ids.shape[0]
        if np.unique(image_ids).shape[0] != m:
            ids, counts = np.unique(image_ids, return_counts=True)
            raise DuplicateIdError(int(ids[counts > 1][0]))
        region_vectors = np.asarray(region_vectors)
        coarse_vectors = np.asarray(coarse_vectors)
        if region_vectors.shape[:2] != (m, REGION_COUNT):
            raise InvalidParameterError(
                f"region vectors shape {region_vectors.shape} != "
                f"({m}, {REGION_COUNT}, d)"
            )
        if coarse_vectors.shape[0] != m:
            raise InvalidParameterError("coarse vectors misaligned with image ids")
        order = np.argsort(image_ids, kind="stable")
        image_ids = image_ids[order]
        d = region_vectors.shape[2]
        region_words = region_family.hash(
            region_vectors[order].reshape(m * REGION_COUNT, d)
        )
        coarse_words = coarse_family.hash(coarse_vectors[order])
        return cls(image_ids, region_words, coarse_words, region_family, coarse_family)

    # -- queries ----------------------------------------------------------

    def _query_words(self, query: Sequence[Signature]) -> np.ndarray:
        if len(query) == 0:
            raise InvalidParameterError("query needs at least one signature")
        for s in query:
            if s.n_bits != self.n_bits:
                raise InvalidParameterError(
                    f"query signature width {s.n_bits} != index width {self.n_bits}"
                )
            if (
                s.family_digest is not None
                and s.family_digest != self.region_family.digest
            ):
                raise InvalidParameterError(
                    "query signature comes from a different hash family"
                )
        return np.stack([s.words for s in query])

    def _scan_block(
        self, qwords: np.ndarray, img_lo: int, img_hi: int
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Best (distance, pair) per image for one contiguous image block."""
        q = qwords.shape[0]
        ni = img_hi - img_lo
        rows = self.region_words[img_lo * REGION_COUNT : img_hi * REGION_COUNT]
        dists = np.empty((q, ni * REGION_COUNT), dtype=np.int64)
        for i in range(q):
            dists[i] = hamming_to_many(qwords[i], rows)
        # per-image row: query-major then region code, so argmin's
        # first-occurrence rule prefers earlier query, then lower code
        flat = (
            dists.reshape(q, ni, REGION_COUNT)
            .transpose(1, 0, 2)
            .reshape(ni, q * REGION_COUNT)
        )
        pos = flat.argmin(axis=1)
        best = flat[np.arange(ni), pos]
        return best, pos

    def _scan(
        self, qwords: np.ndarray, workers: int = 1
    ) -> Tuple[np.ndarray, np.ndarray]:
        m = self.image_count
        blocks = [
            (lo, min(lo + _BLOCK_IMAGES, m)) for lo in range(0, m, _BLOCK_IMAGES)
        ]
        if workers <= 1 or len(blocks) <= 1:
            parts = [self._scan_block(qwords, lo, hi) for lo, hi in blocks]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(
                    pool.map(lambda b: self._scan_block(qwords, b[0], b[1]), blocks)
                )
        if not parts:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        best = np.concatenate([p[0] for p in parts])
        pos = np.concatenate([p[1] for p in parts])
        return best, pos

    def search(
        self,
        query: Sequence[Signature],
        tau: float,
        k: Optional[int] = None,
        filter_ids: Optional[Iterable[int]] = None,
        workers: int = 1,
    ) -> List[Hit]:
        """Threshold search over all region signatures.

        filter_ids=None means no filter; an empty set means an empty result.
        """
        if not 0.0 < tau <= math.pi:
            raise InvalidParameterError(f"tau {tau} outside (0, pi]")
        if k is not None and k < 1:
            raise InvalidParameterError(f"k must be positive, got {k}")
        qwords = self._query_words(query)
        best, pos = self._scan(qwords, workers=workers)
        angles = math.pi * best / self.n_bits
        mask = angles <= tau
        if filter_ids is not None:
            allowed = np.fromiter(
                (int(i) for i in filter_ids), dtype=np.int64, count=-1
            )
            mask &= np.isin(self.image_ids, allowed)
        idx = np.flatnonzero(mask)
        order = np.lexsort((self.image_ids[idx], best[idx]))
        idx = idx[order]
        if k is not None:
            idx = idx[:k]
        return [
            Hit(
                image_id=int(self.image_ids[i]),
                angle=math.pi * int(best[i]) / self.n_bits,
                query_code=int(pos[i]) // REGION_COUNT,
                corpus_code=int(pos[i]) % REGION_COUNT,
            )
            for i in idx
        ]

    def intersect_search(
        self,
        groups: Sequence[Sequence[Signature]],
        tau: float,
        k: Optional[int] = None,
        filter_ids: Optional[Iterable[int]] = None,
        workers: int = 1,
    ) -> List[Hit]:
        """Images matching every group; ranked by the worst per-group
        minimum angle ascending, ties by image id. The reported pair is the
        one from the worst group."""
        if len(groups) == 0:
            raise InvalidParameterError("intersection needs at least one group")
        if not 0.0 < tau <= math.pi:
            raise InvalidParameterError(f"tau {tau} outside (0, pi]")
        if k is not None and k < 1:
            raise InvalidParameterError(f"k must be positive, got {k}")
        worst_best: Optional[np.ndarray] = None
        worst_pos: Optional[np.ndarray] = None
        mask = np.ones(self.image_count, dtype=bool)
        for group in groups:
            qwords = self._query_words(group)
            best, pos = self._scan(qwords, workers=workers)
            mask &= math.pi * best / self.n_bits <= tau
            if worst_best is None:
                worst_best, worst_pos = best, pos
            else:
                take = best > worst_best
                worst_best = np.where(take, best, worst_best)
                worst_pos = np.where(take, pos, worst_pos)
        if filter_ids is not None:
            allowed = np.fromiter(
                (int(i) for i in filter_ids), dtype=np.int64, count=-1
            )
            mask &= np.isin(self.image_ids, allowed)
        idx = np.flatnonzero(mask)
        order = np.lexsort((self.image_ids[idx], worst_best[idx]))
        idx = idx[order]
        if k is not None:
            idx = idx[:k]
        return [
            Hit(
                image_id=int(self.image_ids[i]),
                angle=math.pi * int(worst_best[i]) / self.n_bits,
                query_code=int(worst_pos[i]) // REGION_COUNT,
                corpus_code=int(worst_pos[i]) % REGION_COUNT,
            )
            for i in idx
        ]

    def _row_of(self, image_id: int) -> int:
        pos = int(np.searchsorted(self.image_ids, image_id))
        if pos >= self.image_count or self.image_ids[pos] != image_id:
            raise UnknownImageError(image_id)
        return pos

    def crop_to_query(
        self, image_id: int, crop: Tuple[float, float, float, float]
    ) -> List[Signature]:
        """Stored region signatures whose grid cell overlaps the crop with
        positive area, in ascending region-code order."""
        x0, y0, x1, y1 = (min(1.0, max(0.0, float(c))) for c in crop)
        if x1 <= x0 or y1 <= y0:
            raise InvalidParameterError(f"crop rectangle {crop} has no area")
        row = self._row_of(int(image_id))
        out = []
        for region in REGION_IDS:
            cx0, cy0, cx1, cy1 = region.cell_rect()
            if min(x1, cx1) > max(x0, cx0) and min(y1, cy1) > max(y0, cy0):
                out.append(
                    Signature(
                        words=self.region_words[row * REGION_COUNT + region.code],
                        n_bits=self.n_bits,
                        image_id=int(image_id),
                        region_code=region.code,
                        family_digest=self.region_family.digest,
                    )
                )
        return out

    def coarse_signature(self, image_id: int) -> Signature:
        row = self._row_of(int(image_id))
        return Signature(
            words=self.coarse_words[row],
            n_bits=self.n_bits,
            image_id=int(image_id),
            region_code=COARSE_CODE,
            family_digest=self.coarse_family.digest,
        )

    def coarse_rows(self, image_ids: Sequence[int]) -> np.ndarray:
        """Coarse signature words for the given ids, in the given order."""
        rows = np.fromiter((self._row_of(int(i)) for i in image_ids), dtype=np.int64)
        return self.coarse_words[rows]

    # -- persistence ------------------------------------------------------

    def save(self, index_dir: Union[str, Path]) -> None:
        index_dir = Path(index_dir)
        index_dir.mkdir(parents=True, exist_ok=True)
        self.region_family.save(index_dir / REGION_FAMILY_FILE)
        self.coarse_family.save(index_dir / COARSE_FAMILY_FILE)
        write_signature_file(
            index_dir / REGION_SIG_FILE,
            self.region_words,
            np.repeat(self.image_ids, REGION_COUNT).astype(np.uint64),
            np.tile(np.arange(REGION_COUNT, dtype=np.uint8), self.image_count),
            self.n_bits,
        )
        write_signature_file(
            index_dir / COARSE_SIG_FILE,
            self.coarse_words,
            self.image_ids.astype(np.uint64),
            np.full(self.image_count, COARSE_CODE, dtype=np.uint8),
            self.n_bits,
        )

    @classmethod
    def load(cls, index_dir: Union[str, Path]) -> "SignatureIndex":
        index_dir = Path(index_dir)
        region_family = HashFamily.load(index_dir / REGION_FAMILY_FILE)
        coarse_family = HashFamily.load(index_dir / COARSE_FAMILY_FILE)
        r_words, r_ids, r_codes, r_bits = read_signature_file(
            index_dir / REGION_SIG_FILE
        )
        c_words, c_ids, c_codes, c_bits = read_signature_file(
            index_dir / COARSE_SIG_FILE
        )
        if r_bits != region_family.n_bits or c_bits != coarse_family.n_bits:
            raise FormatError("signature width disagrees with its hash family")
        if r_words.shape[0] % REGION_COUNT != 0:
            raise FormatError("region signature count is not a multiple of 20")
        m = r_words.shape[0] // REGION_COUNT
        if c_words.shape[0] != m:
            raise FormatError(
                f"{m} images in region file but {c_words.shape[0]} coarse signatures"
            )
        expected_codes = np.tile(np.arange(REGION_COUNT, dtype=np.uint8), m)
        if not np.array_equal(r_codes, expected_codes):
            raise FormatError("region file is not in canonical region order")
        ids = r_ids.reshape(m, REGION_COUNT)
        if not (ids == ids[:, :1]).all():
            raise FormatError("region file groups mix image ids")
        if not np.array_equal(ids[:, 0], c_ids):
            raise FormatError("region and coarse files disagree on image ids")
        if (c_codes != COARSE_CODE).any():
            raise FormatError("coarse file contains non-coarse provenance codes")
        return cls(c_ids, r_words, c_words, region_family, coarse_family)
