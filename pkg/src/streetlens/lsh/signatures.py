"""Bit-packed signatures: packing, Hamming distance, angle estimation.

A signature is n bits stored LSB-first in little-endian uint64 words:
bit i lives in word i // 64 at position i % 64, so the byte stream of the
word array equals the byte stream produced by LSB-first byte packing.
Hamming distance between two signatures estimates the angular distance of
the hashed vectors as pi * hamming / n, exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core import InvalidParameterError

WORD_BITS = 64

# Chunk row count for Hamming scans; bounds the XOR temporary to a few MB.
_SCAN_CHUNK = 1 << 16


def _check_n_bits(n_bits: int) -> int:
    n_bits = int(n_bits)
    if n_bits <= 0 or n_bits % WORD_BITS != 0:
        raise InvalidParameterError(
            f"signature width {n_bits} must be a positive multiple of {WORD_BITS}"
        )
    return n_bits


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a (m, n) 0/1 array into (m, n/64) uint64 words, LSB-first."""
    bits = np.asarray(bits)
    if bits.ndim != 2:
        raise InvalidParameterError(f"expected 2-d bit array, got ndim={bits.ndim}")
    _check_n_bits(bits.shape[1])
    packed = np.packbits(bits.astype(np.uint8, copy=False), axis=1, bitorder="little")
    return packed.view(np.dtype("<u8"))


def unpack_bits(words: np.ndarray, n_bits: int) -> np.ndarray:
    """Inverse of pack_bits; returns a (m, n_bits) uint8 array of 0/1."""
    n_bits = _check_n_bits(n_bits)
    words = np.ascontiguousarray(words, dtype=np.dtype("<u8"))
    squeeze = words.ndim == 1
    if squeeze:
        words = words[None, :]
    if words.shape[1] * WORD_BITS != n_bits:
        raise InvalidParameterError(
            f"word array has {words.shape[1] * WORD_BITS} bits, expected {n_bits}"
        )
    bits = np.unpackbits(words.view(np.uint8), axis=1, bitorder="little")
    return bits[0] if squeeze else bits


def hamming_to_many(query_words: np.ndarray, words: np.ndarray) -> np.ndarray:
    """Hamming distance from one signature to many; (m,) int64."""
    query_words = np.asarray(query_words, dtype=np.uint64)
    words = np.asarray(words, dtype=np.uint64)
    if words.ndim != 2 or query_words.shape != (words.shape[1],):
        raise InvalidParameterError(
            f"shape mismatch: query {query_words.shape} vs corpus {words.shape}"
        )
    m = words.shape[0]
    out = np.empty(m, dtype=np.int64)
    for lo in range(0, m, _SCAN_CHUNK):
        hi = min(lo + _SCAN_CHUNK, m)
        out[lo:hi] = np.bitwise_count(words[lo:hi] ^ query_words).sum(
            axis=1, dtype=np.int64
        )
    return out


@dataclass(eq=False)
class Signature:
    """One packed n-bit signature with optional provenance.

    provenance: the image and region the signature was computed from, and
    the digest of the hash family that produced it (used to reject
    cross-family comparisons).
    """

    words: np.ndarray
    n_bits: int
    image_id: Optional[int] = None
    region_code: Optional[int] = None
    family_digest: Optional[str] = field(default=None, repr=False)

    def __post_init__(self):
        self.words = np.ascontiguousarray(self.words, dtype=np.uint64)
        self.n_bits = _check_n_bits(self.n_bits)
        if self.words.shape != (self.n_bits // WORD_BITS,):
            raise InvalidParameterError(
                f"signature wants {self.n_bits // WORD_BITS} words, "
                f"got shape {self.words.shape}"
            )

    @property
    def n_bytes(self) -> int:
        return self.n_bits // 8


def _check_comparable(s1: Signature, s2: Signature) -> None:
    if s1.n_bits != s2.n_bits:
        raise InvalidParameterError(
            f"signature widths differ: {s1.n_bits} vs {s2.n_bits}"
        )
    if (
        s1.family_digest is not None
        and s2.family_digest is not None
        and s1.family_digest != s2.family_digest
    ):
        raise InvalidParameterError("signatures come from different hash families")


def estimate_angle(s1: Signature, s2: Signature) -> float:
    """Estimated angular distance, pi * hamming / n exactly, in [0, pi]."""
    _check_comparable(s1, s2)
    h = int(np.bitwise_count(s1.words ^ s2.words).sum())
    return math.pi * h / s1.n_bits


def estimate_angles(
    query_words: np.ndarray, words: np.ndarray, n_bits: int
) -> np.ndarray:
    """Vectorized estimate_angle of one signature against many."""
    n_bits = _check_n_bits(n_bits)
    return math.pi * hamming_to_many(query_words, words) / n_bits
