"""Sign random projection: Gaussian hyperplanes hashing vectors to bits.

Each hash function is a random direction r with i.i.d. standard-Gaussian
coordinates; a vector v hashes to bit 1 iff r . v >= 0 (the boundary case
maps to 1). Two vectors collide on one bit with probability 1 - alpha/pi,
where alpha is their angular distance, which is what makes the packed
signatures a Hamming-space estimator of angle.
"""

from __future__ import annotations

import hashlib
import math
import struct
from pathlib import Path
from typing import Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..core import FormatError, InvalidParameterError
from .signatures import Signature, pack_bits

_UMHF_MAGIC = b"UMHF"
_UMHF_HEADER = struct.Struct("<4sIIQ")

# Rows hashed per matmul; bounds the float32 projection temporary.
_HASH_CHUNK = 8192


def exact_angle(v1: np.ndarray, v2: np.ndarray) -> float:
    """Angular distance: arccos of the clamped normalized dot product."""
    a = np.asarray(v1, dtype=np.float64).ravel()
    b = np.asarray(v2, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise InvalidParameterError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise InvalidParameterError("angle undefined for the zero vector")
    if np.array_equal(a, b):
        return 0.0
    cos = float(a @ b) / (na * nb)
    return math.acos(max(-1.0, min(1.0, cos)))


class HashFamily:
    """n Gaussian hyperplanes in R^d with an explicitly persisted matrix.

    The matrix is persisted rather than regenerated from the seed so the
    file is self-contained across library versions; verify_regenerable()
    checks the stored matrix still matches what the seed would produce.
    """

    def __init__(self, d: int, n_bits: int, seed: int, planes: np.ndarray):
        if d <= 0:
            raise InvalidParameterError(f"dimension must be positive, got {d}")
        if n_bits <= 0 or n_bits % 64 != 0:
            raise InvalidParameterError(
                f"n_bits {n_bits} must be a positive multiple of 64"
            )
        if not 0 <= seed < 2**64:
            raise InvalidParameterError(f"seed {seed} outside u64 range")
        planes = np.ascontiguousarray(planes, dtype=np.float32)
        if planes.shape != (n_bits, d):
            raise InvalidParameterError(
                f"projection matrix shape {planes.shape} != ({n_bits}, {d})"
            )
        self.d = int(d)
        self.n_bits = int(n_bits)
        self.seed = int(seed)
        self.planes = planes
        self.digest = self._digest(planes)

    @staticmethod
    def _digest(planes: np.ndarray) -> str:
        h = hashlib.sha256()
        h.update(struct.pack("<II", planes.shape[0], planes.shape[1]))
        h.update(planes.tobytes())
        return h.hexdigest()

    @classmethod
    def create(cls, d: int, n_bits: int = 1024, seed: int = 0) -> "HashFamily":
        if n_bits <= 0 or n_bits % 64 != 0:
            raise InvalidParameterError(
                f"n_bits {n_bits} must be a positive multiple of 64"
            )
        rng = np.random.default_rng(seed)
        planes = rng.standard_normal((n_bits, d), dtype=np.float32)
        return cls(d=d, n_bits=n_bits, seed=seed, planes=planes)

    def verify_regenerable(self) -> bool:
        """True iff the stored matrix equals a fresh draw from the seed."""
        return HashFamily.create(self.d, self.n_bits, self.seed).digest == self.digest

    def hash(self, vectors: np.ndarray) -> np.ndarray:
        """Hash (m, d) vectors to (m, n_bits/64) packed uint64 words."""
        X = np.ascontiguousarray(vectors, dtype=np.float32)
        squeeze = X.ndim == 1
        if squeeze:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.d:
            raise InvalidParameterError(
                f"vectors have dimension {X.shape[-1]}, family expects {self.d}"
            )
        out = np.empty((X.shape[0], self.n_bits // 64), dtype=np.uint64)
        for lo in range(0, X.shape[0], _HASH_CHUNK):
            hi = min(lo + _HASH_CHUNK, X.shape[0])
            proj = X[lo:hi] @ self.planes.T
            out[lo:hi] = pack_bits(proj >= 0.0)
        return out[0] if squeeze else out

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        with open(path, "wb") as f:
            f.write(_UMHF_HEADER.pack(_UMHF_MAGIC, self.d, self.n_bits, self.seed))
            f.write(self.planes.astype("<f4", copy=False).tobytes())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "HashFamily":
        path = Path(path)
        data = path.read_bytes()
        if len(data) < _UMHF_HEADER.size:
            raise FormatError(f"{path}: too short for a hash family header")
        magic, d, n_bits, seed = _UMHF_HEADER.unpack_from(data)
        if magic != _UMHF_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        expected = _UMHF_HEADER.size + n_bits * d * 4
        if len(data) != expected:
            raise FormatError(
                f"{path}: size {len(data)} != expected {expected} "
                f"(truncated or trailing bytes)"
            )
        planes = np.frombuffer(
            data, dtype="<f4", count=n_bits * d, offset=_UMHF_HEADER.size
        ).reshape(n_bits, d).copy()
        return cls(d=d, n_bits=n_bits, seed=seed, planes=planes)


def hash_vector(family: HashFamily, vector: np.ndarray) -> Signature:
    """Hash one vector to a Signature stamped with the family digest."""
    words = family.hash(np.asarray(vector))
    return Signature(words=words, n_bits=family.n_bits, family_digest=family.digest)


def hash_vectors(family: HashFamily, vectors: np.ndarray) -> np.ndarray:
    """Hash (m, d) vectors to packed words; thin alias of HashFamily.hash."""
    return family.hash(vectors)


class SignRandomProjection(TransformerMixin, BaseEstimator):
    """Transformer from real vectors to packed sign-projection signatures.

    fit draws the Gaussian projection matrix for the input dimension;
    transform returns (m, n_bits/64) uint64 words. The fitted family is
    exposed as family_ for persistence and cross-checking.
    """

    def __init__(self, n_bits: int = 1024, random_state: int = 0):
        self.n_bits = n_bits
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float32)
        self.n_features_in_ = X.shape[1]
        self.family_ = HashFamily.create(
            d=self.n_features_in_, n_bits=self.n_bits, seed=self.random_state
        )
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "family_")
        X = check_array(X, dtype=np.float32)
        if X.shape[1] != self.n_features_in_:
            raise InvalidParameterError(
                f"X has {X.shape[1]} features, fitted for {self.n_features_in_}"
            )
        return self.family_.hash(X)
