"""Sign-random-projection hashing, packed signatures, and similarity search."""

from .index import (
    COARSE_FAMILY_FILE,
    COARSE_SIG_FILE,
    REGION_FAMILY_FILE,
    REGION_SIG_FILE,
    Hit,
    SignatureIndex,
    read_signature_file,
    write_signature_file,
)
from .projection import (
    HashFamily,
    SignRandomProjection,
    exact_angle,
    hash_vector,
    hash_vectors,
)
from .signatures import (
    Signature,
    estimate_angle,
    estimate_angles,
    hamming_to_many,
    pack_bits,
    unpack_bits,
)

__all__ = [
    "COARSE_FAMILY_FILE",
    "COARSE_SIG_FILE",
    "REGION_FAMILY_FILE",
    "REGION_SIG_FILE",
    "HashFamily",
    "Hit",
    "Signature",
    "SignatureIndex",
    "SignRandomProjection",
    "estimate_angle",
    "estimate_angles",
    "exact_angle",
    "hamming_to_many",
    "hash_vector",
    "hash_vectors",
    "pack_bits",
    "read_signature_file",
    "unpack_bits",
    "write_signature_file",
]
