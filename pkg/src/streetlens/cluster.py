"""Greedy leader clustering of query results on coarse signatures.

A single deterministic pass assigns each image to the first existing
cluster whose leader lies within theta_c estimated angle on the 512-d
coarse signature, else the image founds a new cluster. Sorting helpers
order clusters (for the mosaic) and members within a cluster.
"""

import math
from dataclasses import dataclass, replace
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from .core import InvalidParameterError, UnknownAttributeError
from .lsh.index import Hit, SignatureIndex
from .lsh.signatures import WORD_BITS, hamming_to_many
from .store.metadata import Corpus

__all__ = [
    "Cluster",
    "LeaderClusterer",
    "cluster_results",
    "sort_clusters",
    "sort_within",
]


@dataclass(frozen=True)
class Cluster:
    """One visual cluster of query results."""

    leader_id: int
    member_ids: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "member_ids", tuple(int(m) for m in self.member_ids))
        if self.leader_id not in self.member_ids:
            raise InvalidParameterError("cluster leader must be a member")

    @property
    def size(self) -> int:
        return len(self.member_ids)

    @property
    def thumbnail_id(self) -> int:
        """Representative preview image: the leader."""
        return self.leader_id


def _greedy_leader(
    words: np.ndarray, n_bits: int, theta: float
) -> Tuple[np.ndarray, List[int]]:
    """One greedy pass in row order; returns (labels, leader row indices)."""
    n = words.shape[0]
    labels = np.empty(n, dtype=np.int64)
    leader_words = np.empty_like(words)
    leaders: List[int] = []
    for i in range(n):
        k = len(leaders)
        if k:
            h = hamming_to_many(words[i], leader_words[:k])
            near = np.flatnonzero((math.pi * h) / n_bits <= theta)
        else:
            near = ()
        if len(near):
            labels[i] = near[0]
        else:
            leader_words[k] = words[i]
            leaders.append(i)
            labels[i] = k
    return labels, leaders


class LeaderClusterer(ClusterMixin, BaseEstimator):
    """Greedy leader clustering over packed signature rows.

    X is an array of packed signature words, shape (n_samples, n_bits/64),
    dtype uint64. Rows are processed in input order; each joins the first
    cluster whose leader's estimated angle is <= theta_c, else becomes a
    new leader. `labels_` are cluster indices in order of discovery and
    `leaders_` the founding row index of each cluster.
    """

    def __init__(self, theta_c: float = 0.5, n_bits: int = 1024):
        self.theta_c = theta_c
        self.n_bits = n_bits

    def fit(self, X, y=None):
        if not 0.0 < self.theta_c < math.pi:
            raise InvalidParameterError(
                f"theta_c must lie in (0, pi), got {self.theta_c}"
            )
        X = check_array(X, dtype=np.uint64, ensure_2d=True)
        if X.shape[1] * WORD_BITS != self.n_bits:
            raise InvalidParameterError(
                f"rows carry {X.shape[1] * WORD_BITS} bits, expected {self.n_bits}"
            )
        labels, leaders = _greedy_leader(X, self.n_bits, self.theta_c)
        self.labels_ = labels
        self.leaders_ = np.asarray(leaders, dtype=np.int64)
        self.n_features_in_ = X.shape[1]
        return self


def cluster_results(
    hits: Sequence[Hit], index: SignatureIndex, theta_c: float
) -> List[Cluster]:
    """Group hits into visual clusters on their coarse signatures.

    Hits are visited in ascending image id so the outcome is independent
    of input order. Output is sorted by size descending, ties by leader id.
    """
    if not 0.0 < theta_c < math.pi:
        raise InvalidParameterError(f"theta_c must lie in (0, pi), got {theta_c}")
    ids = sorted({int(h.image_id) for h in hits})
    if not ids:
        return []
    words = index.coarse_rows(ids)
    labels, leaders = _greedy_leader(words, index.n_bits, theta_c)
    clusters = [
        Cluster(
            leader_id=ids[li],
            member_ids=tuple(ids[j] for j in np.flatnonzero(labels == ci)),
        )
        for ci, li in enumerate(leaders)
    ]
    clusters.sort(key=lambda c: (-c.size, c.leader_id))
    return clusters


def _attribute_values(
    member_ids: Sequence[int], key: str, values: Optional[Mapping[int, float]]
) -> List[float]:
    if values is None:
        raise UnknownAttributeError(f"no values provided for attribute {key!r}")
    try:
        return [float(values[m]) for m in member_ids]
    except KeyError as exc:
        raise UnknownAttributeError(
            f"attribute {key!r} unresolved for image {exc.args[0]}"
        ) from None


def sort_clusters(
    clusters: Sequence[Cluster],
    key: str = "size",
    values: Optional[Mapping[int, float]] = None,
    reverse: bool = False,
) -> List[Cluster]:
    """Order clusters by size (descending) or mean member attribute (ascending).

    `reverse` flips the primary direction; ties always resolve by leader
    id ascending, making the order total and stable.
    """
    if key == "size":
        metric = [float(c.size) for c in clusters]
        sign = 1.0 if reverse else -1.0
    else:
        metric = [
            float(np.mean(_attribute_values(c.member_ids, key, values)))
            for c in clusters
        ]
        sign = -1.0 if reverse else 1.0
    order = sorted(
        range(len(clusters)), key=lambda i: (sign * metric[i], clusters[i].leader_id)
    )
    return [clusters[i] for i in order]


def sort_within(
    cluster: Cluster,
    key: str,
    corpus: Optional[Corpus] = None,
    values: Optional[Mapping[int, float]] = None,
    reverse: bool = False,
) -> Cluster:
    """Reorder a cluster's members by metadata field or attribute value.

    `timestamp` and `vehicle_id` resolve from corpus records; any other key
    resolves through the `values` mapping. Ties break by image id ascending.
    """
    if key in ("timestamp", "vehicle_id"):
        if corpus is None:
            raise InvalidParameterError(f"corpus required to sort by {key}")
        vals = [float(getattr(corpus.record_for(m), key)) for m in cluster.member_ids]
    else:
        vals = _attribute_values(cluster.member_ids, key, values)
    sign = -1.0 if reverse else 1.0
    order = sorted(
        range(len(cluster.member_ids)),
        key=lambda i: (sign * vals[i], cluster.member_ids[i]),
    )
    return replace(cluster, member_ids=tuple(cluster.member_ids[i] for i in order))
