"""Tests for greedy leader clustering over coarse signatures.

Oracle: a pure-Python greedy pass using int.bit_count popcounts,
independent of the vectorized implementation.
"""

import math

import numpy as np
import pytest
from sklearn.base import clone

from streetlens.cluster import Cluster, LeaderClusterer, cluster_results, sort_clusters, sort_within
from streetlens.core import (
    GeoPoint,
    ImageRecord,
    InvalidParameterError,
    TimeInterval,
    UnknownAttributeError,
    parse_timestamp,
)
from streetlens.lsh import HashFamily, Hit, SignatureIndex, estimate_angle
from streetlens.store import Corpus, gen_synthetic_corpus

EPOCH = TimeInterval(
    parse_timestamp("2016-04-01T00:00:00Z"), parse_timestamp("2017-04-01T00:00:00Z")
)
BBOX = (-74.05, 40.55, -73.85, 40.75)

# --------------------------------------------------------------------------
# Oracle
# --------------------------------------------------------------------------


def oracle_greedy(rows, n_bits, theta):
    """Greedy leader pass over packed rows (lists of Python ints)."""
    leaders = []
    labels = []
    for i, row in enumerate(rows):
        assigned = None
        for ci, li in enumerate(leaders):
            h = sum((int(a) ^ int(b)).bit_count() for a, b in zip(rows[li], row))
            if math.pi * h / n_bits <= theta:
                assigned = ci
                break
        if assigned is None:
            leaders.append(i)
            assigned = len(leaders) - 1
        labels.append(assigned)
    return labels, leaders


def planted_words(seed, n_rows, k, d=64, n_bits=256, noise=0.2):
    """Hash a noisy mixture of k directions; returns (words, labels)."""
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((k, d))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    labels = np.arange(n_rows) % k
    vecs = centers[labels] + noise * rng.standard_normal((n_rows, d)) / math.sqrt(d)
    fam = HashFamily.create(d=d, n_bits=n_bits, seed=99)
    return fam.hash(vecs.astype(np.float32)), labels


# --------------------------------------------------------------------------
# LeaderClusterer estimator
# --------------------------------------------------------------------------


class TestLeaderClusterer:
    def test_params_and_clone(self):
        est = LeaderClusterer(theta_c=0.3, n_bits=256)
        assert est.get_params() == {"theta_c": 0.3, "n_bits": 256}
        clone(est)

    def test_identical_rows_single_cluster(self):
        words = np.tile(np.array([[7, 9]], dtype=np.uint64), (10, 1))
        labels = LeaderClusterer(theta_c=0.5, n_bits=128).fit_predict(words)
        assert labels.tolist() == [0] * 10

    def test_tiny_theta_all_singletons(self):
        words, _ = planted_words(seed=0, n_rows=12, k=12)
        est = LeaderClusterer(theta_c=1e-9, n_bits=256)
        assert est.fit_predict(words).tolist() == list(range(12))

    def test_matches_oracle_on_planted_mixture(self):
        words, _ = planted_words(seed=1, n_rows=150, k=5)
        for theta in (0.2, 0.5, 0.9, 1.4):
            got = LeaderClusterer(theta_c=theta, n_bits=256).fit_predict(words)
            expected, _ = oracle_greedy(words.tolist(), 256, theta)
            assert got.tolist() == expected, theta

    def test_leader_radius_invariant(self):
        words, _ = planted_words(seed=2, n_rows=100, k=4)
        est = LeaderClusterer(theta_c=0.6, n_bits=256)
        labels = est.fit_predict(words)
        for i, lab in enumerate(labels):
            leader_row = est.leaders_[lab]
            h = sum(
                (int(a) ^ int(b)).bit_count()
                for a, b in zip(words[leader_row], words[i])
            )
            assert math.pi * h / 256 <= 0.6

    def test_labels_form_contiguous_partition(self):
        words, _ = planted_words(seed=3, n_rows=80, k=3)
        labels = LeaderClusterer(theta_c=0.5, n_bits=256).fit_predict(words)
        k = labels.max() + 1
        assert set(labels.tolist()) == set(range(k))

    def test_row_width_must_match_n_bits(self):
        words = np.zeros((4, 2), dtype=np.uint64)
        with pytest.raises(ValueError):
            LeaderClusterer(theta_c=0.5, n_bits=256).fit(words)

    def test_invalid_theta(self):
        words = np.zeros((2, 4), dtype=np.uint64)
        for bad in (0.0, -1.0, math.pi + 0.001):
            with pytest.raises(ValueError):
                LeaderClusterer(theta_c=bad, n_bits=256).fit(words)


# --------------------------------------------------------------------------
# cluster_results over an index
# --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def synthetic_index():
    data = gen_synthetic_corpus(
        seed=17, n_images=120, n_clusters=4, geo_bbox=BBOX, epoch=EPOCH
    )
    cat = data.catalog
    region_fam = HashFamily.create(d=4096, n_bits=1024, seed=1)
    coarse_fam = HashFamily.create(d=512, n_bits=1024, seed=2)
    index = SignatureIndex.build(cat.ids, cat.region, cat.coarse, region_fam, coarse_fam)
    return data, index


def hits_for(ids, angles=None):
    if angles is None:
        angles = [0.1] * len(ids)
    return [
        Hit(image_id=int(i), angle=float(a), query_code=0, corpus_code=0)
        for i, a in zip(ids, angles)
    ]


class TestClusterResults:
    def test_identical_signatures_single_cluster(self):
        ids = np.arange(1, 7)
        region = np.ones((6, 20, 4096), dtype=np.float32)
        coarse = np.ones((6, 512), dtype=np.float32)
        index = SignatureIndex.build(
            ids,
            region,
            coarse,
            HashFamily.create(d=4096, n_bits=128, seed=11),
            HashFamily.create(d=512, n_bits=128, seed=12),
        )
        clusters = cluster_results(hits_for(ids), index, theta_c=1e-9)
        assert len(clusters) == 1
        assert sorted(clusters[0].member_ids) == list(range(1, 7))

    def test_tiny_theta_singletons(self, synthetic_index):
        data, index = synthetic_index
        ids = data.corpus.ids[:10]
        clusters = cluster_results(hits_for(ids), index, theta_c=1e-9)
        sizes = [c.size for c in clusters]
        assert sizes == [1] * len(ids)
        # singletons tie on size, so ordering falls back to leader id
        assert [c.leader_id for c in clusters] == sorted(ids.tolist())

    def test_planted_clusters_recovered_exactly(self, synthetic_index):
        data, index = synthetic_index
        clusters = cluster_results(
            hits_for(data.corpus.ids), index, theta_c=0.6
        )
        assert len(clusters) == 4
        got = {frozenset(c.member_ids) for c in clusters}
        # labels index generation order: label[i] belongs to image id i + 1
        labels = np.asarray(data.labels)
        expected = {
            frozenset((np.flatnonzero(labels == lab) + 1).tolist())
            for lab in range(4)
        }
        assert got == expected

    def test_partition_property(self, synthetic_index):
        data, index = synthetic_index
        hits = hits_for(data.corpus.ids)
        clusters = cluster_results(hits, index, theta_c=0.6)
        all_members = [m for c in clusters for m in c.member_ids]
        assert sorted(all_members) == sorted(h.image_id for h in hits)
        assert sum(c.size for c in clusters) == len(hits)

    def test_leader_in_members_and_radius(self, synthetic_index):
        data, index = synthetic_index
        clusters = cluster_results(hits_for(data.corpus.ids), index, theta_c=0.6)
        for c in clusters:
            assert c.leader_id in c.member_ids
            leader_sig = index.coarse_signature(c.leader_id)
            for m in c.member_ids:
                assert estimate_angle(leader_sig, index.coarse_signature(m)) <= 0.6

    def test_order_size_desc_ties_leader_asc(self, synthetic_index):
        data, index = synthetic_index
        # uneven slice: labels cycle 0..3, so dropping a prefix unbalances sizes
        ids = data.corpus.ids[7:]
        clusters = cluster_results(hits_for(ids), index, theta_c=0.6)
        keys = [(-c.size, c.leader_id) for c in clusters]
        assert keys == sorted(keys)

    def test_input_order_irrelevant(self, synthetic_index):
        data, index = synthetic_index
        rng = np.random.default_rng(5)
        ids = data.corpus.ids.copy()
        rng.shuffle(ids)
        a = cluster_results(hits_for(data.corpus.ids), index, theta_c=0.6)
        b = cluster_results(hits_for(ids), index, theta_c=0.6)
        assert a == b

    def test_empty_hits(self, synthetic_index):
        _, index = synthetic_index
        assert cluster_results([], index, theta_c=0.5) == []

    def test_theta_out_of_range(self, synthetic_index):
        _, index = synthetic_index
        for bad in (0.0, -0.5, math.pi):
            with pytest.raises(InvalidParameterError):
                cluster_results([], index, theta_c=bad)

    def test_thumbnail_is_leader(self, synthetic_index):
        data, index = synthetic_index
        clusters = cluster_results(hits_for(data.corpus.ids[:8]), index, theta_c=0.6)
        assert all(c.thumbnail_id == c.leader_id for c in clusters)


# --------------------------------------------------------------------------
# Sorting
# --------------------------------------------------------------------------


def make_clusters():
    return [
        Cluster(leader_id=4, member_ids=(4, 9)),
        Cluster(leader_id=1, member_ids=(1, 2, 3)),
        Cluster(leader_id=7, member_ids=(7,)),
        Cluster(leader_id=5, member_ids=(5, 6)),
    ]


class TestSortClusters:
    def test_by_size_descending_ties_by_leader(self):
        out = sort_clusters(make_clusters(), key="size")
        assert [c.leader_id for c in out] == [1, 4, 5, 7]

    def test_already_sorted_unchanged(self):
        once = sort_clusters(make_clusters(), key="size")
        assert sort_clusters(once, key="size") == once

    def test_reverse(self):
        out = sort_clusters(make_clusters(), key="size", reverse=True)
        assert [c.size for c in out] == [1, 2, 2, 3]

    def test_attribute_mean_matches_reference_sort(self):
        rng = np.random.default_rng(8)
        clusters = make_clusters()
        values = {i: float(rng.uniform(0, 100)) for i in range(1, 10)}
        out = sort_clusters(clusters, key="noise", values=values)
        expected = sorted(
            clusters,
            key=lambda c: (
                float(np.mean([values[m] for m in c.member_ids])),
                c.leader_id,
            ),
        )
        assert out == expected

    def test_unknown_attribute(self):
        with pytest.raises(UnknownAttributeError):
            sort_clusters(make_clusters(), key="mystery")

    def test_missing_member_value(self):
        with pytest.raises(UnknownAttributeError):
            sort_clusters(make_clusters(), key="partial", values={1: 1.0})


class TestSortWithin:
    @staticmethod
    def corpus_of(rows):
        """rows: (id, timestamp, vehicle_id)."""
        return Corpus(
            [
                ImageRecord(
                    id=i,
                    timestamp=t,
                    location=GeoPoint(40.7, -74.0),
                    heading=0.0,
                    camera_id=0,
                    vehicle_id=v,
                    blob_ref="",
                )
                for i, t, v in rows
            ]
        )

    def test_by_timestamp(self):
        corpus = self.corpus_of([(1, 300, 0), (2, 100, 0), (3, 200, 0)])
        c = Cluster(leader_id=1, member_ids=(1, 2, 3))
        out = sort_within(c, key="timestamp", corpus=corpus)
        assert out.member_ids == (2, 3, 1)
        assert out.leader_id == 1

    def test_by_vehicle_ties_by_id(self):
        corpus = self.corpus_of([(1, 0, 2), (2, 1, 1), (3, 2, 2), (4, 3, 1)])
        c = Cluster(leader_id=3, member_ids=(3, 1, 4, 2))
        out = sort_within(c, key="vehicle_id", corpus=corpus)
        assert out.member_ids == (2, 4, 1, 3)

    def test_by_attribute_values(self):
        c = Cluster(leader_id=1, member_ids=(1, 2, 3))
        out = sort_within(c, key="score", values={1: 2.0, 2: 1.0, 3: 3.0})
        assert out.member_ids == (2, 1, 3)

    def test_reverse_keeps_id_ties_ascending(self):
        c = Cluster(leader_id=1, member_ids=(1, 2, 3, 4))
        out = sort_within(
            c, key="score", values={1: 5.0, 2: 1.0, 3: 5.0, 4: 0.0}, reverse=True
        )
        assert out.member_ids == (1, 3, 2, 4)

    def test_random_keys_match_reference_sort(self):
        rng = np.random.default_rng(9)
        members = tuple(range(1, 40))
        values = {m: float(rng.integers(0, 5)) for m in members}
        c = Cluster(leader_id=1, member_ids=members)
        out = sort_within(c, key="r", values=values)
        assert list(out.member_ids) == sorted(members, key=lambda m: (values[m], m))

    def test_unknown_attribute(self):
        c = Cluster(leader_id=1, member_ids=(1,))
        with pytest.raises(UnknownAttributeError):
            sort_within(c, key="nope")

    def test_builtin_key_requires_corpus(self):
        c = Cluster(leader_id=1, member_ids=(1,))
        with pytest.raises(InvalidParameterError):
            sort_within(c, key="timestamp")
