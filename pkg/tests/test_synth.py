"""Tests for synthetic world generation and its oracles."""

import numpy as np
import pytest

from phonemap.clustering import assign, kmeans_fit, purity
from phonemap.synth import (
    gen_corpus,
    gen_text,
    gen_world,
    oracle_best_map,
    phoneme_names,
)


def parse_ids(sentence, names):
    index = {n: i for i, n in enumerate(names)}
    return np.array([index[w] for w in sentence.split()], dtype=np.int64)


class TestPhonemeNames:
    def test_sorted_order_equals_id_order(self):
        """Zero padding keeps lexicographic and numeric order aligned."""
        for l in (2, 10, 11, 150):
            names = phoneme_names(l)
            assert sorted(names) == names
            assert len(set(names)) == l

    def test_fixed_width(self):
        assert phoneme_names(10) == [f"p0{i}" for i in range(10)]


class TestGenWorld:
    def test_same_seed_identical(self):
        """World generation is a pure function of its seed."""
        a = gen_world(seed=7, l=5, modes=2, d=4)
        b = gen_world(seed=7, l=5, modes=2, d=4)
        np.testing.assert_array_equal(a.prototypes, b.prototypes)
        np.testing.assert_array_equal(a.bigram, b.bigram)

    def test_bigram_rows_are_distributions_with_full_support(self):
        world = gen_world(seed=3, l=8)
        np.testing.assert_allclose(world.bigram.sum(axis=1), np.ones(8))
        assert world.bigram.min() > 0.0

    def test_prototype_gap_enforced(self):
        """Every prototype pair is separated by at least the requested gap."""
        world = gen_world(seed=11, l=6, modes=2, d=5, min_proto_gap=1.5)
        protos = world.prototypes
        assert protos.shape == (12, 5)
        for i in range(len(protos)):
            for j in range(i + 1, len(protos)):
                assert np.linalg.norm(protos[i] - protos[j]) >= 1.5

    def test_exhausted_rejection_budget_rejected(self):
        """Too small an attempt bound surfaces as an infeasibility error."""
        with pytest.raises(ValueError, match="could not place"):
            gen_world(seed=0, l=4, max_attempts=1)

    def test_degenerate_parameters_rejected(self):
        with pytest.raises(ValueError, match="at least 2 phonemes"):
            gen_world(seed=0, l=1)
        with pytest.raises(ValueError, match="modes"):
            gen_world(seed=0, l=4, modes=0)
        with pytest.raises(ValueError, match="sigma"):
            gen_world(seed=0, l=4, sigma=-0.5)


class TestGenCorpus:
    def test_labels_and_embeddings_align(self):
        """Each utterance has one embedding per hidden label."""
        world = gen_world(seed=1, l=6, d=4)
        corpus = gen_corpus(world, n_utts=12, len_range=(3, 9), seed=2)
        assert len(corpus.labels) == 12
        for lab, emb in zip(corpus.labels, corpus.embeddings):
            assert emb.shape == (lab.size, 4)
            assert 3 <= lab.size <= 9

    def test_same_seed_identical(self):
        world = gen_world(seed=1, l=6, d=4)
        a = gen_corpus(world, n_utts=5, seed=9)
        b = gen_corpus(world, n_utts=5, seed=9)
        for x, y in zip(a.embeddings, b.embeddings):
            np.testing.assert_array_equal(x, y)

    def test_sentences_transcribe_labels(self):
        """The matched text is exactly the generating phoneme sequence."""
        world = gen_world(seed=4, l=7)
        corpus = gen_corpus(world, n_utts=6, seed=5)
        for sentence, lab in zip(corpus.sentences, corpus.labels):
            np.testing.assert_array_equal(parse_ids(sentence, world.names), lab)

    def test_noiseless_embeddings_sit_on_prototypes(self):
        """With sigma 0 every embedding equals one of its label's prototypes."""
        world = gen_world(seed=6, l=5, modes=2, d=4, sigma=0.0)
        corpus = gen_corpus(world, n_utts=8, seed=7)
        m = world.modes_per_phoneme
        for lab, emb in zip(corpus.labels, corpus.embeddings):
            for phoneme, vec in zip(lab, emb):
                own = world.prototypes[phoneme * m : (phoneme + 1) * m]
                gap = np.min(np.linalg.norm(own - vec, axis=1))
                np.testing.assert_allclose(gap, 0.0, atol=1e-12)

    def test_frames_mode_produces_valid_utterances(self):
        """Frame emission yields features whose boundaries match the labels."""
        world = gen_world(seed=8, l=5, d=3)
        corpus = gen_corpus(
            world, n_utts=4, seed=3, emit="frames", frames_per_segment=(2, 4)
        )
        assert corpus.embeddings is None
        for utt, lab in zip(corpus.features, corpus.labels):
            assert utt.num_segments == lab.size
            np.testing.assert_array_equal(utt.labels, lab)
            seg_lens = np.diff(utt.boundaries)
            assert seg_lens.min() >= 2 and seg_lens.max() <= 4
            assert utt.frames.shape == (int(seg_lens.sum()), 3)

    def test_bad_arguments_rejected(self):
        world = gen_world(seed=1, l=4)
        with pytest.raises(ValueError, match="n_utts"):
            gen_corpus(world, n_utts=0)
        with pytest.raises(ValueError, match="emit"):
            gen_corpus(world, n_utts=1, emit="waveform")
        with pytest.raises(ValueError, match="len_range"):
            gen_corpus(world, n_utts=1, len_range=(5, 2))


class TestBigramStatistics:
    def test_corpus_transitions_match_bigram(self):
        """Transition frequencies over 10^5 phonemes approach the matrix."""
        world = gen_world(seed=13, l=6)
        corpus = gen_corpus(world, n_utts=2500, len_range=(40, 41), seed=14)
        counts = np.zeros((6, 6))
        for lab in corpus.labels:
            np.add.at(counts, (lab[:-1], lab[1:]), 1.0)
        rows = counts / counts.sum(axis=1, keepdims=True)
        assert np.abs(rows - world.bigram).max() < 0.02


class TestGenText:
    def test_same_seed_identical(self):
        world = gen_world(seed=2, l=5)
        assert gen_text(world, 6, seed=4) == gen_text(world, 6, seed=4)

    def test_sentences_parse_and_respect_length_range(self):
        world = gen_world(seed=2, l=5)
        for sentence in gen_text(world, 10, len_range=(4, 7), seed=4):
            ids = parse_ids(sentence, world.names)
            assert 4 <= ids.size <= 7

    def test_independent_of_corpus_draw(self):
        """Unrelated text shares statistics but not the actual sentences."""
        world = gen_world(seed=2, l=8)
        corpus = gen_corpus(world, n_utts=10, len_range=(10, 14), seed=0)
        text = gen_text(world, 10, len_range=(10, 14), seed=0)
        assert text != corpus.sentences


class TestClusteringOnWorlds:
    def test_noiseless_purity_is_one_at_full_capacity(self):
        """With K = L x modes and sigma 0, K-means recovers the prototypes."""
        world = gen_world(seed=21, l=5, modes=2, d=4, sigma=0.0)
        corpus = gen_corpus(world, n_utts=40, len_range=(8, 16), seed=22)
        flat = np.concatenate(corpus.embeddings)
        labels = np.concatenate(corpus.labels)
        codebook = kmeans_fit(flat, k=10, seed=0)
        indices = assign(flat, codebook)
        assert purity(indices, labels) == 1.0

    def test_each_phoneme_occupies_its_mode_count(self):
        """At sigma 0 and K = 2L, every phoneme's segments land in 2 clusters."""
        world = gen_world(seed=23, l=4, modes=2, d=4, sigma=0.0)
        corpus = gen_corpus(world, n_utts=60, len_range=(8, 16), seed=24)
        flat = np.concatenate(corpus.embeddings)
        labels = np.concatenate(corpus.labels)
        codebook = kmeans_fit(flat, k=8, seed=1)
        indices = assign(flat, codebook)
        for phoneme in range(4):
            occupied = np.unique(indices[labels == phoneme])
            assert occupied.size == 2

    def test_purity_does_not_improve_with_noise(self):
        """Median achievable purity is non-increasing in sigma."""
        medians = []
        for sigma in (0.0, 0.6, 1.8):
            purities = []
            for seed in range(5):
                world = gen_world(seed=seed, l=5, d=4, sigma=sigma)
                corpus = gen_corpus(world, n_utts=25, len_range=(8, 14), seed=seed)
                flat = np.concatenate(corpus.embeddings)
                labels = np.concatenate(corpus.labels)
                codebook = kmeans_fit(flat, k=5, seed=seed)
                purities.append(purity(assign(flat, codebook), labels))
            medians.append(np.median(purities))
        assert medians[0] >= medians[1] >= medians[2]


class TestOracleBestMap:
    def test_equals_purity_on_random_instances(self):
        """The majority map's accuracy is cluster purity, exactly."""
        rng = np.random.default_rng(31)
        for _ in range(100):
            n = int(rng.integers(5, 80))
            indices = rng.integers(1, 7, size=n)
            labels = rng.integers(0, 5, size=n)
            _, acc = oracle_best_map(indices, labels)
            assert acc == purity(indices, labels)

    def test_single_cluster_maps_to_global_mode(self):
        indices = np.ones(6, dtype=np.int64)
        labels = np.array([2, 2, 2, 0, 1, 2])
        mapping, acc = oracle_best_map(indices, labels)
        assert mapping == {1: 2}
        np.testing.assert_allclose(acc, 4.0 / 6.0)

    def test_pure_clusters_score_one(self):
        indices = np.array([1, 1, 2, 2, 3])
        labels = np.array([4, 4, 0, 0, 2])
        mapping, acc = oracle_best_map(indices, labels)
        assert acc == 1.0
        assert mapping == {1: 4, 2: 0, 3: 2}

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            oracle_best_map(np.array([], dtype=np.int64), np.array([], dtype=np.int64))
        with pytest.raises(ValueError, match="length mismatch"):
            oracle_best_map(np.array([1, 2]), np.array([0]))
