"""Tests for the sequence autoencoder and its checkpoint format."""

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from phonemap.autoencoder import (
    SequenceAutoencoder,
    _bucketed_batches,
    read_sae,
    write_sae,
)
from phonemap.nn.lstm import LstmWeights


def toy_segments(rng, n=20, d=3, t_range=(2, 6)):
    return [
        rng.normal(size=(int(rng.integers(t_range[0], t_range[1] + 1)), d))
        for _ in range(n)
    ]


def zero_model(d=3, hidden=4):
    model = SequenceAutoencoder(hidden_size=hidden)
    model.enc_ = LstmWeights.zeros(d, hidden)
    model.dec_ = LstmWeights.zeros(d, hidden)
    model.w_out_ = np.zeros((hidden, d))
    model.b_out_ = np.zeros(d)
    model.n_features_in_ = d
    model.loss_curve_ = []
    return model


class TestBucketedBatches:
    def test_batches_partition_all_indices(self):
        """Every segment appears in exactly one batch."""
        lengths = [5, 2, 9, 2, 7, 1, 3]
        batches = _bucketed_batches(lengths, batch_size=3)
        seen = np.concatenate(batches)
        assert sorted(seen.tolist()) == list(range(7))

    def test_batches_group_similar_lengths(self):
        """Indices are visited in length order, so padding stays small."""
        lengths = [9, 1, 8, 2, 7, 3]
        batches = _bucketed_batches(lengths, batch_size=2)
        flat = np.concatenate(batches)
        np.testing.assert_array_equal(
            [lengths[i] for i in flat], sorted(lengths)
        )


class TestTraining:
    def test_memorizes_constant_corpus(self):
        """Identical constant segments are reconstructed almost exactly."""
        seg = np.full((3, 2), 0.5)
        corpus = [seg.copy() for _ in range(8)]
        model = SequenceAutoencoder(hidden_size=6, epochs=200, lr=0.01, seed=0)
        model.fit(corpus)
        assert model.loss_curve_[-1] < 1e-3

    def test_final_loss_below_first(self):
        """The recorded curve improves over training on any seeded run."""
        rng = np.random.default_rng(7)
        corpus = toy_segments(rng)
        for seed in range(3):
            model = SequenceAutoencoder(hidden_size=5, epochs=30, lr=5e-3, seed=seed)
            model.fit(corpus)
            assert model.loss_curve_[-1] < model.loss_curve_[0]

    def test_same_seed_identical_training(self):
        rng = np.random.default_rng(9)
        corpus = toy_segments(rng, n=10)
        a = SequenceAutoencoder(hidden_size=4, epochs=10, seed=3).fit(corpus)
        b = SequenceAutoencoder(hidden_size=4, epochs=10, seed=3).fit(corpus)
        np.testing.assert_array_equal(a.loss_curve_, b.loss_curve_)
        np.testing.assert_array_equal(a.enc_.wx, b.enc_.wx)

    def test_reverse_targets_also_trains(self):
        """The reversed-reconstruction variant still reduces its loss."""
        rng = np.random.default_rng(11)
        corpus = toy_segments(rng, n=10)
        model = SequenceAutoencoder(
            hidden_size=5, epochs=30, lr=5e-3, seed=0, reverse_targets=True
        )
        model.fit(corpus)
        assert model.loss_curve_[-1] < model.loss_curve_[0]

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_loss_aborts_with_epoch(self):
        corpus = [np.full((2, 2), np.inf)]
        with pytest.raises(FloatingPointError, match="epoch 0"):
            SequenceAutoencoder(hidden_size=3, epochs=2, seed=0).fit(corpus)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            SequenceAutoencoder().fit([])


class TestEncoding:
    def test_zero_parameters_give_zero_embedding(self):
        """All-zero weights propagate a zero state through every frame."""
        model = zero_model()
        rng = np.random.default_rng(13)
        embedding = model.encode(rng.normal(size=(5, 3)))
        np.testing.assert_allclose(embedding, np.zeros(4))

    def test_encode_is_deterministic(self):
        rng = np.random.default_rng(15)
        corpus = toy_segments(rng, n=8)
        model = SequenceAutoencoder(hidden_size=4, epochs=5, seed=1).fit(corpus)
        seg = corpus[0]
        np.testing.assert_array_equal(model.encode(seg), model.encode(seg))

    def test_transform_preserves_input_order(self):
        """Bucketing by length never reorders the returned embeddings."""
        rng = np.random.default_rng(17)
        corpus = toy_segments(rng, n=12, t_range=(1, 8))
        model = SequenceAutoencoder(hidden_size=4, epochs=5, seed=2).fit(corpus)
        out = model.transform(corpus)
        for i, seg in enumerate(corpus):
            np.testing.assert_allclose(out[i], model.encode(seg), atol=1e-12)

    def test_bad_segments_rejected(self):
        model = zero_model()
        with pytest.raises(ValueError, match="non-empty"):
            model.encode(np.ones((0, 3)))
        with pytest.raises(ValueError, match="features"):
            model.encode(np.ones((2, 5)))

    def test_unfitted_model_rejected(self):
        with pytest.raises(NotFittedError):
            SequenceAutoencoder().transform([np.ones((2, 2))])


class TestCheckpoint:
    def test_roundtrip_preserves_encodings(self, tmp_path):
        """Saving and loading a model does not change its embeddings."""
        rng = np.random.default_rng(19)
        corpus = toy_segments(rng, n=8)
        model = SequenceAutoencoder(hidden_size=4, epochs=5, seed=4).fit(corpus)
        path = tmp_path / "sae.json"
        write_sae(path, model)
        loaded = read_sae(path)
        np.testing.assert_array_equal(loaded.transform(corpus), model.transform(corpus))
        assert loaded.hidden_size == model.hidden_size
        assert loaded.reverse_targets == model.reverse_targets

    def test_wrong_format_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "other-thing"}\n')
        with pytest.raises(ValueError, match="sae-checkpoint-v1"):
            read_sae(path)

    def test_unfitted_model_not_serializable(self, tmp_path):
        with pytest.raises(NotFittedError):
            write_sae(tmp_path / "x.json", SequenceAutoencoder())

    def test_truncated_weights_rejected(self, tmp_path):
        """Shape drift between header and tensors is caught on load."""
        rng = np.random.default_rng(21)
        corpus = toy_segments(rng, n=6)
        model = SequenceAutoencoder(hidden_size=4, epochs=2, seed=5).fit(corpus)
        path = tmp_path / "sae.json"
        write_sae(path, model)
        import json

        rec = json.loads(path.read_text())
        rec["encoder"]["wx"] = rec["encoder"]["wx"][:-1]
        path.write_text(json.dumps(rec))
        with pytest.raises(ValueError, match="shapes"):
            read_sae(path)
