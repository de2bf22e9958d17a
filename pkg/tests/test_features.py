"""Utterance validation, CMVN, segmentation, and the feature file format."""

import numpy as np
import pytest

from phonemap.features import (
    UtteranceFeatures,
    cmvn,
    read_features,
    segment_utterance,
    write_features,
)
from phonemap.nn import new_rng


def make_utt(frames, boundaries, labels=None, uid="u"):
    return UtteranceFeatures(id=uid, frames=frames, boundaries=boundaries, labels=labels)


class TestUtteranceFeatures:
    def test_valid_record(self):
        utt = make_utt(np.zeros((10, 3)), [0, 4, 10], labels=[1, 2])
        assert utt.num_segments == 2

    def test_rejects_non_monotone_boundaries(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            make_utt(np.zeros((10, 3)), [0, 4, 4])
        with pytest.raises(ValueError, match="strictly increasing"):
            make_utt(np.zeros((10, 3)), [0, 5, 3])

    def test_rejects_out_of_range_boundaries(self):
        with pytest.raises(ValueError, match=r"\[0, 10\]"):
            make_utt(np.zeros((10, 3)), [0, 11])
        with pytest.raises(ValueError, match=r"\[0, 10\]"):
            make_utt(np.zeros((10, 3)), [-1, 10])

    def test_rejects_too_few_boundaries(self):
        with pytest.raises(ValueError, match="at least 2"):
            make_utt(np.zeros((10, 3)), [5])

    def test_rejects_label_count_mismatch(self):
        with pytest.raises(ValueError, match="labels"):
            make_utt(np.zeros((10, 3)), [0, 4, 10], labels=[1])

    def test_rejects_non_matrix_frames(self):
        with pytest.raises(ValueError):
            make_utt(np.zeros(10), [0, 10])


class TestCmvn:
    def test_two_frame_closed_form(self):
        """Any 2-frame utterance normalizes to -1/+1 per dimension (up to sign)."""
        utt = make_utt(np.array([[3.0, -5.0], [7.0, 1.0]]), [0, 2])
        out = cmvn(utt)
        np.testing.assert_allclose(np.abs(out.frames), 1.0, rtol=1e-12)
        np.testing.assert_allclose(out.frames.sum(axis=0), 0.0, atol=1e-12)

    def test_constant_column_zeroed(self):
        frames = np.column_stack([np.full(5, 3.0), np.arange(5.0)])
        out = cmvn(make_utt(frames, [0, 5]))
        np.testing.assert_allclose(out.frames[:, 0], 0.0, atol=0)

    def test_mean_zero_variance_one(self):
        rng = new_rng(60)
        frames = rng.normal(loc=5.0, scale=3.0, size=(40, 6))
        out = cmvn(make_utt(frames, [0, 40]))
        np.testing.assert_allclose(out.frames.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(out.frames.var(axis=0), 1.0, atol=1e-8)

    def test_idempotent(self):
        rng = new_rng(61)
        utt = make_utt(rng.normal(size=(20, 4)), [0, 20])
        once = cmvn(utt)
        twice = cmvn(once)
        np.testing.assert_allclose(twice.frames, once.frames, atol=1e-8)

    def test_requires_two_frames(self):
        with pytest.raises(ValueError, match="at least 2 frames"):
            cmvn(make_utt(np.zeros((1, 3)), [0, 1]))

    def test_preserves_boundaries_and_labels(self):
        utt = make_utt(np.arange(12.0).reshape(6, 2), [0, 2, 6], labels=[4, 9])
        out = cmvn(utt)
        np.testing.assert_array_equal(out.boundaries, [0, 2, 6])
        np.testing.assert_array_equal(out.labels, [4, 9])


class TestSegmentUtterance:
    def test_lengths(self):
        """Boundaries [0,4,10] over 10 frames give segments of lengths 4 and 6."""
        segs = segment_utterance(make_utt(np.zeros((10, 3)), [0, 4, 10]))
        assert [len(s) for s in segs] == [4, 6]

    def test_whole_utterance(self):
        rng = new_rng(62)
        frames = rng.normal(size=(7, 2))
        segs = segment_utterance(make_utt(frames, [0, 7]))
        assert len(segs) == 1
        np.testing.assert_array_equal(segs[0], frames)

    def test_silence_trim(self):
        """Frames before the first and after the last boundary are discarded."""
        frames = np.arange(10.0).reshape(10, 1)
        segs = segment_utterance(make_utt(frames, [3, 7]))
        assert len(segs) == 1
        np.testing.assert_array_equal(segs[0][:, 0], [3.0, 4.0, 5.0, 6.0])

    def test_concatenation_recovers_interior(self):
        rng = new_rng(63)
        frames = rng.normal(size=(15, 3))
        utt = make_utt(frames, [2, 5, 9, 13])
        segs = segment_utterance(utt)
        np.testing.assert_array_equal(np.concatenate(segs), frames[2:13])


class TestFeatureFileFormat:
    def test_roundtrip(self, tmp_path):
        rng = new_rng(64)
        utts = [
            make_utt(rng.normal(size=(8, 3)), [0, 3, 8], labels=[2, 5], uid="a"),
            make_utt(rng.normal(size=(5, 3)), [1, 4], uid="b"),
        ]
        path = tmp_path / "feats.jsonl"
        write_features(path, utts)
        back = read_features(path)
        assert [u.id for u in back] == ["a", "b"]
        for orig, loaded in zip(utts, back):
            np.testing.assert_array_equal(loaded.frames, orig.frames)
            np.testing.assert_array_equal(loaded.boundaries, orig.boundaries)
        np.testing.assert_array_equal(back[0].labels, [2, 5])
        assert back[1].labels is None

    def test_bad_record_reports_line(self, tmp_path):
        path = tmp_path / "feats.jsonl"
        path.write_text('{"id": "a", "frames": [[0.0]], "boundaries": [0, 2]}\n')
        with pytest.raises(ValueError, match="feats.jsonl:1"):
            read_features(path)

    def test_missing_key_reports_line(self, tmp_path):
        path = tmp_path / "feats.jsonl"
        path.write_text('{"id": "a"}\n')
        with pytest.raises(ValueError, match="bad utterance record"):
            read_features(path)
