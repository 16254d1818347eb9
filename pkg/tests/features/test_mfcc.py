"""
Tests for the MFCC front end and the feature cache.
"""
import os

import numpy as np
import pytest

from dsp.audio import AudioClip
from features.cache import FeatureCache, decode_features, encode_features
from features.mfcc import (FeatureMatrix, cmvn, extract_mfcc, mel_filter_centers,
                           mel_filterbank, mel_filterbank_energies)
from utils.config import FeatureSettings
from utils.error_handler import AudioFormatException, InsufficientDataException, ValidationException


def tone(freq, seconds=1.0, amplitude=0.5):
    t = np.arange(int(seconds * 16000)) / 16000
    return AudioClip(amplitude * np.sin(2 * np.pi * freq * t))


class TestMfcc:
    """Tests for MFCC extraction."""

    def test_shape(self):
        """Test frame count and feature dimension."""
        features = extract_mfcc(tone(440.0))

        assert features.num_frames == (16000 - 400) // 160 + 1
        assert features.dim == 20
        assert features.frame_shift == 0.01

    def test_without_energy(self):
        features = extract_mfcc(tone(440.0), FeatureSettings(use_energy=False))
        assert features.dim == 19

    def test_filterbank_shape(self):
        settings = FeatureSettings()
        bank = mel_filterbank(settings, 16000)

        assert bank.shape == (26, 257)
        assert np.all(bank >= 0.0)
        assert np.all(bank.max(axis=1) > 0.0)

    def test_tone_peaks_in_matching_filter(self):
        """Test a tone at a filter centre excites that filter most."""
        settings = FeatureSettings(pre_emphasis=0.0)
        centres = mel_filter_centers(settings)
        assert centres[8] == pytest.approx(921.8, abs=0.5)

        energies = mel_filterbank_energies(tone(float(centres[8])), settings)

        assert int(np.argmax(energies.mean(axis=0))) == 8

    def test_deterministic(self):
        clip = AudioClip(np.random.default_rng(0).standard_normal(8000))
        np.testing.assert_array_equal(extract_mfcc(clip).frames, extract_mfcc(clip).frames)

    def test_short_clip(self):
        with pytest.raises(AudioFormatException):
            extract_mfcc(AudioClip(np.ones(100)))

    def test_silence_is_finite(self):
        features = extract_mfcc(AudioClip(np.zeros(4000)))
        assert np.all(np.isfinite(features.frames))


class TestCmvn:
    """Tests for per-utterance normalization."""

    def test_zero_mean_unit_variance(self):
        features = cmvn(extract_mfcc(AudioClip(np.random.default_rng(1).standard_normal(16000))))

        np.testing.assert_allclose(features.frames.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(features.frames.std(axis=0), 1.0, atol=1e-10)

    def test_idempotent(self):
        once = cmvn(extract_mfcc(AudioClip(np.random.default_rng(4).standard_normal(8000))))
        np.testing.assert_allclose(cmvn(once).frames, once.frames, atol=1e-10)

    def test_constant_column_only_centred(self):
        frames = np.column_stack([np.arange(5.0), np.full(5, 3.0)])
        out = cmvn(FeatureMatrix(frames, 0.01)).frames

        np.testing.assert_array_equal(out[:, 1], 0.0)

    def test_needs_two_frames(self):
        with pytest.raises(InsufficientDataException):
            cmvn(FeatureMatrix(np.ones((1, 3)), 0.01))


class TestFeatureCache:
    """Tests for the binary feature cache."""

    def test_hit_matches_miss(self, tmp_path):
        """Test the cache computes once and returns identical matrices."""
        cache = FeatureCache(str(tmp_path), "digest")
        calls = []

        def compute():
            calls.append(1)
            return FeatureMatrix(np.random.default_rng(2).standard_normal((7, 3)), 0.01)

        first = cache.get("utt-1", compute)
        second = cache.get("utt-1", compute)

        assert len(calls) == 1
        np.testing.assert_array_equal(first.frames, second.frames)
        assert second.frame_shift == 0.01

    def test_corrupt_entry_is_recomputed(self, tmp_path):
        cache = FeatureCache(str(tmp_path), "digest")
        path = cache.path_for("utt-1")
        os.makedirs(os.path.dirname(path))
        with open(path, "wb") as f:
            f.write(b"EVFC\x00")

        features = cache.get("utt-1", lambda: FeatureMatrix(np.ones((4, 2)), 0.01))

        assert features.frames.shape == (4, 2)
        assert decode_features(open(path, "rb").read()).frames.shape == (4, 2)

    def test_settings_digest_separates_entries(self, tmp_path):
        assert FeatureCache(str(tmp_path), "a").path_for("k") != FeatureCache(str(tmp_path), "b").path_for("k")

    def test_decode_rejects_bad_data(self):
        data = encode_features(FeatureMatrix(np.ones((2, 2)), 0.01))

        assert decode_features(data).frames.shape == (2, 2)
        with pytest.raises(ValidationException):
            decode_features(data[:-1])
        with pytest.raises(ValidationException):
            decode_features(b"XXXX" + data[4:])
