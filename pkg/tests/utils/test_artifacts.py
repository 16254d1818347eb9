"""
Tests for artifact storage and model files.
"""
import os

import numpy as np
import pytest

from utils.artifacts import LOCK_NAME, STAGES, ArtifactStore, atomic_write_text
from utils.error_handler import MissingArtifactException, ValidationException
from utils.metrics import record_iteration, write_metrics
from utils.model_io import decode_model, encode_model, load_model, save_model


class TestAtomicWrites:
    """Tests for atomic writes."""

    def test_atomic_write_text(self, tmp_path):
        path = str(tmp_path / "sub" / "out.txt")
        atomic_write_text(path, "hello")

        assert open(path).read() == "hello"
        assert [f for f in os.listdir(tmp_path / "sub")] == ["out.txt"]

    def test_failed_write_leaves_nothing(self, tmp_path, monkeypatch):
        """Test a failing write leaves no partial file."""
        path = str(tmp_path / "out.bin")

        def fail(*args, **kwargs):
            raise OSError("disk full")

        monkeypatch.setattr(os, "replace", fail)
        with pytest.raises(OSError):
            atomic_write_text(path, "data")

        assert os.listdir(tmp_path) == []


class TestArtifactStore:
    """Tests for ArtifactStore."""

    def test_require_missing_stage(self, tmp_path):
        """Test a missing upstream artifact names its stage."""
        store = ArtifactStore(str(tmp_path))

        with pytest.raises(MissingArtifactException) as info:
            store.require_upstream("lda")
        assert info.value.stage == "tmatrix"

    def test_require_present_stage(self, tmp_path):
        store = ArtifactStore(str(tmp_path))
        atomic_write_text(store.stage_path("ubm"), "x")

        store.require_upstream("tmatrix")
        with pytest.raises(MissingArtifactException) as info:
            store.require("wada")
        assert info.value.stage == "wada"

    def test_unknown_stage(self, tmp_path):
        with pytest.raises(ValidationException):
            ArtifactStore(str(tmp_path)).stage_path("svm")

    def test_stage_order(self):
        assert STAGES[0] == "ubm"
        assert STAGES.index("tmatrix") < STAGES.index("lda") < STAGES.index("plda")

    def test_lock_is_exclusive(self, tmp_path):
        """Test a second command cannot enter a locked directory."""
        with ArtifactStore(str(tmp_path)):
            assert os.path.exists(tmp_path / LOCK_NAME)
            with pytest.raises(ValidationException):
                ArtifactStore(str(tmp_path)).acquire()

        assert not os.path.exists(tmp_path / LOCK_NAME)


class TestModelFiles:
    """Tests for versioned model files."""

    def test_save_and_load(self, tmp_path):
        path = str(tmp_path / "m.model")
        arrays = {"w": np.arange(6.0).reshape(2, 3), "b": np.array([0.5, -0.5])}
        save_model(path, "test", {"dim": 3}, arrays)

        meta, loaded = load_model(path, "test")

        assert meta == {"dim": 3}
        np.testing.assert_array_equal(loaded["w"], arrays["w"])
        np.testing.assert_array_equal(loaded["b"], arrays["b"])

    def test_encoding_is_deterministic(self):
        """Test array order does not change the bytes."""
        a = encode_model("k", {"x": 1}, {"a": np.ones(2), "b": np.zeros(3)})
        b = encode_model("k", {"x": 1}, {"b": np.zeros(3), "a": np.ones(2)})
        assert a == b

    def test_wrong_kind(self):
        data = encode_model("ubm", {}, {"a": np.ones(2)})
        with pytest.raises(ValidationException):
            decode_model(data, "lda")

    def test_truncated_and_bad_magic(self):
        data = encode_model("ubm", {}, {"a": np.ones(4)})
        with pytest.raises(ValidationException):
            decode_model(data[:-8], "ubm")
        with pytest.raises(ValidationException):
            decode_model(b"XXXX" + data[4:], "ubm")

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationException):
            encode_model("k", {}, {"a": np.array([1.0, np.nan])})


class TestMetrics:
    """Tests for the metrics textfile."""

    def test_write_metrics(self, tmp_path):
        record_iteration("ubm", -3.5)
        path = write_metrics(str(tmp_path))

        text = open(path).read()
        assert "evector_training_iterations_total" in text
        assert 'stage="ubm"' in text
