"""
Tests for manifest access, model bundling and stage commands.
"""
import os

import numpy as np
import pytest

from dsp.audio import AudioClip
from dsp.wavio import load_wav, save_wav
from evector.augment import LeakageGuard
from metadata.ridge import RidgeModel, train_ridge
from pipeline.commands import EFFECTIVE_CONFIG, cmd_train
from pipeline.dataset import (Dataset, IVectorTable, compute_features, feature_cache_for, load_features,
                              load_manifest)
from pipeline.stages import bundle_models, estimator_dims, estimator_tables, load_wada, unbundle_models
from schemas.manifest import ManifestRecord
from utils.artifacts import LOCK_NAME, ArtifactStore
from utils.config import FeatureSettings, RoomType, TargetKind
from utils.error_handler import (AudioFormatException, LeakageException, MissingArtifactException,
                                 ValidationException)


def record(room, split, index, room_type=RoomType.COMPLETE_ROOM, snr=10.0, t60=0.2):
    return ManifestRecord(path=f"{split}/{room}/{index:02d}.wav", instance_id=f"{room}/{split}/{index:02d}",
                          room_id=room, room_type=room_type, split=split, snr_db=snr, t60_s=t60,
                          speech_id=f"speech/{index}", seed=index, rir_id=f"rir/{room}")


def sample_records():
    return [
        record("room-a", "train", 0),
        record("room-a", "train", 1),
        record("room-b", "val", 0, snr=20.0),
        record("room-c", "enroll", 0, room_type=RoomType.NO_MUSIC),
        record("room-c", "test", 0, room_type=RoomType.NO_MUSIC, t60=0.4),
    ]


def write_manifest(path, records):
    path.write_text("\n".join(r.to_json_line() for r in records) + "\n")
    return str(path)


class TestLoadManifest:
    """Tests for manifest loading."""

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(MissingArtifactException) as exc_info:
            load_manifest(str(tmp_path / "manifest.jsonl"))
        assert exc_info.value.stage == "synth"

    def test_no_path(self):
        with pytest.raises(MissingArtifactException):
            load_manifest(None)

    def test_invalid_line(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        path.write_text(record("room-a", "train", 0).to_json_line() + "\n{\"path\": \"x.wav\"}\n")

        with pytest.raises(ValidationException) as exc_info:
            load_manifest(str(path))
        assert "line 2" in exc_info.value.message

    def test_empty_manifest(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        path.write_text("\n")
        with pytest.raises(ValidationException):
            load_manifest(str(path))

    def test_dataset(self, tmp_path):
        dataset = load_manifest(write_manifest(tmp_path / "manifest.jsonl", sample_records()))

        assert len(dataset) == 5
        assert dataset.split_counts() == {"train": 2, "val": 1, "enroll": 1, "test": 1}
        assert [r.instance_id for r in dataset.select(["test"], RoomType.NO_MUSIC)] == ["room-c/test/00"]
        assert dataset.select(["test"], RoomType.COMPLETE_ROOM) == []
        assert dataset.audio_path(dataset.records[0]) == os.path.join(str(tmp_path), "train/room-a/00.wav")


class TestLoadFeatures:
    """Tests for cached feature loading."""

    def write_corpus(self, root, seed):
        root.mkdir()
        rec = record("room-a", "train", 0)
        clip = AudioClip(0.3 * np.random.default_rng(seed).standard_normal(8000))
        os.makedirs(os.path.dirname(str(root / rec.path)))
        save_wav(clip, str(root / rec.path))
        return Dataset(str(root / "manifest.jsonl"), [rec]), rec

    def test_same_ids_different_audio(self, tmp_path):
        """Test a re-synthesized corpus does not reuse features of the previous one."""
        settings = FeatureSettings()
        cache = feature_cache_for(str(tmp_path / "models"), settings)
        first, rec = self.write_corpus(tmp_path / "first", seed=1)
        second, _ = self.write_corpus(tmp_path / "second", seed=2)

        old = load_features(first, [rec], settings, cache)[0]
        new = load_features(second, [rec], settings, cache)[0]
        fresh = compute_features(load_wav(second.audio_path(rec)), settings)

        assert not np.allclose(old.frames, new.frames)
        np.testing.assert_allclose(new.frames, fresh.frames, atol=1e-4)

    def test_cache_hit_and_labels(self, tmp_path):
        settings = FeatureSettings()
        cache = feature_cache_for(str(tmp_path / "models"), settings)
        dataset, rec = self.write_corpus(tmp_path / "corpus", seed=3)

        first = load_features(dataset, [rec], settings, cache)[0]
        second = load_features(dataset, [rec], settings, cache)[0]

        np.testing.assert_array_equal(first.frames, second.frames)
        assert second.meta == {"instance_id": "room-a/train/00", "room_id": "room-a",
                               "room_type": "complete_room", "snr_db": 10.0, "t60_s": 0.2}

    def test_missing_audio(self, tmp_path):
        settings = FeatureSettings()
        dataset = Dataset(str(tmp_path / "manifest.jsonl"), sample_records()[:1])

        with pytest.raises(AudioFormatException):
            load_features(dataset, dataset.records, settings, feature_cache_for(str(tmp_path), settings))


class TestIVectorTable:
    """Tests for the row-aligned i-vector table."""

    @pytest.fixture
    def table(self):
        records = sample_records()
        return IVectorTable.from_records(records, np.arange(10.0).reshape(5, 2))

    def test_labels(self, table):
        assert len(table) == 5
        assert table.room_types[3] == "no_music"
        np.testing.assert_array_equal(table.target(TargetKind.SNR_DB), [10.0, 10.0, 20.0, 10.0, 10.0])
        np.testing.assert_array_equal(table.target("t60_s"), [0.2, 0.2, 0.2, 0.2, 0.4])

    def test_mask_and_select(self, table):
        np.testing.assert_array_equal(table.mask(["train", "val"]), [True, True, True, False, False])
        np.testing.assert_array_equal(table.mask(["enroll", "test"], RoomType.NO_MUSIC),
                                      [False, False, False, True, True])

        test = table.select(["test"])
        assert test.instance_ids == ["room-c/test/00"]
        np.testing.assert_array_equal(test.values, [[8.0, 9.0]])
        assert test.t60_s[0] == 0.4

    def test_payload(self, table):
        restored = IVectorTable.from_payload(*table.to_payload())

        assert restored.instance_ids == table.instance_ids
        assert restored.splits == table.splits
        np.testing.assert_array_equal(restored.values, table.values)

    def test_estimator_tables(self, table):
        train, val = estimator_tables(table, "ridge")

        assert train.splits == ["train", "train"]
        assert val.splits == ["val"]

    def test_estimator_tables_guard_sees_selected_splits(self, table):
        with pytest.raises(LeakageException) as exc_info:
            estimator_tables(table, "ridge", splits=("train", "test"))
        assert exc_info.value.details["splits"] == ["test"]

        with pytest.raises(LeakageException):
            estimator_tables(table, "bottleneck", guard=LeakageGuard(allowed=("train",)))


class TestBundling:
    """Tests for multi-model artifacts."""

    def test_bundle_round_trip(self):
        rng = np.random.default_rng(0)
        X, y = rng.standard_normal((20, 3)), rng.standard_normal(20)
        models = {"snr_db/j2": train_ridge(X, y, TargetKind.SNR_DB, 1.0),
                  "t60_s/j2": train_ridge(X, 0.1 * y, TargetKind.T60_S, 0.5)}

        meta, arrays = bundle_models(models)
        restored = unbundle_models(meta, arrays, RidgeModel)

        assert sorted(meta["models"]) == ["snr_db/j2", "t60_s/j2"]
        assert all("/" in name for name in arrays)
        assert restored["t60_s/j2"].lam == 0.5
        np.testing.assert_array_equal(restored["snr_db/j2"].beta, models["snr_db/j2"].beta)

    def test_estimator_dims(self, tiny_config):
        assert estimator_dims(tiny_config) == [2, 4]

    def test_estimator_dims_adds_augmentation_dim(self, tiny_config_dict):
        from utils.config import parse_pipeline_config
        tiny_config_dict["eval"]["augmentation_j"] = 3

        assert estimator_dims(parse_pipeline_config(tiny_config_dict)) == [2, 3, 4]


class TestCmdTrain:
    """Tests for the train command outside a full run."""

    def test_missing_upstream(self, tiny_config, tmp_path):
        """Test training LDA before the T-matrix names the missing stage."""
        model_dir = str(tmp_path / "models")

        with pytest.raises(MissingArtifactException) as exc_info:
            cmd_train(tiny_config, None, "lda", model_dir)

        assert exc_info.value.stage == "tmatrix"
        assert not os.path.exists(os.path.join(model_dir, LOCK_NAME))

    def test_unknown_stage(self, tiny_config, tmp_path):
        with pytest.raises(ValidationException):
            cmd_train(tiny_config, None, "svm", str(tmp_path))

    def test_missing_manifest(self, tiny_config, tmp_path):
        with pytest.raises(MissingArtifactException) as exc_info:
            cmd_train(tiny_config, str(tmp_path / "none.jsonl"), "ubm", str(tmp_path / "models"))
        assert exc_info.value.stage == "synth"

    def test_wada_needs_no_manifest(self, tiny_config, tmp_path):
        model_dir = str(tmp_path / "models")

        path = cmd_train(tiny_config, None, "wada", model_dir)

        assert os.path.basename(path) == "wada_table.txt"
        for name in ("wada_training.csv", EFFECTIVE_CONFIG, "metrics.prom"):
            assert os.path.isfile(os.path.join(model_dir, name))
        table = load_wada(ArtifactStore(model_dir))
        assert np.all(np.diff(table.g) > 0)

    def test_locked_directory(self, tiny_config, tmp_path):
        model_dir = str(tmp_path / "models")
        with ArtifactStore(model_dir):
            with pytest.raises(ValidationException):
                cmd_train(tiny_config, None, "wada", model_dir)


def test_dataset_from_records():
    dataset = Dataset("/data/corpus/manifest.jsonl", sample_records())
    assert dataset.root == "/data/corpus"
    assert dataset.split_counts()["train"] == 2
