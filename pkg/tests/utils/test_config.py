"""
Tests for the configuration utilities.
"""
import pytest
import yaml
from pydantic import ValidationError

from config.settings import Settings
from utils.config import (
    AugmentVariant,
    RoomType,
    TargetKind,
    config_digest,
    dump_config_yaml,
    load_pipeline_config,
    parse_pipeline_config,
)
from utils.error_handler import ConfigurationException


class TestEnums:
    """Tests for configuration enums."""

    def test_room_type_values(self):
        """Test RoomType enum values."""
        assert RoomType.COMPLETE_ROOM == "complete_room"
        assert RoomType.NO_MUSIC == "no_music"
        assert RoomType.MUSIC_RIR == "music_rir"
        assert RoomType.NO_STAT_NOISE == "no_stat_noise"
        assert RoomType.NO_NONSTAT_NOISE == "no_nonstat_noise"

    def test_variant_and_target_values(self):
        assert AugmentVariant.SNR_T60 == "snr_t60"
        assert AugmentVariant.CONSTANT == "constant"
        assert TargetKind.SNR_DB == "snr_db"
        assert TargetKind.T60_S == "t60_s"


class TestSettings:
    """Tests for environment settings."""

    def test_settings_from_environment(self, monkeypatch):
        """Test Settings reads its aliases from the environment."""
        monkeypatch.setenv("LOG_LEVEL", "debug")
        monkeypatch.setenv("WORKERS", "4")
        monkeypatch.setenv("MODEL_DIR", "/tmp/models")

        settings = Settings()

        assert settings.log_level == "DEBUG"
        assert settings.workers == 4
        assert settings.model_dir == "/tmp/models"
        assert settings.config_path == "config/pipeline.yaml"

    def test_unknown_log_level(self, monkeypatch):
        monkeypatch.setenv("LOG_LEVEL", "chatty")
        with pytest.raises(ValidationError):
            Settings()


class TestPipelineConfig:
    """Tests for the pipeline configuration."""

    def test_parse_tiny_config(self, tiny_config):
        """Test parsing fills defaults and sorts dims."""
        assert tiny_config.seed == 7
        assert tiny_config.features.dim == 20
        assert tiny_config.lda.dims == [2, 4]
        assert tiny_config.max_j == 4
        assert tiny_config.plda.regularization == 1e-6
        assert tiny_config.eval.augmentation_estimator == "bottleneck"

    def test_seed_override(self, tiny_config_dict):
        config = parse_pipeline_config(tiny_config_dict, seed_override=11)
        assert config.seed == 11

    def test_missing_section(self, tiny_config_dict):
        """Test a missing section is a configuration error."""
        del tiny_config_dict["plda"]

        with pytest.raises(ConfigurationException) as info:
            parse_pipeline_config(tiny_config_dict)
        assert info.value.details["missing"] == ["plda"]

    def test_missing_seed(self, tiny_config_dict):
        del tiny_config_dict["seed"]

        with pytest.raises(ConfigurationException):
            parse_pipeline_config(tiny_config_dict)

    def test_unknown_key_rejected(self, tiny_config_dict):
        tiny_config_dict["ubm"]["mixtures"] = 8

        with pytest.raises(ConfigurationException):
            parse_pipeline_config(tiny_config_dict)

    def test_dims_bounded_by_training_rooms(self, tiny_config_dict):
        """Test LDA dims may not exceed train_rooms - 1."""
        tiny_config_dict["lda"]["dims"] = [2, 6]

        with pytest.raises(ConfigurationException):
            parse_pipeline_config(tiny_config_dict)

    def test_tmatrix_below_supervector(self, tiny_config_dict):
        tiny_config_dict["tmatrix"]["dim"] = 80

        with pytest.raises(ConfigurationException):
            parse_pipeline_config(tiny_config_dict)

    def test_snr_range_bounds(self, tiny_config_dict):
        tiny_config_dict["corpus"]["snr_range_db"] = [0.0, 25.0]

        with pytest.raises(ConfigurationException):
            parse_pipeline_config(tiny_config_dict)

    def test_digest_is_stable(self, tiny_config_dict):
        """Test the digest depends only on the effective configuration."""
        a = parse_pipeline_config(tiny_config_dict)
        b = parse_pipeline_config(dict(reversed(list(tiny_config_dict.items()))))
        c = parse_pipeline_config(tiny_config_dict, seed_override=8)

        assert config_digest(a) == config_digest(b)
        assert config_digest(a) != config_digest(c)
        assert len(config_digest(a)) == 64

    def test_yaml_round_trip(self, tiny_config):
        """Test the echoed YAML parses back to the same configuration."""
        reparsed = parse_pipeline_config(yaml.safe_load(dump_config_yaml(tiny_config)))
        assert config_digest(reparsed) == config_digest(tiny_config)

    def test_load_from_file(self, tiny_config_file):
        config = load_pipeline_config(tiny_config_file, seed_override=3)
        assert config.seed == 3
        assert config.ubm.components == 4

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationException):
            load_pipeline_config(str(tmp_path / "missing.yaml"))

    def test_shipped_config_is_valid(self):
        """Test the repository's default configuration validates."""
        import os
        root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
        config = load_pipeline_config(os.path.join(root, "config", "pipeline.yaml"))
        assert config.max_j == 30
        assert config.tmatrix.dim == 100
