"""
Configuration for pytest.
"""
import os
import sys
import pytest

# Add the project root directory to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Set environment variables for testing
os.environ.setdefault("LOG_LEVEL", "DEBUG")
os.environ.setdefault("LOG_DIR", "./logs")
os.environ.setdefault("WORKERS", "1")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-seed end-to-end runs")


TINY_CONFIG = {
    "seed": 7,
    "corpus": {
        "train_rooms": 6,
        "instances_per_room": 3,
        "val_rooms": 2,
        "val_instances_per_room": 2,
        "enroll_test_rooms_per_type": 2,
        "enroll_instances_per_room": 2,
        "test_instances_per_room": 2,
        "train_duration_s": 2.0,
        "test_duration_s": 2.0,
        "room_types": ["complete_room", "no_music"],
    },
    "features": {},
    "ubm": {"components": 4, "iters": 2, "init_subsample": 2000},
    "tmatrix": {"dim": 8, "iters": 2},
    "lda": {"dims": [2, 4]},
    "plda": {},
    "metadata": {
        "epochs": 5,
        "patience": 3,
        "batch_size": 8,
        "hidden_layers": [6, 3, 6],
        "wada_samples_per_point": 2000,
    },
    "eval": {
        "room_types": ["complete_room", "no_music"],
        "augmentation_j": 4,
    },
}


@pytest.fixture
def tiny_config_dict():
    """Raw configuration mapping for a corpus small enough to run end to end."""
    import copy
    return copy.deepcopy(TINY_CONFIG)


@pytest.fixture
def tiny_config(tiny_config_dict):
    """Validated tiny pipeline configuration."""
    from utils.config import parse_pipeline_config
    return parse_pipeline_config(tiny_config_dict)


@pytest.fixture
def tiny_config_file(tmp_path, tiny_config_dict):
    """Tiny configuration written to a YAML file."""
    import yaml
    path = tmp_path / "pipeline.yaml"
    path.write_text(yaml.safe_dump(tiny_config_dict))
    return str(path)
