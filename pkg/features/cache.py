"""
Binary feature cache.

Each file holds one FeatureMatrix: a little-endian header
(magic b"EVFC", uint32 T, uint32 F, float64 frame_shift) followed by the
T x F frames as row-major little-endian float32.
"""
import hashlib
import os
import struct
from typing import Callable

import numpy as np

from features.mfcc import FeatureMatrix
from utils.artifacts import atomic_write_bytes
from utils.error_handler import ValidationException, safe_execute
from utils.logger import setup_logger

logger = setup_logger("features")

MAGIC = b"EVFC"
_HEADER = struct.Struct("<4sIId")


def encode_features(features: FeatureMatrix) -> bytes:
    t, f = features.frames.shape
    header = _HEADER.pack(MAGIC, t, f, features.frame_shift)
    return header + np.ascontiguousarray(features.frames, dtype="<f4").tobytes()


def decode_features(data: bytes) -> FeatureMatrix:
    if len(data) < _HEADER.size:
        raise ValidationException("feature cache file is truncated")
    magic, t, f, frame_shift = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValidationException("not a feature cache file")
    expected = _HEADER.size + 4 * t * f
    if len(data) != expected:
        raise ValidationException(f"feature cache size {len(data)} does not match header ({expected})")
    frames = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(t, f).astype(np.float64)
    return FeatureMatrix(frames, frame_shift)


def write_features(path: str, features: FeatureMatrix) -> str:
    return atomic_write_bytes(path, encode_features(features))


def read_features(path: str) -> FeatureMatrix:
    with open(path, "rb") as f:
        return decode_features(f.read())


class FeatureCache:
    """Directory of cached feature files keyed by utterance and front-end settings."""

    def __init__(self, root: str, settings_digest: str):
        self.root = root
        self.settings_digest = settings_digest

    def path_for(self, key: str) -> str:
        name = hashlib.sha1(f"{self.settings_digest}:{key}".encode("utf-8")).hexdigest()
        return os.path.join(self.root, name[:2], f"{name}.feat")

    def get(self, key: str, compute: Callable[[], FeatureMatrix]) -> FeatureMatrix:
        """
        Return cached features for `key`, computing and storing them on a miss.

        Values always come back through the float32 cache representation, so
        hits and misses yield identical matrices.
        """
        path = self.path_for(key)
        if os.path.isfile(path):
            cached = safe_execute(read_features, path)
            if cached is not None:
                return cached
            logger.warning(f"Recomputing unreadable cache entry for {key}")
        data = encode_features(compute())
        atomic_write_bytes(path, data)
        return decode_features(data)
