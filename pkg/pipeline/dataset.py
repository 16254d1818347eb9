"""
Manifest, feature and i-vector access for the training and evaluation stages.
"""
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from dsp.audio import AudioClip
from dsp.wavio import load_wav
from features.cache import FeatureCache
from features.mfcc import FeatureMatrix, cmvn, extract_mfcc
from schemas.manifest import SPLITS, ManifestRecord
from utils.config import FeatureSettings
from utils.error_handler import AudioFormatException, MissingArtifactException, ValidationException
from utils.logger import setup_logger

logger = setup_logger("dataset")

FEATURE_DIR = "features"


class Dataset:
    """Records of one manifest, with paths resolved against its directory."""

    def __init__(self, manifest_path: str, records: Sequence[ManifestRecord]):
        self.manifest_path = manifest_path
        self.root = os.path.dirname(os.path.abspath(manifest_path))
        self.records = list(records)

    def __len__(self) -> int:
        return len(self.records)

    def select(self, splits: Iterable[str] = SPLITS, room_type=None) -> List[ManifestRecord]:
        splits = set(splits)
        return [r for r in self.records
                if r.split in splits and (room_type is None or r.room_type == room_type)]

    def audio_path(self, record: ManifestRecord) -> str:
        return os.path.join(self.root, record.path)

    def clip(self, record: ManifestRecord) -> AudioClip:
        return load_wav(self.audio_path(record))

    def split_counts(self) -> Dict[str, int]:
        counts = {s: 0 for s in SPLITS}
        for r in self.records:
            counts[r.split] += 1
        return counts


def load_manifest(path: Optional[str]) -> Dataset:
    """
    Read a JSON-lines manifest written by the synth command.

    Args:
        path: Manifest path

    Returns:
        Dataset
    """
    if not path or not os.path.isfile(path):
        raise MissingArtifactException("synth", f"Manifest not found: {path}; run synth first")
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(ManifestRecord.model_validate_json(line))
            except ValidationError as e:
                raise ValidationException(
                    f"Invalid manifest record on line {number} of {path}",
                    details={"errors": e.errors(include_url=False)}
                ) from e
    if not records:
        raise ValidationException(f"Manifest {path} has no records")
    logger.info(f"Loaded {len(records)} manifest records from {path}")
    return Dataset(path, records)


def feature_settings_digest(settings: FeatureSettings) -> str:
    canonical = json.dumps(settings.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def feature_cache_for(model_dir: str, settings: FeatureSettings) -> FeatureCache:
    return FeatureCache(os.path.join(model_dir, FEATURE_DIR), feature_settings_digest(settings))


def record_labels(record: ManifestRecord) -> Dict[str, object]:
    """Source labels carried alongside features."""
    return {"instance_id": record.instance_id, "room_id": record.room_id,
            "room_type": record.room_type.value, "snr_db": record.snr_db, "t60_s": record.t60_s}


def compute_features(clip: AudioClip, settings: FeatureSettings) -> FeatureMatrix:
    """MFCCs with optional per-utterance CMVN."""
    features = extract_mfcc(clip, settings)
    return cmvn(features) if settings.apply_cmvn else features


def audio_cache_key(audio_path: str, instance_id: str) -> str:
    """Cache key of one recording: its instance id and a digest of the WAV bytes."""
    try:
        with open(audio_path, "rb") as f:
            digest = hashlib.sha256(f.read()).hexdigest()
    except OSError as e:
        raise AudioFormatException(f"cannot read {audio_path}: {e}", details={"path": audio_path}) from e
    return f"{instance_id}:{digest}"


def _features_job(args) -> FeatureMatrix:
    audio_path, record, settings, cache = args
    key = audio_cache_key(audio_path, record.instance_id)
    features = cache.get(key, lambda: compute_features(load_wav(audio_path), settings))
    return FeatureMatrix(features.frames, features.frame_shift, record_labels(record))


def load_features(dataset: Dataset, records: Sequence[ManifestRecord], settings: FeatureSettings,
                  cache: FeatureCache, workers: int = 1) -> List[FeatureMatrix]:
    """
    Features of each record, served from the cache when present.

    Entries are keyed by instance id and audio content, so a re-synthesized
    corpus never reads features of an earlier one.

    Args:
        dataset: Owning dataset
        records: Records to load
        settings: Front-end settings
        cache: Feature cache
        workers: Worker processes for cache misses

    Returns:
        One FeatureMatrix per record, in order
    """
    jobs = [(dataset.audio_path(r), r, settings, cache) for r in records]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_features_job, jobs))
    return [_features_job(job) for job in jobs]


def _pick(seq: Sequence, idx: np.ndarray) -> list:
    return [seq[i] for i in idx]


@dataclass(frozen=True)
class IVectorTable:
    """I-vectors of every manifest record with their labels, row-aligned."""
    instance_ids: List[str]
    room_ids: List[str]
    room_types: List[str]
    splits: List[str]
    paths: List[str]
    values: np.ndarray
    snr_db: np.ndarray
    t60_s: np.ndarray

    def __len__(self) -> int:
        return len(self.instance_ids)

    def mask(self, splits: Iterable[str] = SPLITS, room_type=None) -> np.ndarray:
        splits = set(splits)
        room_type = getattr(room_type, "value", room_type)
        return np.array([s in splits and (room_type is None or rt == room_type)
                         for s, rt in zip(self.splits, self.room_types)], dtype=bool)

    def subset(self, mask: np.ndarray) -> "IVectorTable":
        idx = np.flatnonzero(mask)
        return IVectorTable(_pick(self.instance_ids, idx), _pick(self.room_ids, idx),
                            _pick(self.room_types, idx), _pick(self.splits, idx),
                            _pick(self.paths, idx), self.values[idx],
                            self.snr_db[idx], self.t60_s[idx])

    def select(self, splits: Iterable[str] = SPLITS, room_type=None) -> "IVectorTable":
        return self.subset(self.mask(splits, room_type))

    def target(self, kind) -> np.ndarray:
        return self.snr_db if getattr(kind, "value", kind) == "snr_db" else self.t60_s

    def to_payload(self):
        meta = {"instance_ids": self.instance_ids, "room_ids": self.room_ids,
                "room_types": self.room_types, "splits": self.splits, "paths": self.paths}
        return meta, {"values": self.values, "snr_db": self.snr_db, "t60_s": self.t60_s}

    @classmethod
    def from_payload(cls, meta, arrays) -> "IVectorTable":
        return cls(list(meta["instance_ids"]), list(meta["room_ids"]), list(meta["room_types"]),
                   list(meta["splits"]), list(meta["paths"]), arrays["values"],
                   arrays["snr_db"], arrays["t60_s"])

    @classmethod
    def from_records(cls, records: Sequence[ManifestRecord], values: np.ndarray) -> "IVectorTable":
        return cls([r.instance_id for r in records], [r.room_id for r in records],
                   [r.room_type.value for r in records], [r.split for r in records],
                   [r.path for r in records], np.asarray(values, dtype=np.float64),
                   np.array([r.snr_db for r in records]), np.array([r.t60_s for r in records]))
