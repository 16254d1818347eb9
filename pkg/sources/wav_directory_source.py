import os
from functools import lru_cache
from typing import Dict, List

import numpy as np

from dsp.audio import AudioClip, tile_to_length
from dsp.wavio import load_wav
from sources.base_source import SourceBank, SourceKind, split_source_id
from utils.error_handler import ValidationException
from utils.logger import setup_logger

logger = setup_logger("sources")


@lru_cache(maxsize=128)
def _load(path: str) -> AudioClip:
    return load_wav(path)


class WavDirectorySource(SourceBank):
    """
    Source bank over real recordings.

    Expects one sub-directory per source kind under `root`
    (e.g. root/speech_surrogate/*.wav, root/rir_surrogate/*.wav); ids are
    "<kind>/<file name>".
    """

    def __init__(self, root: str):
        if not os.path.isdir(root):
            raise ValidationException(f"Source directory {root} does not exist")
        self.root = root
        self.files: Dict[SourceKind, List[str]] = {}
        for kind in SourceKind:
            kind_dir = os.path.join(root, kind.value)
            names = sorted(f for f in os.listdir(kind_dir) if f.lower().endswith(".wav")) \
                if os.path.isdir(kind_dir) else []
            self.files[kind] = names
        logger.info(
            f"Indexed {root}: " + ", ".join(f"{k.value}={len(v)}" for k, v in self.files.items())
        )

    def pick(self, kind: SourceKind, rng: np.random.Generator) -> str:
        kind = SourceKind(kind)
        names = self.files[kind]
        if not names:
            raise ValidationException(f"No {kind.value} recordings under {self.root}")
        return f"{kind.value}/{names[int(rng.integers(0, len(names)))]}"

    def get(self, source_id: str, duration_s: float) -> AudioClip:
        kind, name = split_source_id(source_id)
        if name not in self.files[kind]:
            raise ValidationException(f"Unresolvable source id '{source_id}'")
        clip = _load(os.path.join(self.root, kind.value, name))
        n = int(round(duration_s * clip.sample_rate))
        if kind == SourceKind.RIR:
            return clip.with_samples(clip.samples[:n])
        return clip.with_samples(tile_to_length(clip.samples, n))
