from abc import ABC, abstractmethod
from enum import Enum
from typing import Tuple

import numpy as np

from dsp.audio import AudioClip
from utils.error_handler import ValidationException


class SourceKind(str, Enum):
    STATIONARY_NOISE = "stationary_noise"
    NONSTATIONARY_NOISE = "nonstationary_noise"
    MUSIC = "music"
    SPEECH = "speech_surrogate"
    RIR = "rir_surrogate"


def split_source_id(source_id: str) -> Tuple[SourceKind, str]:
    """Split "kind/name" into its kind and name."""
    kind, sep, name = source_id.partition("/")
    if not sep or not name:
        raise ValidationException(f"Malformed source id '{source_id}'; expected 'kind/name'")
    try:
        return SourceKind(kind), name
    except ValueError as e:
        raise ValidationException(f"Unknown source kind in '{source_id}'") from e


class SourceBank(ABC):
    """Lookup of the raw material a virtual room is built from."""

    @abstractmethod
    def pick(self, kind: SourceKind, rng: np.random.Generator) -> str:
        """Choose a source id of the given kind."""

    @abstractmethod
    def get(self, source_id: str, duration_s: float) -> AudioClip:
        """
        Resolve a source id to audio.

        Noise, music and speech are returned at exactly `duration_s`; impulse
        responses are returned at their own length, truncated to `duration_s`.
        """
