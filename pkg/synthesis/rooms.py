"""
Virtual rooms: recipes (RoomSpec) and realized utterances (RoomInstance).
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from dsp.audio import AudioClip, convolve
from sources.base_source import SourceBank, SourceKind
from synthesis.mixing import build_background, measured_snr_db, mix_components, required_components
from synthesis.reverb import RirProfile, reshape_rir
from utils.config import RoomType
from utils.error_handler import AudioFormatException, ValidationException

SNR_RANGE_DB = (5.0, 25.0)
T60_RANGE_S = (0.05, 0.5)

_COMPONENT_KINDS = {
    "stationary_noise_id": SourceKind.STATIONARY_NOISE,
    "nonstationary_noise_id": SourceKind.NONSTATIONARY_NOISE,
    "music_id": SourceKind.MUSIC,
}


@dataclass(frozen=True)
class RoomSpec:
    """Recipe of one virtual room."""
    room_id: str
    room_type: RoomType
    rir_id: str
    rir: RirProfile
    snr_db: float
    stationary_noise_id: Optional[str] = None
    nonstationary_noise_id: Optional[str] = None
    music_id: Optional[str] = None

    def __post_init__(self):
        if not SNR_RANGE_DB[0] <= self.snr_db <= SNR_RANGE_DB[1]:
            raise ValidationException(f"snr_db {self.snr_db} outside [5, 25] dB")
        if not T60_RANGE_S[0] <= self.rir.t60_target <= T60_RANGE_S[1]:
            raise ValidationException(f"t60 target {self.rir.t60_target} outside [0.05, 0.5] s")
        present = required_components(self.room_type)
        for field in _COMPONENT_KINDS:
            if (getattr(self, field) is not None) != (field in present):
                raise ValidationException(
                    f"{self.room_type.value} room {self.room_id}: {field} must be "
                    f"{'set' if field in present else 'absent'}"
                )

    @property
    def t60_s(self) -> float:
        return self.rir.t60_target


@dataclass(frozen=True)
class RoomInstance:
    """One realized utterance in a room, with its stored mixing components."""
    spec: RoomSpec
    speech_id: str
    audio: AudioClip
    speech_component: np.ndarray
    background_component: np.ndarray
    gain: float
    seed: int

    @property
    def labels(self) -> Tuple[str, float, float]:
        return (self.spec.room_id, self.spec.snr_db, self.spec.t60_s)

    @property
    def realized_snr_db(self) -> float:
        return measured_snr_db(self.speech_component, self.background_component)


def sample_room_spec(room_id: str,
                     room_type: RoomType,
                     rng: np.random.Generator,
                     sources: SourceBank,
                     rir_duration_s: float = 1.0,
                     snr_range_db: Tuple[float, float] = SNR_RANGE_DB,
                     t60_range_s: Tuple[float, float] = T60_RANGE_S) -> RoomSpec:
    """
    Draw a room: SNR and T60 uniform over their ranges, one source per present component.

    Args:
        room_id: Unique room label
        room_type: Room type
        rng: Room-level random generator
        sources: Source bank
        rir_duration_s: Impulse-response length in seconds
        snr_range_db: SNR range
        t60_range_s: T60 range

    Returns:
        RoomSpec with a reshaped impulse response
    """
    room_type = RoomType(room_type)
    snr_db = float(rng.uniform(*snr_range_db))
    t60 = float(rng.uniform(*t60_range_s))
    rir_id = sources.pick(SourceKind.RIR, rng)
    rir = reshape_rir(sources.get(rir_id, rir_duration_s), t60)
    present = required_components(room_type)
    ids = {
        field: (sources.pick(kind, rng) if field in present else None)
        for field, kind in _COMPONENT_KINDS.items()
    }
    return RoomSpec(room_id=room_id, room_type=room_type, rir_id=rir_id, rir=rir, snr_db=snr_db, **ids)


def realize_room_instance(spec: RoomSpec,
                          speech: AudioClip,
                          sources: SourceBank,
                          seed: int,
                          speech_id: str = "",
                          background_duration_s: Optional[float] = None) -> RoomInstance:
    """
    Render one utterance in a room.

    Reverberant speech is the speech convolved with the room's reshaped impulse
    response; the background is the room's equal-power component mix, entered
    at a seed-dependent circular offset and scaled to the room's SNR.

    Args:
        spec: Room recipe
        speech: Dry speech
        sources: Source bank for the background components
        seed: Instance seed
        speech_id: Source id of the speech, carried into the instance
        background_duration_s: Background length before looping (defaults to the reverberant length)

    Returns:
        RoomInstance whose audio is the peak-normalized mixture
    """
    if len(speech) == 0:
        raise AudioFormatException("empty audio: speech has no samples")
    rng = np.random.default_rng(seed)
    reverberant = convolve(speech, spec.rir.impulse)
    duration = background_duration_s or reverberant.duration
    background = build_background(spec, sources, duration)
    offset = int(rng.integers(0, int(round(duration * speech.sample_rate))))
    parts = mix_components(reverberant, background.clip, spec.snr_db, offset)

    scale = 1.0 / np.max(np.abs(parts.mixture))
    speech_part = parts.speech * scale
    background_part = parts.background * scale
    return RoomInstance(
        spec=spec,
        speech_id=speech_id,
        audio=AudioClip(speech_part + background_part, speech.sample_rate),
        speech_component=speech_part,
        background_component=background_part,
        gain=parts.gain,
        seed=int(seed),
    )
