"""
Level arithmetic for virtual rooms: equal-power backgrounds and exact-SNR mixing.
"""
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from dsp.audio import AudioClip, convolve, peak_normalize, signal_power, tile_to_length
from sources.base_source import SourceBank
from utils.config import RoomType
from utils.error_handler import AudioFormatException, SynthesisException

SNR_TOLERANCE_DB = 0.01

# Background components present in each room type
ROOM_COMPONENTS: Dict[RoomType, Tuple[str, ...]] = {
    RoomType.COMPLETE_ROOM: ("stationary_noise_id", "nonstationary_noise_id", "music_id"),
    RoomType.NO_MUSIC: ("stationary_noise_id", "nonstationary_noise_id"),
    RoomType.MUSIC_RIR: ("music_id",),
    RoomType.NO_STAT_NOISE: ("nonstationary_noise_id", "music_id"),
    RoomType.NO_NONSTAT_NOISE: ("stationary_noise_id", "music_id"),
}


def required_components(room_type: RoomType) -> Tuple[str, ...]:
    """RoomSpec fields that must be set for a room type."""
    return ROOM_COMPONENTS[RoomType(room_type)]


@dataclass(frozen=True)
class MixComponents:
    """Speech and scaled background of one mixture, before peak normalization."""
    speech: np.ndarray
    background: np.ndarray
    gain: float
    snr_db: float
    sample_rate: int

    @property
    def mixture(self) -> np.ndarray:
        return self.speech + self.background


@dataclass(frozen=True)
class BackgroundMix:
    """Unit-power background components and their sum."""
    components: Dict[str, np.ndarray]
    sample_rate: int

    @property
    def clip(self) -> AudioClip:
        total = np.sum(np.stack(list(self.components.values())), axis=0)
        return AudioClip(total, self.sample_rate)


def measured_snr_db(speech: np.ndarray, background: np.ndarray) -> float:
    """10*log10 of the speech-to-background power ratio."""
    return float(10.0 * np.log10(np.mean(speech ** 2) / np.mean(background ** 2)))


def mix_components(speech: AudioClip, background: AudioClip, snr_db: float, offset: int = 0) -> MixComponents:
    """
    Scale a background so that speech/background power equals snr_db.

    The background is looped or truncated to the speech length starting at
    `offset`. g = sqrt(P_speech / (P_background * 10**(snr_db/10))).
    """
    if speech.sample_rate != background.sample_rate:
        raise AudioFormatException(
            "sample-rate mismatch in mixing",
            details={"speech": speech.sample_rate, "background": background.sample_rate}
        )
    bg = tile_to_length(background.samples, len(speech), offset)
    p_speech = signal_power(speech)
    p_background = float(np.mean(bg ** 2))
    if p_speech <= 0 or p_background <= 0:
        raise AudioFormatException("zero-power speech or background cannot be mixed")

    gain = float(np.sqrt(p_speech / (p_background * 10.0 ** (snr_db / 10.0))))
    scaled = gain * bg
    realized = measured_snr_db(speech.samples, scaled)
    if abs(realized - snr_db) > SNR_TOLERANCE_DB:
        raise SynthesisException(
            f"realized SNR {realized:.4f} dB differs from target {snr_db:.4f} dB",
            details={"target": snr_db, "realized": realized}
        )
    return MixComponents(speech.samples, scaled, gain, float(snr_db), speech.sample_rate)


def mix_at_snr(speech: AudioClip, background: AudioClip, snr_db: float, offset: int = 0) -> AudioClip:
    """
    Mix speech and background at an exact SNR.

    Args:
        speech: Speech clip (typically reverberant)
        background: Background clip, looped or truncated to the speech length
        snr_db: Target SNR in dB
        offset: Starting sample within the background

    Returns:
        Peak-normalized mixture
    """
    parts = mix_components(speech, background, snr_db, offset)
    return peak_normalize(AudioClip(parts.mixture, speech.sample_rate))


def build_background(spec, sources: SourceBank, duration_s: float) -> BackgroundMix:
    """
    Equal-power sum of the background components a room type includes.

    Each present component is scaled to unit power. For music_rir rooms the
    music is convolved with the room's reshaped impulse response first.

    Args:
        spec: RoomSpec
        sources: Source bank resolving component ids
        duration_s: Background length in seconds

    Returns:
        BackgroundMix with one entry per present component
    """
    n = int(round(duration_s * spec.rir.impulse.sample_rate))
    components = {}
    for field in required_components(spec.room_type):
        source_id = getattr(spec, field)
        if source_id is None:
            raise SynthesisException(f"{spec.room_type.value} room {spec.room_id} is missing {field}")
        clip = sources.get(source_id, duration_s)
        if field == "music_id" and spec.room_type == RoomType.MUSIC_RIR:
            clip = convolve(clip, spec.rir.impulse)
        samples = tile_to_length(clip.samples, n)
        power = float(np.mean(samples ** 2))
        if power <= 0:
            raise SynthesisException(f"background source {source_id} has no energy")
        components[field] = samples / np.sqrt(power)
    if not components:
        raise SynthesisException(f"room type {spec.room_type.value} has no background components")
    return BackgroundMix(components, spec.rir.impulse.sample_rate)
