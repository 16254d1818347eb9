"""
Audio container and the signal-processing primitives shared by every stage.
"""
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from utils.error_handler import AudioFormatException

SAMPLE_RATE = 16000


@dataclass(frozen=True)
class AudioClip:
    """Mono sample buffer with its sample rate."""
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise AudioFormatException("AudioClip samples must be one-dimensional",
                                       details={"shape": list(samples.shape)})
        if int(self.sample_rate) <= 0:
            raise AudioFormatException("Sample rate must be positive",
                                       details={"sample_rate": self.sample_rate})
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "AudioClip":
        return AudioClip(samples, self.sample_rate)


def _require_nonempty(clip: AudioClip, what: str = "clip") -> None:
    if len(clip) == 0:
        raise AudioFormatException(f"empty audio: {what} has no samples")


def _require_nonzero(clip: AudioClip, what: str = "clip") -> None:
    _require_nonempty(clip, what)
    if not np.any(clip.samples):
        raise AudioFormatException(f"all-zero audio: {what} has no energy")


def peak_normalize(clip: AudioClip) -> AudioClip:
    """
    Scale a clip so that its maximum absolute sample is 1.

    Args:
        clip: Nonempty, not all-zero clip

    Returns:
        Normalized clip
    """
    _require_nonzero(clip)
    peak = np.max(np.abs(clip.samples))
    return clip.with_samples(clip.samples / peak)


def signal_power(clip: AudioClip) -> float:
    """Mean squared amplitude."""
    _require_nonempty(clip)
    return float(np.mean(np.square(clip.samples)))


def signal_power_db(clip: AudioClip) -> float:
    """
    Power of a clip in decibels, 10*log10(mean(x^2)).

    Raises AudioFormatException for all-zero input instead of returning -inf.
    """
    _require_nonzero(clip)
    return float(10.0 * np.log10(signal_power(clip)))


def convolve(x: AudioClip, h: AudioClip, normalize: bool = True) -> AudioClip:
    """
    Full linear convolution through the frequency domain.

    Args:
        x: Input signal
        h: Impulse response
        normalize: Peak-normalize the result

    Returns:
        Clip of length len(x) + len(h) - 1
    """
    if x.sample_rate != h.sample_rate:
        raise AudioFormatException(
            "sample-rate mismatch in convolution",
            details={"x": x.sample_rate, "h": h.sample_rate}
        )
    _require_nonempty(x, "signal")
    _require_nonempty(h, "impulse response")
    y = x.with_samples(fftconvolve(x.samples, h.samples, mode="full"))
    return peak_normalize(y) if normalize else y


def tile_to_length(samples: np.ndarray, length: int, offset: int = 0) -> np.ndarray:
    """Loop a buffer (starting at `offset`) until it covers `length` samples, then truncate."""
    if len(samples) == 0:
        raise AudioFormatException("cannot tile an empty buffer")
    idx = (np.arange(length) + offset) % len(samples)
    return samples[idx]
