"""
MFCC front end: pre-emphasis, Hamming-windowed frames, mel filter bank,
log compression, DCT-II and log frame energy, plus per-utterance CMVN.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct, rfft
from scipy.signal import get_window

from dsp.audio import AudioClip
from utils.config import FeatureSettings
from utils.error_handler import AudioFormatException, InsufficientDataException

CMVN_STD_FLOOR = 1e-10


@dataclass(frozen=True)
class FeatureMatrix:
    """T x F matrix of per-frame features."""
    frames: np.ndarray
    frame_shift: float
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filter_centers(settings: FeatureSettings) -> np.ndarray:
    """Centre frequencies (Hz) of the triangular mel filters."""
    edges = np.linspace(hz_to_mel(settings.low_hz), hz_to_mel(settings.high_hz), settings.n_filters + 2)
    return mel_to_hz(edges[1:-1])


def mel_filterbank(settings: FeatureSettings, sample_rate: int) -> np.ndarray:
    """
    Triangular filters evaluated at the FFT bin frequencies.

    Returns:
        (n_filters, n_fft // 2 + 1) weight matrix
    """
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(settings.low_hz), hz_to_mel(settings.high_hz),
                                     settings.n_filters + 2))
    bins_hz = np.arange(settings.n_fft // 2 + 1) * sample_rate / settings.n_fft
    lower, centre, upper = edges_hz[:-2, None], edges_hz[1:-1, None], edges_hz[2:, None]
    rising = (bins_hz[None, :] - lower) / (centre - lower)
    falling = (upper - bins_hz[None, :]) / (upper - centre)
    return np.maximum(0.0, np.minimum(rising, falling))


def frame_signal(samples: np.ndarray, settings: FeatureSettings) -> np.ndarray:
    """Pre-emphasize and cut into overlapping frames; T = floor((N - L) / S) + 1."""
    if len(samples) < settings.frame_length:
        raise AudioFormatException(
            f"clip of {len(samples)} samples is shorter than one frame ({settings.frame_length})"
        )
    emphasized = np.append(samples[0], samples[1:] - settings.pre_emphasis * samples[:-1])
    return sliding_window_view(emphasized, settings.frame_length)[::settings.frame_shift]


def mel_filterbank_energies(clip: AudioClip, settings: Optional[FeatureSettings] = None) -> np.ndarray:
    """
    Linear mel filter-bank energies per frame (the stage before the log and DCT).

    Returns:
        (T, n_filters) matrix
    """
    settings = settings or FeatureSettings()
    frames = frame_signal(clip.samples, settings)
    window = get_window("hamming", settings.frame_length, fftbins=False)
    power = np.abs(rfft(frames * window, n=settings.n_fft, axis=1)) ** 2 / settings.n_fft
    return power @ mel_filterbank(settings, clip.sample_rate).T


def extract_mfcc(clip: AudioClip, settings: Optional[FeatureSettings] = None) -> FeatureMatrix:
    """
    Compute MFCCs 1..n_ceps plus log frame energy.

    Args:
        clip: 16 kHz clip at least one frame long
        settings: Front-end settings

    Returns:
        FeatureMatrix of shape (T, n_ceps + 1)
    """
    settings = settings or FeatureSettings()
    frames = frame_signal(clip.samples, settings)
    energies = mel_filterbank_energies(clip, settings)
    log_energies = np.log(np.maximum(energies, settings.log_floor))
    ceps = dct(log_energies, type=2, norm="ortho", axis=1)[:, 1:settings.n_ceps + 1]
    if settings.use_energy:
        frame_energy = np.log(np.maximum(np.sum(frames ** 2, axis=1), settings.log_floor))
        ceps = np.column_stack([ceps, frame_energy])
    return FeatureMatrix(ceps, settings.frame_shift / clip.sample_rate)


def cmvn(features: FeatureMatrix) -> FeatureMatrix:
    """
    Per-utterance mean and variance normalization.

    Zero-variance coefficients are only mean-centred.
    """
    x = features.frames
    if x.shape[0] < 2:
        raise InsufficientDataException(f"CMVN needs at least 2 frames, got {x.shape[0]}")
    centred = x - x.mean(axis=0)
    std = centred.std(axis=0)
    scale = np.where(std > CMVN_STD_FLOOR, std, 1.0)
    return FeatureMatrix(centred / scale, features.frame_shift, dict(features.meta))
