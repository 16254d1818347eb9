"""
RIFF/WAVE PCM 16-bit reading and writing.
"""
from dataclasses import dataclass

import numpy as np
import soundfile as sf

from dsp.audio import SAMPLE_RATE, AudioClip
from utils.artifacts import atomic_path
from utils.error_handler import AudioFormatException, ValidationException
from utils.logger import setup_logger

logger = setup_logger("wavio")

PCM_SCALE = 32768.0


@dataclass(frozen=True)
class WavWriteResult:
    """Outcome of save_wav."""
    path: str
    clamped_samples: int


def load_wav(path: str) -> AudioClip:
    """
    Load the first channel of a 16 kHz PCM-16 WAV file as amplitudes in [-1, 1].

    Args:
        path: WAV file path

    Returns:
        AudioClip
    """
    try:
        info = sf.info(path)
    except RuntimeError as e:
        raise AudioFormatException(f"malformed WAV header in {path}: {e}", details={"path": path}) from e
    if info.format != "WAV" or info.subtype != "PCM_16":
        raise AudioFormatException(
            f"unsupported encoding {info.format}/{info.subtype} in {path}; only PCM-16 WAV is supported",
            details={"path": path, "format": info.format, "subtype": info.subtype}
        )
    if info.frames == 0:
        raise AudioFormatException(f"empty audio in {path}", details={"path": path})
    if info.samplerate != SAMPLE_RATE:
        raise AudioFormatException(
            f"{path} is sampled at {info.samplerate} Hz; only {SAMPLE_RATE} Hz is supported",
            details={"path": path, "sample_rate": info.samplerate}
        )

    data, _ = sf.read(path, dtype="int16", always_2d=True)
    return AudioClip(data[:, 0].astype(np.float64) / PCM_SCALE, SAMPLE_RATE)


def save_wav(clip: AudioClip, path: str) -> WavWriteResult:
    """
    Write a clip as a PCM-16 mono WAV file, clamping samples outside [-1, 1].

    Args:
        clip: Clip to write
        path: Destination path

    Returns:
        WavWriteResult with the number of clamped samples
    """
    if len(clip) == 0:
        raise AudioFormatException("empty audio cannot be written", details={"path": path})

    clamped = int(np.count_nonzero(np.abs(clip.samples) > 1.0))
    if clamped:
        logger.warning(f"Clamped {clamped} samples outside [-1, 1] while writing {path}")
    samples = np.clip(clip.samples, -1.0, 1.0)
    pcm = np.clip(np.round(samples * PCM_SCALE), -32768, 32767).astype(np.int16)

    try:
        with atomic_path(path) as tmp:
            sf.write(tmp, pcm, clip.sample_rate, subtype="PCM_16", format="WAV")
    except (OSError, RuntimeError) as e:
        raise ValidationException(f"cannot write {path}: {e}", details={"path": path}) from e
    return WavWriteResult(path=path, clamped_samples=clamped)
