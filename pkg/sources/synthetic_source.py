"""
Deterministic signal generators standing in for licensed speech, noise,
music and impulse-response corpora.

Every generator is a pure function of (kind, seed, duration): the same
arguments always produce the same samples.
"""
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy.signal import butter, lfilter, sosfilt

from dsp.audio import SAMPLE_RATE, AudioClip
from sources.base_source import SourceBank, SourceKind, split_source_id
from utils.error_handler import ValidationException

SeedLike = Union[int, np.random.SeedSequence]

# Rough (F1, F2, F3) vowel formants in Hz
VOWEL_FORMANTS = (
    (730.0, 1090.0, 2440.0),
    (270.0, 2290.0, 3010.0),
    (300.0, 870.0, 2240.0),
    (530.0, 1840.0, 2480.0),
    (660.0, 1720.0, 2410.0),
    (570.0, 840.0, 2410.0),
    (440.0, 1020.0, 2240.0),
)

PENTATONIC = (0, 2, 4, 7, 9)


def _peak(x: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(x))
    return x / peak if peak > 0 else x


def _stationary_noise(rng: np.random.Generator, n: int, fs: int) -> np.ndarray:
    low = rng.uniform(50.0, 300.0)
    high = rng.uniform(2000.0, 6000.0)
    sos = butter(4, [low, high], btype="bandpass", fs=fs, output="sos")
    warmup = fs // 10
    y = sosfilt(sos, rng.standard_normal(n + warmup))[warmup:]
    return _peak(y)


def _gate_segment(length: int, ramp: int) -> np.ndarray:
    seg = np.ones(length)
    r = min(ramp, length // 2)
    if r > 0:
        edge = 0.5 - 0.5 * np.cos(np.pi * np.arange(r) / r)
        seg[:r] = edge
        seg[length - r:] = edge[::-1]
    return seg


def _nonstationary_noise(rng: np.random.Generator, n: int, fs: int) -> np.ndarray:
    cutoff = rng.uniform(300.0, 1000.0)
    sos = butter(2, cutoff, btype="highpass", fs=fs, output="sos")
    warmup = fs // 10
    carrier = sosfilt(sos, rng.standard_normal(n + warmup))[warmup:]
    carrier /= np.sqrt(np.mean(carrier ** 2))

    gate = np.full(n, 0.03)
    ramp = int(0.01 * fs)
    pos = int(rng.uniform(0.0, 0.1) * fs)
    while pos < n:
        burst = int(rng.uniform(0.2, 0.6) * fs)
        gap = int(rng.uniform(1.0, 1.5) * fs)
        level = rng.uniform(0.6, 1.0)
        end = min(n, pos + burst)
        seg = _gate_segment(burst, ramp)[:end - pos]
        gate[pos:end] = np.maximum(gate[pos:end], level * seg)
        pos += burst + gap
    return _peak(carrier * gate)


def _music(rng: np.random.Generator, n: int, fs: int) -> np.ndarray:
    y = np.zeros(n)
    base = int(rng.integers(45, 57))
    pos = 0
    while pos < n:
        note = int(rng.uniform(0.25, 0.6) * fs)
        decay = rng.uniform(0.3, 0.8)
        for _ in range(2):
            midi = base + int(rng.choice(PENTATONIC)) + 12 * int(rng.integers(0, 2))
            f0 = 440.0 * 2.0 ** ((midi - 69) / 12.0)
            length = min(n - pos, note + int(0.3 * fs))
            t = np.arange(length) / fs
            env = (1.0 - np.exp(-t / 0.02)) * np.exp(-t / decay)
            tone = np.zeros(length)
            for k in range(1, 6):
                if k * f0 >= fs / 2:
                    break
                tone += np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi)) / k
            y[pos:pos + length] += env * tone
        pos += note
    t = np.arange(n) / fs
    y *= 1.0 + 0.2 * np.sin(2 * np.pi * 0.5 * t + rng.uniform(0, 2 * np.pi))
    return _peak(y)


def _resonator(freq: float, fs: int):
    bandwidth = 80.0 + 0.05 * freq
    r = np.exp(-np.pi * bandwidth / fs)
    theta = 2 * np.pi * freq / fs
    return [1.0 - r], [1.0, -2.0 * r * np.cos(theta), r * r]


def _speech(rng: np.random.Generator, n: int, fs: int) -> np.ndarray:
    f0_base = rng.uniform(90.0, 220.0)
    speaker_scale = rng.uniform(0.9, 1.15)

    # Pitch contour: random knots every 200 ms, linearly interpolated
    knot_step = int(0.2 * fs)
    knots = np.arange(0, n + knot_step, knot_step)
    f0 = np.interp(np.arange(n), knots, f0_base * (1.0 + rng.uniform(-0.15, 0.15, size=len(knots))))
    phase = np.cumsum(f0 / fs)
    pulses = np.zeros(n)
    pulses[1:][np.diff(np.floor(phase)) > 0] = 1.0
    glottal = lfilter([1.0], [1.0, -0.95], pulses)

    out = np.zeros(n)
    tail = int(0.03 * fs)
    pos = min(int(0.05 * fs), max(0, n - 1))
    while pos < n:
        syllable = max(1, int(rng.uniform(0.12, 0.3) * fs))
        pause = int(rng.uniform(0.02, 0.15) * fs)
        end = min(n, pos + syllable)
        formants = np.array(VOWEL_FORMANTS[int(rng.integers(0, len(VOWEL_FORMANTS)))]) * speaker_scale
        length = end - pos
        excitation = np.zeros(min(n, end + tail) - pos)
        window = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(length) / max(1, length))
        excitation[:length] = (glottal[pos:end] + 0.02 * rng.standard_normal(length)) * window
        seg = excitation
        for freq in formants:
            b, a = _resonator(float(freq), fs)
            seg = lfilter(b, a, seg)
        out[pos:pos + len(seg)] += seg
        pos = end + pause
    return _peak(out)


def _rir(rng: np.random.Generator, n: int, fs: int, t60: Optional[float]) -> np.ndarray:
    if t60 is None:
        t60 = rng.uniform(0.15, 0.6)
    t = np.arange(n) / fs
    envelope = 10.0 ** (-3.0 * t / t60)
    carrier = rng.choice([-1.0, 1.0], size=n)

    # Early reflections: delayed copies of the direct-sound sign pattern
    wavelet = carrier[:32].copy()
    for _ in range(int(rng.integers(3, 7))):
        delay = int(rng.uniform(0.002, 0.03) * fs)
        stop = min(n, delay + len(wavelet))
        if delay < n:
            carrier[delay:stop] = wavelet[:stop - delay]
    h = carrier * envelope
    h[0] = 1.0
    return h


def synth_sources(kind: Union[SourceKind, str],
                  seed: SeedLike,
                  duration: float,
                  sample_rate: int = SAMPLE_RATE,
                  t60: Optional[float] = None) -> AudioClip:
    """
    Generate one synthetic source clip.

    Args:
        kind: Source kind
        seed: Integer seed or SeedSequence
        duration: Clip duration in seconds
        sample_rate: Output sample rate
        t60: Decay time of an impulse-response surrogate (seed-dependent if None)

    Returns:
        Peak-normalized clip (impulse responses have their direct path at 1)
    """
    kind = SourceKind(kind)
    if not duration or duration <= 0:
        raise ValidationException(f"Source duration must be positive, got {duration}")
    if t60 is not None and t60 <= 0:
        raise ValidationException(f"Impulse-response T60 must be positive, got {t60}")
    n = max(1, int(round(duration * sample_rate)))
    rng = np.random.default_rng(seed)

    if kind == SourceKind.STATIONARY_NOISE:
        samples = _stationary_noise(rng, n, sample_rate)
    elif kind == SourceKind.NONSTATIONARY_NOISE:
        samples = _nonstationary_noise(rng, n, sample_rate)
    elif kind == SourceKind.MUSIC:
        samples = _music(rng, n, sample_rate)
    elif kind == SourceKind.SPEECH:
        samples = _speech(rng, n, sample_rate)
    else:
        samples = _rir(rng, n, sample_rate, t60)
    return AudioClip(samples, sample_rate)


@lru_cache(maxsize=64)
def _cached_source(kind: SourceKind, number: int, duration: float, sample_rate: int) -> AudioClip:
    seed = np.random.SeedSequence([list(SourceKind).index(kind), number])
    return synth_sources(kind, seed, duration, sample_rate)


class SyntheticSourceBank(SourceBank):
    """Source bank backed by synth_sources; ids look like "music/004211"."""

    def __init__(self, sample_rate: int = SAMPLE_RATE):
        self.sample_rate = sample_rate

    def pick(self, kind: SourceKind, rng: np.random.Generator) -> str:
        return f"{SourceKind(kind).value}/{int(rng.integers(0, 1_000_000)):06d}"

    def get(self, source_id: str, duration_s: float) -> AudioClip:
        kind, name = split_source_id(source_id)
        try:
            number = int(name)
        except ValueError as e:
            raise ValidationException(f"Unresolvable synthetic source id '{source_id}'") from e
        return _cached_source(kind, number, float(duration_s), self.sample_rate)
