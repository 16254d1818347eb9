"""
WADA SNR baseline.

Clean speech amplitudes are modelled as Gamma(0.4) and noise as Gaussian.
The statistic G = log(mean|z|) - mean(log|z|) grows with SNR from about 0.41
(Gaussian) towards log(0.4) - digamma(0.4) (Gamma speech). A Monte Carlo
table maps G back to SNR.
"""
import io
from dataclasses import dataclass

import numpy as np
from sklearn.isotonic import IsotonicRegression

from dsp.audio import AudioClip
from utils.artifacts import atomic_write_text
from utils.error_handler import (AudioFormatException, InsufficientDataException,
                                 NumericalException, ValidationException)
from utils.logger import setup_logger

logger = setup_logger("wada")

GAMMA_SHAPE = 0.4
SNR_MIN_DB = -20.0
SNR_MAX_DB = 60.0
RAW_MONOTONE_TOLERANCE = 0.02
MIN_DURATION_S = 1.0


@dataclass(frozen=True)
class WadaTable:
    """Lookup pairs, G strictly increasing with snr_db."""
    g: np.ndarray
    snr_db: np.ndarray

    def __post_init__(self):
        if len(self.g) != len(self.snr_db) or len(self.g) < 2:
            raise ValidationException("WADA table needs at least two matching (G, SNR) pairs")
        if np.any(np.diff(self.g) <= 0) or np.any(np.diff(self.snr_db) <= 0):
            raise ValidationException("WADA table must be strictly increasing in G and SNR")


def wada_statistic(samples: np.ndarray) -> float:
    """G over the nonzero amplitudes; scale invariant."""
    amplitude = np.abs(np.asarray(samples, dtype=np.float64))
    amplitude = amplitude[amplitude > 0]
    if amplitude.size == 0:
        raise AudioFormatException("WADA statistic is undefined for an all-zero signal")
    return float(np.log(amplitude.mean()) - np.mean(np.log(amplitude)))


def gamma_speech(rng: np.random.Generator, n: int, shape: float = GAMMA_SHAPE) -> np.ndarray:
    """Unit-power speech surrogate with Gamma(shape) amplitudes and random sign."""
    amplitude = rng.gamma(shape, 1.0, n) / np.sqrt(shape * (shape + 1.0))
    return amplitude * rng.choice([-1.0, 1.0], n)


def build_wada_table(seed: int, samples_per_point: int = 20000, step_db: float = 1.0,
                     shape: float = GAMMA_SHAPE) -> WadaTable:
    """
    Monte Carlo construction of the G-to-SNR table on [-20, 60] dB.

    The same speech and noise draws are reused at every grid point so the
    raw curve is smooth; isotonic regression removes residual wiggles.

    Args:
        seed: Random seed
        samples_per_point: Samples per grid SNR
        step_db: Grid step (at most 1 dB)
        shape: Gamma shape of the speech amplitudes

    Returns:
        WadaTable
    """
    if not 0 < step_db <= 1.0:
        raise ValidationException(f"WADA grid step must be in (0, 1] dB, got {step_db}")
    rng = np.random.default_rng(seed)
    speech = gamma_speech(rng, samples_per_point, shape)
    noise = rng.standard_normal(samples_per_point)
    noise /= np.sqrt(np.mean(noise ** 2))
    speech /= np.sqrt(np.mean(speech ** 2))

    grid = np.arange(SNR_MIN_DB, SNR_MAX_DB + step_db / 2, step_db)
    raw = np.array([wada_statistic(10.0 ** (snr / 20.0) * speech + noise) for snr in grid])
    drop = np.max(np.maximum.accumulate(raw) - raw)
    if drop > RAW_MONOTONE_TOLERANCE:
        raise NumericalException(
            f"raw WADA table decreases by {drop:.4f}, beyond smoothing tolerance",
            details={"drop": float(drop)}
        )
    smooth = IsotonicRegression(increasing=True).fit_transform(grid, raw)
    ramp = np.arange(len(grid)) * 1e-9
    g = smooth + ramp
    logger.info(f"Built WADA table over {len(grid)} grid points; G in [{g[0]:.4f}, {g[-1]:.4f}]")
    return WadaTable(g, grid)


def wada_estimate(clip: AudioClip, table: WadaTable) -> float:
    """
    Blind SNR estimate in dB, clamped to the table range.

    Args:
        clip: At least one second of audio
        table: Lookup table

    Returns:
        Estimated SNR (dB)
    """
    if clip.duration < MIN_DURATION_S:
        raise InsufficientDataException(
            f"WADA needs at least {MIN_DURATION_S:g} s of audio, got {clip.duration:.3f} s"
        )
    g = wada_statistic(clip.samples)
    return float(np.interp(g, table.g, table.snr_db))


def save_wada_table(path: str, table: WadaTable) -> str:
    """Two-column text file (G, snr_db)."""
    buffer = io.StringIO()
    np.savetxt(buffer, np.column_stack([table.g, table.snr_db]), fmt="%.17g", header="g snr_db")
    return atomic_write_text(path, buffer.getvalue())


def load_wada_table(path: str) -> WadaTable:
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] != 2:
        raise ValidationException(f"WADA table {path} must have two columns")
    return WadaTable(data[:, 0], data[:, 1])
