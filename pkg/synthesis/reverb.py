"""
Reverberation-time estimation and impulse-response reshaping.
"""
from dataclasses import dataclass

import numpy as np

from dsp.audio import AudioClip, peak_normalize
from utils.error_handler import SynthesisException, ValidationException
from utils.logger import setup_logger

logger = setup_logger("reverb")

DECAY_DB = -30.0
T60_TOLERANCE = 0.10
NEAR_ZERO_T60_S = 0.010


@dataclass(frozen=True)
class RirProfile:
    """Reshaped impulse response with its reverberation bookkeeping."""
    impulse: AudioClip
    t60_measured: float
    t60_target: float
    alpha: float
    t60_realized: float


def schroeder_decay_db(samples: np.ndarray) -> np.ndarray:
    """
    Backward-integrated energy decay curve in dB relative to its value at t=0.

    Samples after the last nonzero one are -inf.
    """
    energy = np.square(np.asarray(samples, dtype=np.float64))
    edc = np.cumsum(energy[::-1])[::-1]
    if edc[0] <= 0:
        raise SynthesisException("impulse response has no energy")
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(edc / edc[0])


def estimate_t60(impulse: AudioClip) -> float:
    """
    Estimate T60 as twice the time the Schroeder curve needs to drop 30 dB.

    Args:
        impulse: Room impulse response

    Returns:
        T60 in seconds
    """
    h = peak_normalize(impulse).samples
    edc_db = schroeder_decay_db(h)
    below = np.flatnonzero(edc_db <= DECAY_DB)
    if len(below) == 0:
        raise SynthesisException(
            f"decay never reaches {DECAY_DB:.0f} dB within the clip "
            f"(minimum {float(np.min(edc_db)):.1f} dB)",
            details={"length": len(h)}
        )
    n = int(below[0])
    prev = edc_db[n - 1]
    if np.isfinite(edc_db[n]) and edc_db[n] != prev:
        crossing = (n - 1) + (DECAY_DB - prev) / (edc_db[n] - prev)
    else:
        crossing = float(n)
    t60 = 2.0 * crossing / impulse.sample_rate
    if t60 < NEAR_ZERO_T60_S:
        logger.warning(f"Impulse response decays almost immediately (T60={t60 * 1000:.3f} ms)")
    return float(t60)


def reshape_rir(impulse: AudioClip, t60_target: float) -> RirProfile:
    """
    Raise a normalized impulse response to the power alpha = T60_measured / T60_target.

    The power is applied sign-preserving, sign(h)*|h|**alpha, which scales the
    log-envelope by alpha and so divides the decay time by alpha.

    Args:
        impulse: Room impulse response
        t60_target: Desired T60 in seconds

    Returns:
        RirProfile with the reshaped impulse
    """
    if t60_target <= 0:
        raise ValidationException(f"T60 target must be positive, got {t60_target}")
    measured = estimate_t60(impulse)
    alpha = measured / t60_target
    h = peak_normalize(impulse).samples
    reshaped = impulse.with_samples(np.sign(h) * np.abs(h) ** alpha)

    realized = estimate_t60(reshaped)
    if abs(realized - t60_target) > T60_TOLERANCE * t60_target:
        raise SynthesisException(
            f"reshaped impulse response has T60 {realized:.4f}s, target {t60_target:.4f}s",
            details={"measured": measured, "target": t60_target, "alpha": alpha, "realized": realized}
        )
    return RirProfile(
        impulse=reshaped,
        t60_measured=measured,
        t60_target=float(t60_target),
        alpha=float(alpha),
        t60_realized=realized,
    )
