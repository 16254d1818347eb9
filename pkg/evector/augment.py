"""
Metadata augmentation of i-vectors and the train-only leakage guard.
"""
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from utils.config import AugmentVariant
from utils.error_handler import LeakageException, ValidationException
from utils.logger import setup_logger

logger = setup_logger("augment")


@dataclass(frozen=True)
class MetadataScaler:
    """Per-field z-normalization statistics of SNR (dB) and T60 (s)."""
    snr_mean: float
    snr_std: float
    t60_mean: float
    t60_std: float

    @classmethod
    def fit(cls, snr_db, t60_s) -> "MetadataScaler":
        """Fit on training-split estimates only."""
        snr = np.asarray(snr_db, dtype=np.float64)
        t60 = np.asarray(t60_s, dtype=np.float64)
        if snr.size == 0 or t60.size == 0:
            raise ValidationException("cannot fit metadata normalization on an empty split")
        snr_std, t60_std = float(snr.std()), float(t60.std())
        return cls(float(snr.mean()), snr_std if snr_std > 0 else 1.0,
                   float(t60.mean()), t60_std if t60_std > 0 else 1.0)

    def z_snr(self, snr_db) -> np.ndarray:
        return (np.asarray(snr_db, dtype=np.float64) - self.snr_mean) / self.snr_std

    def z_t60(self, t60_s) -> np.ndarray:
        return (np.asarray(t60_s, dtype=np.float64) - self.t60_mean) / self.t60_std


def augment(ivectors, snr_est, t60_est, scaler: Optional[MetadataScaler],
            variant: AugmentVariant = AugmentVariant.SNR_T60) -> np.ndarray:
    """
    Append z-normalized metadata estimates to i-vectors.

    Args:
        ivectors: (D,) or (N, D) i-vectors
        snr_est: SNR estimates in dB, one per vector
        t60_est: T60 estimates in seconds, one per vector
        scaler: Normalization fitted on the training split
        variant: Which fields to append; "constant" appends a zero field

    Returns:
        (N, D + k) array (or (D + k,) for a single vector)
    """
    variant = AugmentVariant(variant)
    X = np.asarray(getattr(ivectors, "values", ivectors), dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if variant == AugmentVariant.NONE:
        return X[0] if single else X
    if scaler is None:
        raise ValidationException("metadata normalization statistics are missing")

    snr = np.atleast_1d(scaler.z_snr(snr_est))
    t60 = np.atleast_1d(scaler.z_t60(t60_est))
    if len(snr) != len(X) or len(t60) != len(X):
        raise ValidationException(
            f"{len(X)} vectors but {len(snr)} SNR and {len(t60)} T60 estimates"
        )
    columns = {
        AugmentVariant.SNR: [snr],
        AugmentVariant.T60: [t60],
        AugmentVariant.SNR_T60: [snr, t60],
        AugmentVariant.CONSTANT: [np.zeros(len(X))],
    }[variant]
    out = np.column_stack([X] + columns)
    return out[0] if single else out


class LeakageGuard:
    """Rejects any use of splits outside the allowed set for estimator or augmentation fitting."""

    def __init__(self, allowed: Iterable[str] = ("train", "val")):
        self.allowed = frozenset(allowed)

    def check(self, splits: Iterable[str], purpose: str) -> None:
        used = set(splits)
        leaked = sorted(used - self.allowed)
        if leaked:
            logger.error(f"Leakage guard tripped for {purpose}: {leaked}")
            raise LeakageException(
                f"{purpose} may not read ground truth from split(s) {leaked}",
                details={"purpose": purpose, "splits": leaked}
            )
