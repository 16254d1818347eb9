"""
Verification and regression metrics.
"""
from typing import Iterable, Sequence, Tuple

import numpy as np

from schemas.report import TrialScore
from utils.error_handler import DimensionMismatchException, InsufficientDataException


def split_scores(trials: Iterable[TrialScore]) -> Tuple[np.ndarray, np.ndarray]:
    """(target scores, non-target scores)"""
    trials = list(trials)
    tar = np.array([t.score for t in trials if t.is_target], dtype=np.float64)
    non = np.array([t.score for t in trials if not t.is_target], dtype=np.float64)
    return tar, non


def det_curve(tar, non) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    False-accept and false-reject rates over all operating points.

    A trial is accepted when its score is >= the threshold. Thresholds are
    -inf, every distinct score in increasing order, then +inf.

    Returns:
        (thresholds, far, frr), far non-increasing and frr non-decreasing
    """
    tar = np.sort(np.asarray(tar, dtype=np.float64))
    non = np.sort(np.asarray(non, dtype=np.float64))
    if tar.size == 0 or non.size == 0:
        raise InsufficientDataException(
            "EER needs at least one target and one non-target trial",
            details={"targets": int(tar.size), "nontargets": int(non.size)}
        )
    thresholds = np.concatenate([[-np.inf], np.unique(np.concatenate([tar, non])), [np.inf]])
    far = 1.0 - np.searchsorted(non, thresholds, side="left") / non.size
    frr = np.searchsorted(tar, thresholds, side="left") / tar.size
    return thresholds, far, frr


def eer_from_scores(tar, non) -> float:
    """EER in percent with linear interpolation at the FAR/FRR crossing."""
    _, far, frr = det_curve(tar, non)
    diff = frr - far
    k = int(np.argmax(diff >= 0))
    if diff[k] == 0 or k == 0:
        return float(100.0 * far[k])
    t = -diff[k - 1] / (diff[k] - diff[k - 1])
    return float(100.0 * (far[k - 1] + t * (far[k] - far[k - 1])))


def compute_eer(trials: Iterable[TrialScore]) -> float:
    """
    Equal error rate (%) of a trial list.

    Args:
        trials: Scored trials with at least one target and one non-target

    Returns:
        EER in [0, 100]
    """
    tar, non = split_scores(trials)
    return eer_from_scores(tar, non)


def compute_mae(predictions: Sequence[float], truths: Sequence[float]) -> float:
    """Mean absolute error."""
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(truths, dtype=np.float64).ravel()
    if p.size != t.size:
        raise DimensionMismatchException(f"{p.size} predictions for {t.size} truths")
    if p.size == 0:
        raise InsufficientDataException("MAE of an empty set is undefined")
    return float(np.mean(np.abs(p - t)))
