"""
Baum-Welch sufficient statistics of an utterance against a UBM.
"""
from dataclasses import dataclass

import numpy as np

from ivector.gmm import GmmModel


@dataclass(frozen=True)
class SufficientStats:
    """Zeroth-order (n) and first-order (f) statistics."""
    n: np.ndarray   # (C,)
    f: np.ndarray   # (C, F)

    @property
    def num_frames(self) -> float:
        return float(np.sum(self.n))

    def centered(self, ubm: GmmModel) -> np.ndarray:
        """First-order statistics centred on the UBM means, f_c - n_c * m_c."""
        return self.f - self.n[:, None] * ubm.means


def accumulate_stats(features, ubm: GmmModel) -> SufficientStats:
    """
    Accumulate n_c = sum_t gamma_t(c) and f_c = sum_t gamma_t(c) x_t.

    Args:
        features: FeatureMatrix or (T, F) array
        ubm: Background model

    Returns:
        SufficientStats
    """
    x = np.asarray(getattr(features, "frames", features), dtype=np.float64)
    gamma = ubm.posteriors(x)
    return SufficientStats(gamma.sum(axis=0), gamma.T @ x)
