"""
Diagonal-covariance GMM universal background model trained by EM.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp
from sklearn.cluster import kmeans_plusplus

from utils.error_handler import DimensionMismatchException, InsufficientDataException, NumericalException
from utils.logger import setup_logger

logger = setup_logger("ubm")

MIN_FRAMES_PER_COMPONENT = 50
EMPTY_COMPONENT_MASS = 1e-3
MONOTONIC_SLACK = 1e-6

IterationCallback = Callable[[int, float], None]


@dataclass(frozen=True)
class GmmModel:
    """C-component diagonal GMM."""
    weights: np.ndarray     # (C,)
    means: np.ndarray       # (C, F)
    variances: np.ndarray   # (C, F)

    @property
    def num_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def check_dim(self, x: np.ndarray) -> None:
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DimensionMismatchException(
                f"features of shape {x.shape} do not match UBM dimension {self.dim}"
            )

    def component_log_likelihoods(self, x: np.ndarray) -> np.ndarray:
        """log(w_c) + log N(x_t; m_c, diag(v_c)) for every frame and component, shape (T, C)."""
        self.check_dim(x)
        precision = 1.0 / self.variances
        const = (np.log(self.weights)
                 - 0.5 * (self.dim * np.log(2 * np.pi) + np.sum(np.log(self.variances), axis=1))
                 - 0.5 * np.sum(self.means ** 2 * precision, axis=1))
        quad = (x ** 2) @ precision.T - 2.0 * x @ (self.means * precision).T
        return const[None, :] - 0.5 * quad

    def posteriors(self, x: np.ndarray) -> np.ndarray:
        """Frame posteriors gamma_t(c), rows summing to 1."""
        log_p = self.component_log_likelihoods(x)
        return np.exp(log_p - logsumexp(log_p, axis=1, keepdims=True))

    def log_likelihood(self, x: np.ndarray) -> float:
        return float(np.sum(logsumexp(self.component_log_likelihoods(x), axis=1)))

    def to_payload(self) -> Tuple[Dict, Dict[str, np.ndarray]]:
        meta = {"C": self.num_components, "F": self.dim}
        return meta, {"weights": self.weights, "means": self.means, "variances": self.variances}

    @classmethod
    def from_payload(cls, meta: Dict, arrays: Dict[str, np.ndarray]) -> "GmmModel":
        return cls(arrays["weights"], arrays["means"], arrays["variances"])


def _stack(features: Sequence) -> np.ndarray:
    mats = [np.asarray(getattr(f, "frames", f), dtype=np.float64) for f in features]
    if not mats:
        raise InsufficientDataException("no feature matrices to train on")
    return np.vstack(mats)


def train_ubm(features: Sequence,
              C: int,
              iters: int,
              seed: int,
              init_subsample: int = 20000,
              variance_floor: float = 1e-4,
              on_iteration: Optional[IterationCallback] = None) -> GmmModel:
    """
    Train a diagonal GMM-UBM with k-means++ initialization and EM.

    Args:
        features: FeatureMatrix objects or (T, F) arrays
        C: Number of components
        iters: EM iterations
        seed: Random seed for subsampling, initialization and reseeding
        init_subsample: Frames drawn for k-means++ seeding
        variance_floor: Floor as a fraction of the global per-dimension variance
        on_iteration: Called with (iteration, total log-likelihood) before each M-step
            and once more for the final model

    Returns:
        Trained GmmModel
    """
    x = _stack(features)
    n_frames, dim = x.shape
    if n_frames < MIN_FRAMES_PER_COMPONENT * C:
        raise InsufficientDataException(
            f"UBM with {C} components needs at least {MIN_FRAMES_PER_COMPONENT * C} frames, got {n_frames}",
            details={"frames": n_frames, "components": C}
        )
    rng = np.random.default_rng(seed)

    global_mean = x.mean(axis=0)
    global_var = x.var(axis=0)
    floor = variance_floor * np.maximum(global_var, np.finfo(float).tiny)

    sub = x if n_frames <= init_subsample else x[np.sort(rng.choice(n_frames, init_subsample, replace=False))]
    if C == 1:
        means = global_mean[None, :].copy()
    else:
        means, _ = kmeans_plusplus(sub, n_clusters=C, random_state=int(rng.integers(0, 2 ** 31 - 1)))
    model = GmmModel(np.full(C, 1.0 / C), means, np.tile(np.maximum(global_var, floor), (C, 1)))

    x_sq = x ** 2
    history: List[float] = []
    empty_streak = np.zeros(C, dtype=int)
    reseeded = False
    for it in range(iters):
        log_p = model.component_log_likelihoods(x)
        frame_ll = logsumexp(log_p, axis=1)
        total_ll = float(np.sum(frame_ll))
        _check_monotonic(history, total_ll, skip=reseeded)
        history.append(total_ll)
        if on_iteration:
            on_iteration(it, total_ll)
        logger.debug(f"UBM iteration {it}: log-likelihood {total_ll:.4f}")

        gamma = np.exp(log_p - frame_ll[:, None])
        n = gamma.sum(axis=0)
        first = gamma.T @ x
        second = gamma.T @ x_sq

        empty = n < EMPTY_COMPONENT_MASS
        empty_streak = np.where(empty, empty_streak + 1, 0)
        if np.any(empty_streak >= 2):
            raise NumericalException(
                "UBM component stayed empty after reseeding twice",
                details={"components": np.flatnonzero(empty_streak >= 2).tolist()}
            )
        safe_n = np.where(empty, 1.0, n)
        means = first / safe_n[:, None]
        variances = np.maximum(second / safe_n[:, None] - means ** 2, floor)
        weights = n / n_frames

        reseeded = bool(np.any(empty))
        if reseeded:
            idx = np.flatnonzero(empty)
            logger.warning(f"Reseeding {len(idx)} empty UBM component(s) at iteration {it}")
            means[idx] = x[rng.choice(n_frames, len(idx), replace=False)]
            variances[idx] = np.maximum(global_var, floor)
            weights[idx] = 1.0 / n_frames
        model = GmmModel(weights / weights.sum(), means, variances)

    final_ll = model.log_likelihood(x)
    _check_monotonic(history, final_ll, skip=reseeded)
    history.append(final_ll)
    if on_iteration:
        on_iteration(iters, final_ll)
    logger.info(f"Trained UBM with {C} components on {n_frames} frames; final log-likelihood {final_ll:.4f}")
    return model


def _check_monotonic(history: List[float], value: float, skip: bool) -> None:
    if not history or skip:
        return
    previous = history[-1]
    if value < previous - MONOTONIC_SLACK * abs(previous):
        raise NumericalException(
            f"EM log-likelihood decreased from {previous:.6f} to {value:.6f}",
            details={"previous": previous, "current": value}
        )
