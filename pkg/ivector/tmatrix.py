"""
Total-variability (T-matrix) training and i-vector extraction.

Utterance supervector offsets are modelled as T w with w ~ N(0, I). Given
centred statistics f~ and occupancies n, the posterior of w has precision
L = I + sum_c n_c T_c' S_c^-1 T_c and mean L^-1 T' S^-1 f~.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ivector.gmm import GmmModel
from ivector.stats import SufficientStats
from utils.error_handler import (DimensionMismatchException, InsufficientDataException,
                                 NumericalException, ValidationException)
from utils.logger import setup_logger

logger = setup_logger("tmatrix")

MONOTONIC_SLACK = 1e-6
MIN_COMPONENT_MASS = 1e-6


@dataclass(frozen=True)
class IVector:
    values: np.ndarray
    labels: Optional[Tuple[str, float, float]] = None


@dataclass(frozen=True)
class TMatrixModel:
    """Total-variability matrix of shape (C*F, D) tied to its UBM."""
    T: np.ndarray
    ubm: GmmModel
    _cache: Dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.T.shape[1]

    def blocks(self) -> np.ndarray:
        """T reshaped to (C, F, D)."""
        return self.T.reshape(self.ubm.num_components, self.ubm.dim, self.dim)

    def precision_terms(self) -> Tuple[np.ndarray, np.ndarray]:
        """(T_c' S_c^-1 T_c for every c, S^-1 T) computed once per model."""
        if "terms" not in self._cache:
            blocks = self.blocks()
            scaled = blocks / self.ubm.variances[:, :, None]
            self._cache["terms"] = (np.einsum("cfd,cfe->cde", blocks, scaled),
                                    scaled.reshape(-1, self.dim))
        return self._cache["terms"]

    def to_payload(self) -> Tuple[Dict, Dict[str, np.ndarray]]:
        meta = {"C": self.ubm.num_components, "F": self.ubm.dim, "D": self.dim}
        ubm_meta, ubm_arrays = self.ubm.to_payload()
        arrays = {"T": self.T}
        arrays.update({f"ubm/{k}": v for k, v in ubm_arrays.items()})
        return meta, arrays

    @classmethod
    def from_payload(cls, meta: Dict, arrays: Dict[str, np.ndarray]) -> "TMatrixModel":
        ubm = GmmModel.from_payload(meta, {k[4:]: v for k, v in arrays.items() if k.startswith("ubm/")})
        return cls(arrays["T"], ubm)


def _check_stats(stats: SufficientStats, ubm: GmmModel) -> None:
    if stats.f.shape != ubm.means.shape or stats.n.shape != (ubm.num_components,):
        raise DimensionMismatchException(
            f"statistics of shape {stats.f.shape} do not match UBM {ubm.means.shape}"
        )


def _posterior(stats: SufficientStats, model: TMatrixModel):
    """Return (w, L^-1, b, log|L|) for one utterance."""
    _check_stats(stats, model.ubm)
    tst, sinv_t = model.precision_terms()
    precision = np.eye(model.dim) + np.tensordot(stats.n, tst, axes=1)
    b = sinv_t.T @ stats.centered(model.ubm).reshape(-1)
    try:
        factor = cho_factor(precision, lower=True)
    except LinAlgError as e:
        raise NumericalException("i-vector posterior precision is not positive definite") from e
    covariance = cho_solve(factor, np.eye(model.dim))
    w = cho_solve(factor, b)
    if not np.all(np.isfinite(w)):
        raise NumericalException("i-vector posterior mean is not finite")
    log_det = 2.0 * np.sum(np.log(np.diag(factor[0])))
    return w, covariance, b, log_det


def extract_ivector(stats: SufficientStats, model: TMatrixModel, labels=None) -> IVector:
    """
    Posterior mean of the total-variability factor.

    Args:
        stats: Utterance statistics against model.ubm
        model: Trained T-matrix
        labels: Optional (room_id, snr_db, t60_s) carried into the i-vector

    Returns:
        IVector of dimension D
    """
    w, _, _, _ = _posterior(stats, model)
    return IVector(w, labels)


def train_tmatrix(stats: Sequence[SufficientStats],
                  ubm: GmmModel,
                  D: int,
                  iters: int,
                  seed: int,
                  on_iteration: Optional[Callable[[int, float], None]] = None) -> TMatrixModel:
    """
    Maximum-likelihood EM for the total-variability matrix.

    The objective sum_u (b_u' L_u^-1 b_u - log|L_u|) / 2 is the statistics'
    log-likelihood up to a constant and must not decrease between iterations.

    Args:
        stats: Per-utterance statistics
        ubm: Background model
        D: i-vector dimension
        iters: EM iterations
        seed: Initialization seed
        on_iteration: Called with (iteration, objective) before each M-step and for the final model

    Returns:
        TMatrixModel
    """
    C, F = ubm.num_components, ubm.dim
    if D >= C * F:
        raise ValidationException(f"i-vector dimension {D} must be below C*F = {C * F}")
    if len(stats) < D:
        raise InsufficientDataException(
            f"T-matrix training needs at least D={D} utterances, got {len(stats)}"
        )
    for s in stats:
        _check_stats(s, ubm)

    rng = np.random.default_rng(seed)
    T = 0.1 * rng.standard_normal((C * F, D)) * np.sqrt(ubm.variances.reshape(-1))[:, None]
    model = TMatrixModel(T, ubm)
    occupancy = np.sum([s.n for s in stats], axis=0)

    history: List[float] = []
    for it in range(iters):
        objective, acc_ww, acc_fw = _e_step(stats, model)
        _record(history, objective, it, on_iteration)

        blocks = model.blocks().copy()
        acc_fw = acc_fw.reshape(C, F, D)
        for c in range(C):
            if occupancy[c] < MIN_COMPONENT_MASS:
                continue
            try:
                blocks[c] = cho_solve(cho_factor(acc_ww[c], lower=True), acc_fw[c].T).T
            except LinAlgError as e:
                raise NumericalException(f"T-matrix M-step is singular for component {c}") from e
        model = TMatrixModel(blocks.reshape(C * F, D), ubm)

    objective, _, _ = _e_step(stats, model)
    _record(history, objective, iters, on_iteration)
    logger.info(f"Trained T-matrix D={D} on {len(stats)} utterances; objective {objective:.4f}")
    return model


def _e_step(stats: Sequence[SufficientStats], model: TMatrixModel):
    C, F, D = model.ubm.num_components, model.ubm.dim, model.dim
    acc_ww = np.zeros((C, D, D))
    acc_fw = np.zeros((C * F, D))
    objective = 0.0
    for s in stats:
        w, covariance, b, log_det = _posterior(s, model)
        second_moment = covariance + np.outer(w, w)
        acc_ww += s.n[:, None, None] * second_moment[None, :, :]
        acc_fw += np.outer(s.centered(model.ubm).reshape(-1), w)
        objective += 0.5 * (b @ w) - 0.5 * log_det
    return objective, acc_ww, acc_fw


def _record(history: List[float], objective: float, it: int, callback) -> None:
    if history:
        previous = history[-1]
        if objective < previous - MONOTONIC_SLACK * abs(previous):
            raise NumericalException(
                f"T-matrix EM objective decreased from {previous:.6f} to {objective:.6f}",
                details={"iteration": it}
            )
    history.append(objective)
    if callback:
        callback(it, objective)
    logger.debug(f"T-matrix iteration {it}: objective {objective:.4f}")
