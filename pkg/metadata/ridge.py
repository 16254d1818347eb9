"""
Ridge regression of SNR / T60 from e-vectors with an unpenalized intercept.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, solve

from utils.config import TargetKind
from utils.error_handler import (DimensionMismatchException, InsufficientDataException,
                                 NumericalException, ValidationException)
from utils.logger import setup_logger

logger = setup_logger("ridge")


@dataclass(frozen=True)
class RidgeModel:
    """beta holds the weights followed by the intercept."""
    beta: np.ndarray
    lam: float
    target_kind: TargetKind
    fit_intercept: bool = True

    @property
    def input_dim(self) -> int:
        return len(self.beta) - (1 if self.fit_intercept else 0)

    @property
    def weights(self) -> np.ndarray:
        return self.beta[:self.input_dim]

    @property
    def intercept(self) -> float:
        return float(self.beta[-1]) if self.fit_intercept else 0.0

    def to_payload(self):
        meta = {"lambda": self.lam, "target": self.target_kind.value, "fit_intercept": self.fit_intercept}
        return meta, {"beta": self.beta}

    @classmethod
    def from_payload(cls, meta, arrays) -> "RidgeModel":
        return cls(arrays["beta"], float(meta["lambda"]), TargetKind(meta["target"]),
                   bool(meta.get("fit_intercept", True)))


def _design(X: np.ndarray, fit_intercept: bool) -> np.ndarray:
    return np.column_stack([X, np.ones(len(X))]) if fit_intercept else X


def train_ridge(X, y, target_kind: TargetKind, lam: float, fit_intercept: bool = True) -> RidgeModel:
    """
    Solve (X'X + lam I~) beta = X'y, I~ zero in the intercept slot.

    Args:
        X: (n, j) e-vectors
        y: (n,) targets in dB or seconds
        target_kind: What y measures
        lam: Regularization strength (0 gives ordinary least squares)
        fit_intercept: Append a constant column exempt from the penalty

    Returns:
        RidgeModel
    """
    if lam < 0:
        raise ValidationException(f"ridge lambda must be non-negative, got {lam}")
    X = np.asarray(getattr(X, "values", X), dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionMismatchException(f"design {X.shape} does not match {len(y)} targets")
    if len(y) < 2:
        raise InsufficientDataException(f"ridge regression needs at least 2 samples, got {len(y)}")

    design = _design(X, fit_intercept)
    penalty = np.eye(design.shape[1]) * lam
    if fit_intercept:
        penalty[-1, -1] = 0.0
    gram = design.T @ design + penalty
    rhs = design.T @ y
    try:
        beta = solve(gram, rhs, assume_a="pos")
    except LinAlgError as e:
        raise NumericalException(
            f"ridge normal equations are singular at lambda={lam}", details={"lambda": lam}
        ) from e
    if not np.all(np.isfinite(beta)):
        raise NumericalException(f"ridge solution is not finite at lambda={lam}")
    return RidgeModel(beta, float(lam), TargetKind(target_kind), fit_intercept)


def predict_ridge(model: RidgeModel, X) -> np.ndarray:
    """beta'[x; 1] for one e-vector (scalar) or a batch."""
    x = np.asarray(getattr(X, "values", X), dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise DimensionMismatchException(
            f"input of dimension {x.shape[-1]} does not match ridge model {model.input_dim}"
        )
    out = x @ model.weights + model.intercept
    return float(out) if np.ndim(out) == 0 else out


def select_ridge_lambda(X_train, y_train, X_val, y_val, target_kind: TargetKind,
                        grid: Sequence[float]) -> Tuple[RidgeModel, List[Dict[str, float]]]:
    """
    Grid-search lambda by validation MAE.

    Ties go to the smaller lambda.

    Returns:
        (best model, one record per lambda with train and validation MAE)
    """
    if len(y_val) == 0:
        raise InsufficientDataException("lambda selection needs a non-empty validation split")
    best: Optional[RidgeModel] = None
    best_mae = np.inf
    history: List[Dict[str, float]] = []
    for lam in sorted(grid):
        model = train_ridge(X_train, y_train, target_kind, lam)
        train_mae = float(np.mean(np.abs(predict_ridge(model, X_train) - np.asarray(y_train))))
        val_mae = float(np.mean(np.abs(predict_ridge(model, X_val) - np.asarray(y_val))))
        history.append({"lambda": lam, "train_mae": train_mae, "val_mae": val_mae})
        if val_mae < best_mae:
            best, best_mae = model, val_mae
    logger.info(f"Selected ridge lambda={best.lam:g} for {TargetKind(target_kind).value} "
                f"(validation MAE {best_mae:.4f})")
    return best, history
