"""
Multi-class LDA with rooms as classes.

The projection solves S_b v = lambda S_w v. S_w is stabilized with a small
ridge so the generalized symmetric problem stays well posed when the
within-room scatter is rank deficient.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigh

from utils.error_handler import (DimensionMismatchException, InsufficientDataException,
                                 NumericalException, ValidationException)
from utils.logger import setup_logger

logger = setup_logger("lda")

STABILIZATION = 1e-6


@dataclass(frozen=True)
class ScatterPair:
    S_b: np.ndarray
    S_w: np.ndarray
    R: int
    n_r: Dict[str, int]
    mean: np.ndarray

    @property
    def dim(self) -> int:
        return self.S_b.shape[0]

    def stabilized_within(self) -> Tuple[np.ndarray, float]:
        """S_w + eps I with eps = 1e-6 * trace(S_w) / M."""
        eps = STABILIZATION * float(np.trace(self.S_w)) / self.dim
        return self.S_w + eps * np.eye(self.dim), eps


@dataclass(frozen=True)
class EVector:
    values: np.ndarray
    labels: Optional[Tuple[str, float, float]] = None


@dataclass(frozen=True)
class LdaModel:
    """Projection A (M x j) and the global training mean."""
    A: np.ndarray
    mean: np.ndarray
    eigenvalues: np.ndarray

    @property
    def j(self) -> int:
        return self.A.shape[1]

    @property
    def input_dim(self) -> int:
        return self.A.shape[0]

    def sliced(self, j: int) -> "LdaModel":
        """Leading j columns; eigenvalues are sorted so this is the order-j model."""
        if not 1 <= j <= self.j:
            raise ValidationException(f"cannot slice a {self.j}-column LDA to j={j}")
        return LdaModel(self.A[:, :j], self.mean, self.eigenvalues[:j])

    def to_payload(self):
        return {"M": self.input_dim, "j": self.j}, {"A": self.A, "mean": self.mean,
                                                    "eigenvalues": self.eigenvalues}

    @classmethod
    def from_payload(cls, meta, arrays) -> "LdaModel":
        return cls(arrays["A"], arrays["mean"], arrays["eigenvalues"])


def _group(X: np.ndarray, labels: Sequence[str]) -> Dict[str, np.ndarray]:
    labels = np.asarray(labels)
    if X.ndim != 2 or len(labels) != X.shape[0]:
        raise DimensionMismatchException(
            f"{X.shape} vectors do not match {len(labels)} labels"
        )
    return {room: X[labels == room] for room in sorted(set(labels.tolist()))}


def compute_scatter(X, labels: Sequence[str], allow_singletons: bool = False) -> ScatterPair:
    """
    Between- and within-room scatter with per-room averaging.

    S_b = 1/R sum_r (m_r - m)(m_r - m)'
    S_w = 1/R sum_r 1/n_r sum_k (x_rk - m_r)(x_rk - m_r)'

    Args:
        X: (N, M) vectors
        labels: Room id per row
        allow_singletons: Accept rooms with a single vector

    Returns:
        ScatterPair
    """
    X = np.asarray(X, dtype=np.float64)
    groups = _group(X, labels)
    if len(groups) < 2:
        raise InsufficientDataException(f"scatter needs at least 2 rooms, got {len(groups)}")
    small = [room for room, rows in groups.items() if len(rows) < 2]
    if small and not allow_singletons:
        raise InsufficientDataException(
            f"{len(small)} room(s) have a single vector", details={"rooms": small[:10]}
        )

    mean = X.mean(axis=0)
    dim = X.shape[1]
    S_b = np.zeros((dim, dim))
    S_w = np.zeros((dim, dim))
    for rows in groups.values():
        room_mean = rows.mean(axis=0)
        offset = room_mean - mean
        S_b += np.outer(offset, offset)
        centred = rows - room_mean
        S_w += centred.T @ centred / len(rows)
    R = len(groups)
    S_b /= R
    S_w /= R
    return ScatterPair(0.5 * (S_b + S_b.T), 0.5 * (S_w + S_w.T), R,
                       {room: len(rows) for room, rows in groups.items()}, mean)


def train_lda(scatter: ScatterPair, j: int) -> LdaModel:
    """
    Solve the generalized eigenproblem and keep the top-j directions.

    Columns are unit length with their largest-magnitude entry positive.

    Args:
        scatter: Scatter matrices of the training rooms
        j: Output dimension, 1 <= j <= min(M, R - 1)

    Returns:
        LdaModel
    """
    upper = min(scatter.dim, scatter.R - 1)
    if not 1 <= j <= upper:
        raise ValidationException(
            f"LDA dimension j={j} outside [1, {upper}]",
            details={"M": scatter.dim, "R": scatter.R}
        )
    S_w, eps = scatter.stabilized_within()
    if eps <= 0.0:
        raise NumericalException("within-room scatter is zero; LDA is undefined")
    try:
        eigenvalues, vectors = eigh(scatter.S_b, S_w)
    except LinAlgError as e:
        raise NumericalException("within-room scatter is singular beyond stabilization") from e

    order = np.argsort(eigenvalues)[::-1][:j]
    A = vectors[:, order]
    A = A / np.linalg.norm(A, axis=0, keepdims=True)
    pivots = A[np.argmax(np.abs(A), axis=0), np.arange(j)]
    A = A * np.where(pivots < 0, -1.0, 1.0)
    if not np.all(np.isfinite(A)):
        raise NumericalException("LDA projection has non-finite entries")
    logger.info(f"Trained LDA j={j} on {scatter.R} rooms; top eigenvalue {eigenvalues[order[0]]:.4f}")
    return LdaModel(A, scatter.mean.copy(), eigenvalues[order])


def project(ivector, lda: LdaModel):
    """
    Map i-vectors to e-vectors, A'(i - mean).

    Accepts an IVector (returns an EVector with its labels) or a (M,) / (N, M) array.
    """
    values = getattr(ivector, "values", ivector)
    x = np.asarray(values, dtype=np.float64)
    if x.shape[-1] != lda.input_dim:
        raise DimensionMismatchException(
            f"input of dimension {x.shape[-1]} does not match LDA input {lda.input_dim}"
        )
    projected = (x - lda.mean) @ lda.A
    if hasattr(ivector, "values"):
        return EVector(projected, getattr(ivector, "labels", None))
    return projected


def length_normalize(X) -> np.ndarray:
    """Scale each row to unit Euclidean norm; zero rows are left as is."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=-1, keepdims=True)
    return X / np.where(norms > 0, norms, 1.0)


def prepare_ivectors(values, length_norm: bool) -> np.ndarray:
    """I-vectors as fed to LDA and PLDA, optionally length-normalized."""
    return length_normalize(values) if length_norm else np.asarray(values, dtype=np.float64)
