"""
Two-covariance PLDA trained by the method of moments.

An e-vector of room r is x = y_r + e with y_r ~ N(mu, B) shared by the room
and e ~ N(0, W) per recording. Verification scores are the log-likelihood
ratio of a pair under "same room" against "different rooms".
"""
from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from utils.error_handler import (DimensionMismatchException, InsufficientDataException,
                                 NumericalException)
from utils.logger import setup_logger

logger = setup_logger("plda")


@dataclass(frozen=True)
class PldaModel:
    mu: np.ndarray
    between_cov: np.ndarray
    within_cov: np.ndarray
    _cache: Dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def scoring_terms(self):
        """(Q, P, const) of score = a'Qa/2 + b'Qb/2 + a'Pb + const on centred a, b."""
        if "terms" not in self._cache:
            self._cache["terms"] = _scoring_terms(self.between_cov, self.within_cov)
        return self._cache["terms"]

    def to_payload(self):
        return {"j": self.dim}, {"mu": self.mu, "between_cov": self.between_cov,
                                 "within_cov": self.within_cov}

    @classmethod
    def from_payload(cls, meta, arrays) -> "PldaModel":
        return cls(arrays["mu"], arrays["between_cov"], arrays["within_cov"])


def _inverse_and_logdet(matrix: np.ndarray, what: str):
    try:
        factor = cho_factor(matrix, lower=True)
    except LinAlgError as e:
        raise NumericalException(f"PLDA {what} covariance is not positive definite") from e
    inverse = cho_solve(factor, np.eye(matrix.shape[0]))
    return 0.5 * (inverse + inverse.T), 2.0 * np.sum(np.log(np.diag(factor[0])))


def _scoring_terms(B: np.ndarray, W: np.ndarray):
    dim = B.shape[0]
    total = B + W
    same = np.block([[total, B], [B, total]])
    total_inv, total_logdet = _inverse_and_logdet(total, "total")
    same_inv, same_logdet = _inverse_and_logdet(same, "same-room")
    Q = total_inv - same_inv[:dim, :dim]
    P = -0.5 * (same_inv[:dim, dim:] + same_inv[dim:, :dim])
    const = 0.5 * (2.0 * total_logdet - same_logdet)
    return 0.5 * (Q + Q.T), 0.5 * (P + P.T), const


def _regularize(matrix: np.ndarray, regularization: float) -> np.ndarray:
    eps = regularization * float(np.trace(matrix)) / matrix.shape[0]
    return matrix + eps * np.eye(matrix.shape[0])


def train_plda(X, labels: Sequence[str], regularization: float = 1e-6) -> PldaModel:
    """
    Estimate mu, B and W by moments.

    W is the pooled within-room covariance; B is the covariance of room
    means less W / avg(n_r), clipped to be positive semi-definite.

    Args:
        X: (N, j) e-vectors
        labels: Room id per row
        regularization: Ridge factor added to both covariances relative to their trace

    Returns:
        PldaModel
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim != 2 or len(labels) != X.shape[0]:
        raise DimensionMismatchException(f"{X.shape} e-vectors do not match {len(labels)} labels")
    rooms = sorted(set(labels.tolist()))
    if len(rooms) < 2:
        raise InsufficientDataException(f"PLDA needs at least 2 rooms, got {len(rooms)}")

    dim = X.shape[1]
    room_means = np.zeros((len(rooms), dim))
    counts = np.zeros(len(rooms))
    within = np.zeros((dim, dim))
    for r, room in enumerate(rooms):
        rows = X[labels == room]
        if len(rows) < 2:
            raise InsufficientDataException(f"room {room} has a single e-vector")
        room_means[r] = rows.mean(axis=0)
        counts[r] = len(rows)
        centred = rows - room_means[r]
        within += centred.T @ centred
    within /= len(X) - len(rooms)

    between = np.cov(room_means, rowvar=False, ddof=1).reshape(dim, dim) - within / counts.mean()
    values, vectors = np.linalg.eigh(0.5 * (between + between.T))
    between = (vectors * np.clip(values, 0.0, None)) @ vectors.T

    model = PldaModel(X.mean(axis=0), _regularize(0.5 * (between + between.T), regularization),
                      _regularize(0.5 * (within + within.T), regularization))
    model.scoring_terms()
    logger.info(f"Trained PLDA j={dim} on {len(rooms)} rooms, {len(X)} e-vectors")
    return model


def _centred(x, plda: PldaModel) -> np.ndarray:
    x = np.asarray(getattr(x, "values", x), dtype=np.float64)
    if x.shape[-1] != plda.dim:
        raise DimensionMismatchException(f"e-vector of dimension {x.shape[-1]} does not match PLDA {plda.dim}")
    return x - plda.mu


def plda_score(enroll, test, plda: PldaModel) -> float:
    """
    Log-likelihood ratio of same room versus different rooms.

    Args:
        enroll: Enrollment e-vector (or averaged room model)
        test: Test e-vector
        plda: Trained model

    Returns:
        LLR, symmetric in its two vector arguments
    """
    a, b = _centred(enroll, plda), _centred(test, plda)
    Q, P, const = plda.scoring_terms()
    return float(0.5 * a @ Q @ a + 0.5 * b @ Q @ b + a @ P @ b + const)


def plda_score_matrix(enroll, test, plda: PldaModel) -> np.ndarray:
    """Scores of every (enroll row, test row) pair, shape (E, N)."""
    a = np.atleast_2d(_centred(enroll, plda))
    b = np.atleast_2d(_centred(test, plda))
    Q, P, const = plda.scoring_terms()
    qa = 0.5 * np.einsum("ij,jk,ik->i", a, Q, a)
    qb = 0.5 * np.einsum("ij,jk,ik->i", b, Q, b)
    return qa[:, None] + qb[None, :] + a @ P @ b.T + const
