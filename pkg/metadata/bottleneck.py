"""
Bottleneck feed-forward regressor M x 20 x 5 x 20 x 1.

Hidden layers use ReLU and the output is linear. Training minimizes the mean
squared error with Adam on shuffled mini-batches and keeps the snapshot with
the best validation MAE.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.config import TargetKind
from utils.error_handler import (DimensionMismatchException, InsufficientDataException,
                                 NumericalException, ValidationException)
from utils.logger import setup_logger

logger = setup_logger("bottleneck")

DEFAULT_HIDDEN = (20, 5, 20)
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

EpochCallback = Callable[[int, float, float], None]


@dataclass(frozen=True)
class BottleneckNet:
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    input_mean: np.ndarray
    input_std: np.ndarray
    target_kind: TargetKind
    history: List[Dict[str, float]] = field(default_factory=list, compare=False)

    @property
    def layer_sizes(self) -> List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def normalize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.input_mean) / self.input_std

    def to_payload(self):
        meta = {"layers": self.layer_sizes, "target": self.target_kind.value}
        arrays = {"input_mean": self.input_mean, "input_std": self.input_std}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            arrays[f"W{i}"] = w
            arrays[f"b{i}"] = b
        return meta, arrays

    @classmethod
    def from_payload(cls, meta, arrays) -> "BottleneckNet":
        n_layers = len(meta["layers"]) - 1
        return cls([arrays[f"W{i}"] for i in range(n_layers)],
                   [arrays[f"b{i}"] for i in range(n_layers)],
                   arrays["input_mean"], arrays["input_std"], TargetKind(meta["target"]))


def init_params(sizes: Sequence[int], rng: np.random.Generator,
                output_bias: float = 0.0) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """He-normal weights scaled by fan-in, zero biases except the output."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    biases[-1][:] = output_bias
    return weights, biases


def forward(weights: Sequence[np.ndarray], biases: Sequence[np.ndarray], X: np.ndarray):
    """
    Forward pass on normalized inputs.

    Returns:
        (outputs of shape (n,), list of layer activations including the input)
    """
    activations = [X]
    h = X
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        h = z if i == last else np.maximum(z, 0.0)
        activations.append(h)
    return h[:, 0], activations


def gradients(weights: Sequence[np.ndarray], biases: Sequence[np.ndarray], X: np.ndarray, y: np.ndarray):
    """
    Mean-squared-error loss and its gradients by backpropagation.

    Returns:
        (loss, weight gradients, bias gradients)
    """
    out, activations = forward(weights, biases, X)
    residual = out - y
    loss = float(np.mean(residual ** 2))
    delta = (2.0 / len(y)) * residual[:, None]
    grad_w: List[np.ndarray] = [None] * len(weights)
    grad_b: List[np.ndarray] = [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        grad_w[i] = activations[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (activations[i] > 0)
    return loss, grad_w, grad_b


class _Adam:
    def __init__(self, params: List[np.ndarray], step_size: float):
        self.step_size = step_size
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def update(self, params: List[np.ndarray], grads: List[np.ndarray]) -> None:
        self.t += 1
        correction1 = 1.0 - ADAM_BETA1 ** self.t
        correction2 = 1.0 - ADAM_BETA2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p -= self.step_size * (m / correction1) / (np.sqrt(v / correction2) + ADAM_EPS)


def _as_matrix(X) -> np.ndarray:
    return np.asarray(getattr(X, "values", X), dtype=np.float64)


def train_bottleneck(X, y, target_kind: TargetKind, X_val, y_val,
                     epochs: int = 300,
                     batch_size: int = 32,
                     step_size: float = 1e-3,
                     seed: int = 0,
                     patience: int = 20,
                     hidden: Sequence[int] = DEFAULT_HIDDEN,
                     on_epoch: Optional[EpochCallback] = None) -> BottleneckNet:
    """
    Train the bottleneck regressor with early stopping on validation MAE.

    Args:
        X, y: Training e-vectors and targets (natural units)
        target_kind: What y measures
        X_val, y_val: Validation split
        epochs: Maximum number of epochs
        batch_size: Mini-batch size
        step_size: Adam step size
        seed: Initialization and shuffling seed
        patience: Epochs without validation improvement before stopping
        hidden: Hidden layer widths
        on_epoch: Called with (epoch, training loss, validation MAE)

    Returns:
        Best-validation snapshot
    """
    X, y = _as_matrix(X), np.asarray(y, dtype=np.float64)
    X_val, y_val = _as_matrix(X_val), np.asarray(y_val, dtype=np.float64)
    if len(y_val) == 0:
        raise InsufficientDataException("bottleneck training needs a non-empty validation split")
    if len(y) == 0:
        raise InsufficientDataException("bottleneck training needs training samples")
    if X.ndim != 2 or X.shape[0] != len(y) or X_val.ndim != 2 or X_val.shape != (len(y_val), X.shape[1]):
        raise DimensionMismatchException(
            f"training {X.shape} / validation {X_val.shape} do not match their targets"
        )
    if batch_size < 1 or epochs < 1:
        raise ValidationException("epochs and batch_size must be positive")

    rng = np.random.default_rng(seed)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    Xn, Xv = (X - mean) / std, (X_val - mean) / std

    sizes = [X.shape[1]] + list(hidden) + [1]
    weights, biases = init_params(sizes, rng, output_bias=float(y.mean()))
    params = weights + biases
    optimizer = _Adam(params, step_size)

    best_mae = np.inf
    best = ([w.copy() for w in weights], [b.copy() for b in biases])
    stale = 0
    history: List[Dict[str, float]] = []
    for epoch in range(epochs):
        order = rng.permutation(len(y))
        total = 0.0
        for start in range(0, len(y), batch_size):
            idx = order[start:start + batch_size]
            loss, grad_w, grad_b = gradients(weights, biases, Xn[idx], y[idx])
            if not np.isfinite(loss):
                raise NumericalException(
                    f"bottleneck loss diverged at epoch {epoch}; reduce the step size",
                    details={"epoch": epoch, "step_size": step_size}
                )
            optimizer.update(params, grad_w + grad_b)
            total += loss * len(idx)
        train_loss = total / len(y)
        val_pred, _ = forward(weights, biases, Xv)
        val_mae = float(np.mean(np.abs(val_pred - y_val)))
        if not np.isfinite(val_mae):
            raise NumericalException(f"bottleneck validation error is not finite at epoch {epoch}")
        history.append({"epoch": epoch, "train_loss": train_loss, "val_mae": val_mae})
        if on_epoch:
            on_epoch(epoch, train_loss, val_mae)

        if val_mae < best_mae:
            best_mae, stale = val_mae, 0
            best = ([w.copy() for w in weights], [b.copy() for b in biases])
        else:
            stale += 1
            if stale >= patience:
                logger.info(f"Early stopping at epoch {epoch}; best validation MAE {best_mae:.4f}")
                break

    logger.info(f"Trained bottleneck net {sizes} for {TargetKind(target_kind).value}; "
                f"validation MAE {best_mae:.4f}")
    return BottleneckNet(best[0], best[1], mean, std, TargetKind(target_kind), history)


def predict_bottleneck(net: BottleneckNet, X):
    """Scalar estimate for one e-vector, or an (n,) array for a batch."""
    x = _as_matrix(X)
    if x.shape[-1] != net.input_dim:
        raise DimensionMismatchException(
            f"input of dimension {x.shape[-1]} does not match network input {net.input_dim}"
        )
    out, _ = forward(net.weights, net.biases, net.normalize(np.atleast_2d(x)))
    return float(out[0]) if x.ndim == 1 else out
