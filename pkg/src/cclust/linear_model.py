"""Linear softmax discriminator: forward pass, loss gradients, mini-batch SGD.

Predictions are softmax(W x + b) rowwise. Two training losses against a
soft-label matrix Y: the collision form mean_i -ln(sigma_i . y_i) and the
Shannon form mean_i -sum_k y_i^k ln sigma_i^k. Their per-point logit
gradients are sigma_k (1 - y_k / (sigma.y)) and sigma_k - y_k; both vanish
identically for one-hot agreement, and the collision gradient is exactly
zero on uniform labels.
"""

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import ShapeMismatchError
from .simplex import softmax_rows

COLLISION_CE = "collision_ce"
SHANNON_CE = "shannon_ce"

_CHECKPOINT_MAGIC = b"CCLM"
_CHECKPOINT_VERSION = 1


@dataclass(eq=False)
class LinearModel:
    weights: np.ndarray  # (K, N)
    bias: np.ndarray     # (K,)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ShapeMismatchError(
                f"weights {self.weights.shape} incompatible with bias {self.bias.shape}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("model parameters must be finite")

    def copy(self):
        return LinearModel(self.weights.copy(), self.bias.copy())


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    weight_decay: float = 0.01
    batch_size: int = 250
    epochs: int = 10
    seed: int = 0
    loss: str = COLLISION_CE

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if self.loss not in (COLLISION_CE, SHANNON_CE):
            raise ValueError(f"unknown loss {self.loss!r}")


def init_model(K, N, seed=0):
    # fan-in scaled centered uniform; bias starts at zero
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(N)
    return LinearModel(weights=rng.uniform(-scale, scale, size=(K, N)), bias=np.zeros(K))


def forward(model, X):
    """Row predictions softmax(W x_i + b) for an (M, N) feature matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights.shape[1]:
        raise ShapeMismatchError(f"features {X.shape} vs weights {model.weights.shape}")
    return softmax_rows(X @ model.weights.T + model.bias)


def batch_loss(predictions, Y, loss):
    P = np.asarray(predictions, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if P.shape != Y.shape:
        raise ShapeMismatchError(f"predictions {P.shape} vs labels {Y.shape}")
    if loss == COLLISION_CE:
        dots = (P * Y).sum(axis=1)
        with np.errstate(divide="ignore"):
            vals = -np.log(dots)
        return float(vals.mean())
    return float(-xlogy(Y, P).sum(axis=1).mean())


def logit_gradients(predictions, Y, loss):
    """Per-point gradient of the chosen loss with respect to the logits."""
    P = np.asarray(predictions, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if P.shape != Y.shape:
        raise ShapeMismatchError(f"predictions {P.shape} vs labels {Y.shape}")
    if loss == COLLISION_CE:
        dots = (P * Y).sum(axis=1)
        return P * (1.0 - Y / dots[:, None])
    return P - Y


def grad_params(model, X, Y, loss, weight_decay=0.0):
    """Batch-averaged parameter gradients, with the L2 term on the weights."""
    X = np.asarray(X, dtype=np.float64)
    P = forward(model, X)
    G = logit_gradients(P, Y, loss)
    M = X.shape[0]
    dW = G.T @ X / M + weight_decay * model.weights
    db = G.mean(axis=0)
    return dW, db


def sgd_step(model, X, Y, cfg):
    """One in-place SGD update on the given batch."""
    dW, db = grad_params(model, X, Y, cfg.loss, cfg.weight_decay)
    model.weights -= cfg.learning_rate * dW
    model.bias -= cfg.learning_rate * db


def sgd_train(model, X, Y, cfg):
    """Mini-batch SGD for cfg.epochs passes; deterministic given cfg.seed.

    Returns (trained model copy, per-epoch log) where each log record holds
    the full-dataset loss after that epoch.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[0] != Y.shape[0]:
        raise ShapeMismatchError(f"features {X.shape} vs labels {Y.shape}")
    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    M = X.shape[0]
    log = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(M)
        for start in range(0, M, cfg.batch_size):
            b = order[start:start + cfg.batch_size]
            sgd_step(model, X[b], Y[b], cfg)
        log.append({"epoch": epoch, "loss": batch_loss(forward(model, X), Y, cfg.loss)})
    return model, log


def save_checkpoint(model, path):
    """Binary checkpoint: magic, version, K, N (little-endian u64), then
    row-major float64 weights followed by the bias."""
    K, N = model.weights.shape
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<IQQ", _CHECKPOINT_VERSION, K, N))
        fh.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.bias, dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CHECKPOINT_MAGIC:
            raise ValueError(f"not a model checkpoint: bad magic {magic!r}")
        version, K, N = struct.unpack("<IQQ", fh.read(20))
        if version != _CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        W = np.frombuffer(fh.read(8 * K * N), dtype="<f8").reshape(K, N)
        b = np.frombuffer(fh.read(8 * K), dtype="<f8")
    return LinearModel(weights=W.copy(), bias=b.copy())
