"""Elman recurrent network for binary classification of feature rows.

A standardized row of d features becomes a length-d sequence of scalar
inputs (input size 1), fed through a single tanh recurrent layer:

    h_0 = 0
    h_t = tanh(W_xh x_t + W_hh h_{t-1} + b_h)
    p   = sigmoid(W_hy h_T + b_y), clamped to [1e-12, 1 - 1e-12]

Training minimizes binary cross-entropy by backpropagation through time
with RMSprop updates, minibatch gradients averaged over the batch, and
early stopping on validation loss with best-epoch weight restoration.
Everything is a pure function of (data, config including seed): parameter
init and epoch shuffles draw from one deterministic generator stream.

Column order matters: permuting features permutes the sequence and changes
the model. grad_check verifies the analytic gradients against central
finite differences for every parameter entry.
"""

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .boosting import PROB_CLAMP, clamp_probability, sigmoid
from .errors import (
    BadHyperparameter,
    DimensionMismatch,
    EmptyPartition,
    EmptySequence,
)
from .preprocess import FeatureMatrix
from .rng import SplitMix64

IMPROVEMENT_EPS = 1e-6
_PARAM_FIELDS = ("W_xh", "W_hh", "W_hy", "b_h", "b_y")


class EarlyStopper:
    """Patience counter over validation losses (epochs are 1-based).

    An epoch improves when it beats the best loss so far by at least
    IMPROVEMENT_EPS; `update` returns True once `patience` consecutive
    epochs have failed to improve.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.best_val = math.inf
        self.best_epoch = 0
        self.streak = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        if self.best_val - val_loss >= IMPROVEMENT_EPS:
            self.best_val = val_loss
            self.best_epoch = epoch
            self.streak = 0
            return False
        self.streak += 1
        return self.streak >= self.patience


@dataclass
class RNNParams:
    """Network weights; also reused as the container for gradients and
    RMSprop caches, which share these shapes."""
    W_xh: np.ndarray
    W_hh: np.ndarray
    W_hy: np.ndarray
    b_h: np.ndarray
    b_y: float

    @property
    def hidden_size(self) -> int:
        return self.W_xh.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_xh.shape[1]

    def copy(self) -> "RNNParams":
        return RNNParams(
            W_xh=self.W_xh.copy(),
            W_hh=self.W_hh.copy(),
            W_hy=self.W_hy.copy(),
            b_h=self.b_h.copy(),
            b_y=self.b_y,
        )

    @classmethod
    def zeros(cls, hidden_size: int, input_size: int) -> "RNNParams":
        return cls(
            W_xh=np.zeros((hidden_size, input_size)),
            W_hh=np.zeros((hidden_size, hidden_size)),
            W_hy=np.zeros((1, hidden_size)),
            b_h=np.zeros(hidden_size),
            b_y=0.0,
        )


@dataclass(frozen=True)
class RNNTrainConfig:
    learning_rate: float = 0.001
    rms_decay: float = 0.9
    epsilon: float = 1e-8
    max_epochs: int = 200
    patience: int = 10
    batch_size: int = 32
    hidden_size: int = 16
    seed: int = 0
    init_scale: float = 0.1

    def validate(self):
        if self.learning_rate <= 0.0:
            raise BadHyperparameter(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 < self.rms_decay < 1.0:
            raise BadHyperparameter(f"rms_decay must be in (0, 1), got {self.rms_decay}")
        if self.epsilon <= 0.0:
            raise BadHyperparameter(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_epochs < 1:
            raise BadHyperparameter(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise BadHyperparameter(f"patience must be >= 1, got {self.patience}")
        if self.batch_size < 1:
            raise BadHyperparameter(f"batch_size must be >= 1, got {self.batch_size}")
        if self.hidden_size < 1:
            raise BadHyperparameter(f"hidden_size must be >= 1, got {self.hidden_size}")
        if self.init_scale <= 0.0:
            raise BadHyperparameter(f"init_scale must be > 0, got {self.init_scale}")


@dataclass
class TrainHistory:
    """Per-epoch losses plus the early-stopping outcome (1-based epochs)."""
    train_losses: List[float] = field(default_factory=list)
    val_losses: List[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0

    def csv_text(self) -> str:
        lines = ["epoch,train_loss,val_loss"]
        for i, (tr, va) in enumerate(zip(self.train_losses, self.val_losses), start=1):
            lines.append(f"{i},{tr!r},{va!r}")
        return "\n".join(lines) + "\n"


def init_params(hidden_size: int, input_size: int, init_scale: float,
                gen: SplitMix64) -> RNNParams:
    """Uniform init in [-init_scale, init_scale], drawn in the fixed order
    W_xh, W_hh, W_hy, b_h, b_y with row-major fill inside each array."""

    def draw(shape) -> np.ndarray:
        n = int(np.prod(shape))
        flat = np.array([init_scale * (2.0 * gen.uniform() - 1.0) for _ in range(n)])
        return flat.reshape(shape)

    return RNNParams(
        W_xh=draw((hidden_size, input_size)),
        W_hh=draw((hidden_size, hidden_size)),
        W_hy=draw((1, hidden_size)),
        b_h=draw((hidden_size,)),
        b_y=init_scale * (2.0 * gen.uniform() - 1.0),
    )


def as_sequence(x: np.ndarray) -> np.ndarray:
    """Render a feature vector as a (length, 1) sequence of scalar inputs,
    preserving column order."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d feature vector, got shape {x.shape}")
    return x.reshape(-1, 1)


def _forward_full(params: RNNParams, seq: np.ndarray):
    seq = np.asarray(seq, dtype=float)
    if seq.ndim != 2:
        raise DimensionMismatch(f"expected a (T, input_size) sequence, got shape {seq.shape}")
    if seq.shape[0] == 0:
        raise EmptySequence("cannot run the network on an empty sequence")
    if seq.shape[1] != params.input_size:
        raise DimensionMismatch(
            f"sequence input size {seq.shape[1]} != parameter input size {params.input_size}"
        )
    steps = seq.shape[0]
    hs = np.zeros((steps + 1, params.hidden_size))
    for t in range(steps):
        hs[t + 1] = np.tanh(
            params.W_xh @ seq[t] + params.W_hh @ hs[t] + params.b_h
        )
    raw = sigmoid(float((params.W_hy @ hs[steps])[0]) + params.b_y)
    return hs, raw, clamp_probability(raw)


def forward(params: RNNParams, seq: np.ndarray) -> Tuple[np.ndarray, float]:
    """Run the recurrence; returns (hidden states h_1..h_T, probability)."""
    hs, _, prob = _forward_full(params, seq)
    return hs[1:], prob


def bce(p: float, y: float) -> float:
    """Binary cross-entropy of one clamped probability against a 0/1 label."""
    p = clamp_probability(p)
    return -(y * math.log(p) + (1.0 - y) * math.log(1.0 - p))


def backward(params: RNNParams, seq: np.ndarray, y: float) -> RNNParams:
    """Exact gradients of bce(forward(params, seq), y) via backpropagation
    through time. When the output probability sits at a clamp boundary the
    loss is locally flat in the parameters, so all gradients are zero."""
    hs, raw, prob = _forward_full(params, seq)
    seq = np.asarray(seq, dtype=float)
    grads = RNNParams.zeros(params.hidden_size, params.input_size)
    if raw != prob:
        return grads
    dz = prob - y
    steps = seq.shape[0]
    grads.W_hy = dz * hs[steps][np.newaxis, :]
    grads.b_y = dz
    dh = dz * params.W_hy[0]
    for t in range(steps, 0, -1):
        dz_h = (1.0 - hs[t] * hs[t]) * dh
        grads.W_xh += np.outer(dz_h, seq[t - 1])
        grads.W_hh += np.outer(dz_h, hs[t - 1])
        grads.b_h += dz_h
        dh = params.W_hh.T @ dz_h
    return grads


def rmsprop_step(params: RNNParams, caches: RNNParams, grads: RNNParams,
                 config: RNNTrainConfig) -> Tuple[RNNParams, RNNParams]:
    """One RMSprop update; returns fresh (params, caches).

    cache <- rho * cache + (1 - rho) * g^2
    param <- param - lr * g / sqrt(cache + eps)
    """
    rho = config.rms_decay
    lr = config.learning_rate
    eps = config.epsilon

    def update(p, c, g):
        c2 = rho * c + (1.0 - rho) * g * g
        return p - lr * g / np.sqrt(c2 + eps), c2

    new_p = {}
    new_c = {}
    for name in _PARAM_FIELDS:
        p2, c2 = update(getattr(params, name), getattr(caches, name), getattr(grads, name))
        if name == "b_y":
            p2, c2 = float(p2), float(c2)
        new_p[name] = p2
        new_c[name] = c2
    return RNNParams(**new_p), RNNParams(**new_c)


def _mean_loss(params: RNNParams, m: FeatureMatrix) -> float:
    total = 0.0
    for row, label in zip(m.values, m.labels):
        _, prob = forward(params, as_sequence(row))
        total += bce(prob, float(label))
    return total / m.n_rows


def _batch_grads(params: RNNParams, m: FeatureMatrix, rows) -> RNNParams:
    acc = RNNParams.zeros(params.hidden_size, params.input_size)
    for r in rows:
        g = backward(params, as_sequence(m.values[r]), float(m.labels[r]))
        acc.W_xh += g.W_xh
        acc.W_hh += g.W_hh
        acc.W_hy += g.W_hy
        acc.b_h += g.b_h
        acc.b_y += g.b_y
    scale = 1.0 / len(rows)
    acc.W_xh *= scale
    acc.W_hh *= scale
    acc.W_hy *= scale
    acc.b_h *= scale
    acc.b_y *= scale
    return acc


def train_rnn(train: FeatureMatrix, val: FeatureMatrix,
              config: RNNTrainConfig) -> Tuple[RNNParams, TrainHistory]:
    """Minibatch RMSprop training with early stopping.

    Row order is reshuffled every epoch from the same seeded stream that
    produced the initial weights. Batch gradients are averaged over the
    batch (the final short batch over its own size). An epoch improves when
    it lowers the best validation loss by at least 1e-6; after `patience`
    consecutive non-improving epochs training stops, and the weights
    snapshotted at the best epoch are returned.
    """
    config.validate()
    if train.n_rows == 0:
        raise EmptyPartition("training partition is empty")
    if val.n_rows == 0:
        raise EmptyPartition("validation partition is empty")
    if train.n_cols != val.n_cols:
        raise DimensionMismatch(
            f"train has {train.n_cols} columns but validation has {val.n_cols}"
        )
    gen = SplitMix64(config.seed)
    params = init_params(config.hidden_size, 1, config.init_scale, gen)
    caches = RNNParams.zeros(config.hidden_size, 1)
    history = TrainHistory()
    best_params = params.copy()
    stopper = EarlyStopper(config.patience)
    order = list(range(train.n_rows))
    for epoch in range(1, config.max_epochs + 1):
        gen.shuffle(order)
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            grads = _batch_grads(params, train, batch)
            params, caches = rmsprop_step(params, caches, grads, config)
        history.train_losses.append(_mean_loss(params, train))
        val_loss = _mean_loss(params, val)
        history.val_losses.append(val_loss)
        history.stopped_epoch = epoch
        stop = stopper.update(epoch, val_loss)
        if stopper.best_epoch == epoch:
            history.best_epoch = epoch
            best_params = params.copy()
        if stop:
            break
    return best_params, history


def grad_check(params: RNNParams, seq: np.ndarray, y: float,
               step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients
    over every parameter entry: |a - n| / max(|a|, |n|, 1e-8)."""
    if step <= 0.0:
        raise BadHyperparameter(f"step must be > 0, got {step}")

    def loss_at(p: RNNParams) -> float:
        _, prob = forward(p, seq)
        return bce(prob, y)

    analytic = backward(params, seq, y)
    worst = 0.0
    for name in _PARAM_FIELDS:
        value = getattr(params, name)
        if name == "b_y":
            plus = params.copy()
            plus.b_y = value + step
            minus = params.copy()
            minus.b_y = value - step
            numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * step)
            a = analytic.b_y
            worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), 1e-8))
            continue
        flat = value.reshape(-1)
        a_flat = getattr(analytic, name).reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            probe = params.copy()
            getattr(probe, name).reshape(-1)[i] = original + step
            up = loss_at(probe)
            getattr(probe, name).reshape(-1)[i] = original - step
            down = loss_at(probe)
            numeric = (up - down) / (2.0 * step)
            a = a_flat[i]
            worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), 1e-8))
    return worst


@dataclass
class RNNModel:
    """Trained network exposed through the shared prediction interface."""
    params: RNNParams
    history: TrainHistory

    def predict_probability(self, x: np.ndarray) -> float:
        _, prob = forward(self.params, as_sequence(x))
        return prob
