"""Learnable map from video feature vectors to per-verb scores.

A small feedforward network (tanh hidden layers, linear output) stands in
for the original heavyweight video backbone; features arrive precomputed.
Two losses are supported:

* single-label (SL): softmax cross entropy against a one-hot target,
  used by the SV and VN schemes
* multi-label (ML): sigmoid binary cross entropy against targets in
  [0, 1], used by MV and SAMV; soft targets make this a regression whose
  per-logit gradient sigmoid(z) - y vanishes exactly at sigmoid(z) = y
  even though the loss value stays at the binary entropy of y

Everything is float64 numpy; training is plain mini-batch gradient descent
with optional momentum, fully determined by the config seed.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .annotations import LabelBundle

SCHEMES = ("SV", "VN", "MV", "SAMV")
#: loss selector per labelling scheme
SCHEME_LOSS = {"SV": "SL", "VN": "SL", "MV": "ML", "SAMV": "ML"}

CHECKPOINT_VERSION = 1


class ModelError(ValueError):
    """Raised for invalid model input or configuration."""


class FingerprintMismatch(ModelError):
    """A persisted artifact was built against a different vocabulary."""


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during training."""


@dataclass(frozen=True)
class FeatureVector:
    """Precomputed per-video descriptor."""

    video_id: str
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1:
            raise ModelError(f"feature vector for {self.video_id!r} is not 1-D")
        if not np.isfinite(values).all():
            raise ModelError(f"feature vector for {self.video_id!r} has non-finite entries")


@dataclass
class ModelParams:
    """Layer weights/biases plus the scheme tag that selects the score head."""

    weights: list[np.ndarray]  # each (fan_out, fan_in)
    biases: list[np.ndarray]  # each (fan_out,)
    scheme: str
    vocab_fingerprint: str = ""

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dim] + [w.shape[0] for w in self.weights]

    def copy(self) -> "ModelParams":
        return ModelParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            scheme=self.scheme,
            vocab_fingerprint=self.vocab_fingerprint,
        )


@dataclass(frozen=True)
class Prediction:
    """Raw logits plus scheme-appropriate scores (sigmoid or softmax)."""

    logits: np.ndarray
    scores: np.ndarray
    scheme: str


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 500
    batch_size: int = 0  # 0 = full batch
    seed: int = 0
    momentum: float = 0.0
    hidden: tuple[int, ...] = (256,)
    lr_decay: float = 1.0  # per-epoch multiplier on the learning rate

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ModelError("epoch count must be >= 1")
        if self.learning_rate <= 0:
            raise ModelError("learning rate must be > 0")
        if self.batch_size < 0:
            raise ModelError("batch size must be >= 0")
        if not 0 <= self.momentum < 1:
            raise ModelError("momentum must lie in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "momentum": self.momentum,
            "hidden": list(self.hidden),
            "lr_decay": self.lr_decay,
        }

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        return TrainConfig(
            learning_rate=float(d["learning_rate"]),
            epochs=int(d["epochs"]),
            batch_size=int(d["batch_size"]),
            seed=int(d["seed"]),
            momentum=float(d.get("momentum", 0.0)),
            hidden=tuple(int(h) for h in d.get("hidden", (256,))),
            lr_decay=float(d.get("lr_decay", 1.0)),
        )


@dataclass(frozen=True)
class TrainResult:
    params: ModelParams
    epoch_losses: list[float]


# ---------------------------------------------------------------------------
# Numerics
# ---------------------------------------------------------------------------


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign to avoid overflow in exp for large |z|.
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - np.max(z, axis=-1, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=-1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - np.max(z, axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def init_params(
    input_dim: int,
    output_dim: int,
    scheme: str,
    hidden: Sequence[int] = (256,),
    seed: int = 0,
    vocab_fingerprint: str = "",
) -> ModelParams:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] from a seeded generator."""
    if scheme not in SCHEMES:
        raise ModelError(f"unknown scheme {scheme!r}")
    rng = np.random.default_rng(seed)
    sizes = [input_dim, *hidden, output_dim]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return ModelParams(
        weights=weights, biases=biases, scheme=scheme, vocab_fingerprint=vocab_fingerprint
    )


def _forward_cached(params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Logits plus the post-activation of every layer (input first)."""
    activations = [x]
    a = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        a = z if i == last else np.tanh(z)
        activations.append(a)
    return activations[-1], activations


def forward(params: ModelParams, x: np.ndarray | FeatureVector) -> Prediction:
    """Deterministic forward pass; accepts one vector or a (n, D) batch."""
    values = x.values if isinstance(x, FeatureVector) else np.asarray(x, dtype=np.float64)
    if values.shape[-1] != params.input_dim:
        raise ModelError(
            f"feature dimension {values.shape[-1]} does not match input layer "
            f"{params.input_dim}"
        )
    logits, _ = _forward_cached(params, values)
    head = sigmoid if SCHEME_LOSS[params.scheme] == "ML" else softmax
    return Prediction(logits=logits, scores=head(logits), scheme=params.scheme)


#: `predict` shares forward's contract; the name matches inference call sites.
predict = forward


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


def _check_one_hot(target: np.ndarray) -> None:
    if not (np.isin(target, (0.0, 1.0)).all() and np.isclose(target.sum(), 1.0)):
        raise ModelError("single-label loss needs a one-hot target")


def loss_sl(pred: Prediction, target: np.ndarray) -> float:
    """Softmax cross entropy -sum_j y_j log softmax(z)_j for a one-hot y."""
    target = np.asarray(target, dtype=np.float64)
    if target.shape != pred.logits.shape:
        raise ModelError("target width does not match prediction")
    _check_one_hot(target)
    return float(-(target * log_softmax(pred.logits)).sum())


def loss_ml(pred: Prediction, target: np.ndarray) -> float:
    """Sigmoid binary cross entropy summed over verbs, targets in [0, 1].

    Evaluated in logit space, max(z,0) - z*y + log(1 + exp(-|z|)), which never
    forms log(sigmoid(z)) directly and stays finite for any finite logits.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape != pred.logits.shape:
        raise ModelError("target width does not match prediction")
    if target.min() < 0 or target.max() > 1:
        raise ModelError("multi-label targets must lie in [0, 1]")
    z = pred.logits
    per_term = np.maximum(z, 0.0) - z * target + np.log1p(np.exp(-np.abs(z)))
    return float(per_term.sum())


def sl_logit_gradient(logits: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d loss_sl / d logits = softmax(z) - y."""
    return softmax(logits) - target


def ml_logit_gradient(logits: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d loss_ml / d logits = sigmoid(z) - y; zero exactly when sigmoid(z) = y."""
    return sigmoid(logits) - target


def batch_loss(params: ModelParams, X: np.ndarray, Y: np.ndarray, loss: str) -> float:
    """Mean per-sample loss over the batch."""
    logits, _ = _forward_cached(params, X)
    if loss == "SL":
        per_sample = -(Y * log_softmax(logits)).sum(axis=1)
    elif loss == "ML":
        per_sample = (
            np.maximum(logits, 0.0) - logits * Y + np.log1p(np.exp(-np.abs(logits)))
        ).sum(axis=1)
    else:
        raise ModelError(f"unknown loss selector {loss!r}")
    return float(per_sample.mean())


def gradient(
    params: ModelParams, X: np.ndarray, Y: np.ndarray, loss: str
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Backpropagated gradient of the batch-mean loss (weights, biases)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[0] == 0:
        raise ModelError("empty batch")
    if X.shape[0] != Y.shape[0]:
        raise ModelError("features and targets disagree on batch size")
    if Y.shape[1] != params.output_dim:
        raise ModelError("target width does not match output layer")
    logits, activations = _forward_cached(params, X)
    n = X.shape[0]
    if loss == "SL":
        delta = (softmax(logits) - Y) / n
    elif loss == "ML":
        delta = (sigmoid(logits) - Y) / n
    else:
        raise ModelError(f"unknown loss selector {loss!r}")

    grad_w = [np.zeros_like(w) for w in params.weights]
    grad_b = [np.zeros_like(b) for b in params.biases]
    for layer in range(len(params.weights) - 1, -1, -1):
        grad_w[layer] = delta.T @ activations[layer]
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            # tanh'(z) = 1 - tanh(z)^2, and activations[layer] = tanh(z)
            delta = (delta @ params.weights[layer]) * (1.0 - activations[layer] ** 2)
    return grad_w, grad_b


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def targets_for_scheme(
    bundles: Sequence[LabelBundle], scheme: str, width: int
) -> np.ndarray:
    """Stack per-bundle targets for one scheme into an (n, width) matrix."""
    if scheme not in SCHEMES:
        raise ModelError(f"unknown scheme {scheme!r}")
    rows = np.zeros((len(bundles), width), dtype=np.float64)
    for i, bundle in enumerate(bundles):
        if scheme == "SV":
            rows[i, bundle.sv] = 1.0
        elif scheme == "VN":
            if bundle.vn is None:
                raise ModelError(f"video {bundle.video_id!r} has no verb-noun class")
            rows[i, bundle.vn] = 1.0
        elif scheme == "MV":
            rows[i] = bundle.mv.bits
        else:
            rows[i] = bundle.samv.scores
    return rows


def train(
    data: Sequence[tuple[FeatureVector, LabelBundle]],
    scheme: str,
    cfg: TrainConfig,
    vocab_fingerprint: str = "",
    output_dim: int | None = None,
) -> TrainResult:
    """Mini-batch gradient descent; deterministic for a fixed config seed.

    `output_dim` defaults to the label width (|V|, or the verb-noun class
    count for VN, which callers must pass since bundles only carry indices).
    """
    if not data:
        raise ModelError("training data is empty")
    features = np.stack([fv.values for fv, _ in data])
    bundles = [b for _, b in data]
    if output_dim is None:
        if scheme == "VN":
            raise ModelError("VN training requires an explicit output_dim")
        output_dim = len(bundles[0].samv)
    targets = targets_for_scheme(bundles, scheme, output_dim)
    loss = SCHEME_LOSS[scheme]

    params = init_params(
        input_dim=features.shape[1],
        output_dim=output_dim,
        scheme=scheme,
        hidden=cfg.hidden,
        seed=cfg.seed,
        vocab_fingerprint=vocab_fingerprint,
    )
    rng = np.random.default_rng(cfg.seed + 1)
    velocity_w = [np.zeros_like(w) for w in params.weights]
    velocity_b = [np.zeros_like(b) for b in params.biases]
    n = features.shape[0]
    batch = cfg.batch_size if cfg.batch_size else n
    lr = cfg.learning_rate
    epoch_losses: list[float] = []

    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if batch < n else np.arange(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            gw, gb = gradient(params, features[idx], targets[idx], loss)
            for layer in range(len(params.weights)):
                velocity_w[layer] = cfg.momentum * velocity_w[layer] - lr * gw[layer]
                velocity_b[layer] = cfg.momentum * velocity_b[layer] - lr * gb[layer]
                params.weights[layer] += velocity_w[layer]
                params.biases[layer] += velocity_b[layer]
        epoch_loss = batch_loss(params, features, targets, loss)
        if not np.isfinite(epoch_loss):
            raise TrainingDiverged(
                f"loss became {epoch_loss} at epoch {epoch + 1}; "
                f"lower the learning rate (current {lr:g})"
            )
        epoch_losses.append(epoch_loss)
        lr *= cfg.lr_decay
    return TrainResult(params=params, epoch_losses=epoch_losses)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def _encode_array(a: np.ndarray) -> dict:
    return {
        "shape": list(a.shape),
        "data": base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode(),
    }


def _decode_array(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(obj["shape"]).astype(np.float64)


def save_checkpoint(
    params: ModelParams, dest: str | Path, config: TrainConfig | None = None
) -> None:
    """JSON container: shapes, little-endian float64 parameters, scheme,
    vocabulary fingerprint, and the training config that produced it."""
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "scheme": params.scheme,
        "vocab_fingerprint": params.vocab_fingerprint,
        "layer_sizes": params.layer_sizes,
        "weights": [_encode_array(w) for w in params.weights],
        "biases": [_encode_array(b) for b in params.biases],
        "config": config.to_dict() if config else None,
    }
    Path(dest).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_checkpoint(
    source: str | Path, expected_fingerprint: str | None = None
) -> tuple[ModelParams, TrainConfig | None]:
    payload = json.loads(Path(source).read_text(encoding="utf-8"))
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ModelError(f"unsupported checkpoint version {payload.get('format_version')!r}")
    fingerprint = payload["vocab_fingerprint"]
    if expected_fingerprint is not None and fingerprint != expected_fingerprint:
        raise FingerprintMismatch(
            "checkpoint was trained against a different vocabulary "
            f"(checkpoint {fingerprint[:12]}..., expected {expected_fingerprint[:12]}...)"
        )
    params = ModelParams(
        weights=[_decode_array(w) for w in payload["weights"]],
        biases=[_decode_array(b) for b in payload["biases"]],
        scheme=payload["scheme"],
        vocab_fingerprint=fingerprint,
    )
    cfg = TrainConfig.from_dict(payload["config"]) if payload.get("config") else None
    return params, cfg
