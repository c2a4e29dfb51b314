"""Feed-forward sarcasm-level regressor with manual backpropagation.

Architecture: input D -> L sigmoid hidden layers of width H (inverted
dropout after each in train mode) -> one sigmoid output unit, trained
with mean-squared-error loss and Adam.  Everything runs in 64-bit
floats and is bit-deterministic for a fixed (data order, config, seed).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from ._util import atomic_writer, derive_seed

MODEL_FORMAT_VERSION = 1
HIDDEN_ACTIVATION = "sigmoid"

# Clamp sigmoid outputs into the open unit interval: the stable formula
# underflows to exactly 0.0 (or rounds to 1.0) for |x| beyond ~745, and
# downstream contracts require 0 < yhat < 1 for all finite inputs.
_SIGMOID_FLOOR = float(np.finfo(np.float64).tiny)
_SIGMOID_CEIL = float(np.nextafter(1.0, 0.0))


class ModelFormatError(ValueError):
    """Malformed or inconsistent model file."""


class TrainingDivergedError(RuntimeError):
    """Training hit a non-finite loss; carries the epoch/batch position."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass
class LayerParams:
    W: np.ndarray  # (fan_in, fan_out)
    b: np.ndarray  # (fan_out,)


@dataclass
class LayerGrads:
    dW: np.ndarray
    db: np.ndarray


@dataclass
class RegressorParams:
    """Weights of the full network: L hidden layers plus the output unit."""

    layers: list[LayerParams]

    @property
    def input_dim(self) -> int:
        return self.layers[0].W.shape[0]

    @property
    def hidden_width(self) -> int:
        return self.layers[0].W.shape[1]

    @property
    def n_hidden(self) -> int:
        return len(self.layers) - 1

    def copy(self) -> "RegressorParams":
        return RegressorParams(
            [LayerParams(layer.W.copy(), layer.b.copy()) for layer in self.layers]
        )


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    epochs: int = 10
    learning_rate: float = 1e-3
    dropout: float = 0.2
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the parameter shapes."""

    m: list[LayerGrads]
    v: list[LayerGrads]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: RegressorParams) -> "AdamState":
        return cls(
            m=[LayerGrads(np.zeros_like(l.W), np.zeros_like(l.b)) for l in params.layers],
            v=[LayerGrads(np.zeros_like(l.W), np.zeros_like(l.b)) for l in params.layers],
            t=0,
        )


@dataclass
class ForwardCache:
    """Everything backward needs: per-layer matmul inputs, pre-dropout
    activations, and the dropout masks actually applied."""

    layer_inputs: list[np.ndarray]
    activations: list[np.ndarray]
    masks: list[np.ndarray | None]


@dataclass
class TrainResult:
    params: RegressorParams
    #: Mean training MSE per epoch, as encountered batch by batch.
    history: list[float]


def sigmoid(x):
    """Numerically stable logistic function, clamped into (0, 1).

    Accepts scalars or arrays.  The clamp keeps saturated outputs at the
    nearest representable value inside the open interval instead of
    exactly 0.0/1.0.
    """
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    out = np.clip(out, _SIGMOID_FLOOR, _SIGMOID_CEIL)
    if np.isscalar(x) or (isinstance(x, np.ndarray) and x.ndim == 0):
        return float(out)
    return out


def init_model(
    input_dim: int,
    hidden_width: int = 128,
    hidden_layers: int = 2,
    seed: int = 0,
) -> RegressorParams:
    """Glorot-uniform weights from a seeded generator; zero biases."""
    if input_dim < 1 or hidden_width < 1 or hidden_layers < 1:
        raise ValueError("input_dim, hidden_width and hidden_layers must be >= 1")
    rng = np.random.default_rng(seed)
    dims = [input_dim] + [hidden_width] * hidden_layers + [1]
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append(LayerParams(W=W, b=np.zeros(fan_out)))
    return RegressorParams(layers)


def _as_batch(x: np.ndarray, input_dim: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != input_dim:
        raise ValueError(
            f"input dimension {arr.shape[-1] if arr.ndim else 0} != model dimension {input_dim}"
        )
    return arr, single


def forward(
    params: RegressorParams,
    x: np.ndarray,
    train: bool = False,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
):
    """Run the network on x ((D,) or (B, D)).

    Returns (yhat, cache) in train mode and (yhat, None) in infer mode;
    yhat is a float for 1-D input, else a (B,) array.  Inverted dropout
    (keep-probability 1-p, scale 1/(1-p)) follows each hidden activation
    in train mode only.
    """
    X, single = _as_batch(x, params.input_dim)
    use_dropout = train and dropout > 0.0
    if use_dropout and rng is None:
        raise ValueError("train-mode forward with dropout needs an rng")

    layer_inputs: list[np.ndarray] = []
    activations: list[np.ndarray] = []
    masks: list[np.ndarray | None] = []

    a = X
    for layer in params.layers[:-1]:
        layer_inputs.append(a)
        z = a @ layer.W + layer.b
        a = sigmoid(z)
        activations.append(a)
        if use_dropout:
            mask = (rng.random(a.shape) >= dropout) / (1.0 - dropout)
            masks.append(mask)
            a = a * mask
        else:
            masks.append(None)

    out_layer = params.layers[-1]
    layer_inputs.append(a)
    yhat = sigmoid(a @ out_layer.W + out_layer.b)
    activations.append(yhat)

    result = float(yhat[0, 0]) if single else yhat[:, 0]
    if not train:
        return result, None
    return result, ForwardCache(layer_inputs, activations, masks)


def predict(params: RegressorParams, x: np.ndarray):
    """Infer-mode sarcasm level estimate(s) in (0, 1)."""
    yhat, _ = forward(params, x, train=False)
    return yhat


def mse_loss(preds, targets) -> float:
    """Mean squared error (1/N) * sum((pred - target)^2)."""
    p = np.asarray(preds, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape[0]} predictions vs {t.shape[0]} targets")
    if p.size == 0:
        raise ValueError("cannot compute MSE of empty inputs")
    diff = p - t
    return float(np.dot(diff, diff) / p.size)


def backward(
    params: RegressorParams, cache: ForwardCache, targets
) -> list[LayerGrads]:
    """Gradients of the batch-mean MSE w.r.t. every weight and bias.

    Uses dL/dyhat = 2(yhat - y)/B and sigmoid'(z) = a(1 - a); dropout
    masks recorded by the forward pass are re-applied on the way back.
    """
    y = np.asarray(targets, dtype=np.float64).reshape(-1, 1)
    yhat = cache.activations[-1]
    if yhat.shape[0] != y.shape[0]:
        raise ValueError("target count does not match the cached batch")
    batch = y.shape[0]

    grads: list[LayerGrads] = [None] * len(params.layers)  # type: ignore[list-item]

    # Output unit: dL/dz = 2(yhat-y)/B * yhat(1-yhat)
    delta = (2.0 / batch) * (yhat - y) * yhat * (1.0 - yhat)
    grads[-1] = LayerGrads(
        dW=cache.layer_inputs[-1].T @ delta,
        db=delta.sum(axis=0),
    )

    d_below = delta @ params.layers[-1].W.T
    for l in range(len(params.layers) - 2, -1, -1):
        if cache.masks[l] is not None:
            d_below = d_below * cache.masks[l]
        a = cache.activations[l]
        delta = d_below * a * (1.0 - a)
        grads[l] = LayerGrads(
            dW=cache.layer_inputs[l].T @ delta,
            db=delta.sum(axis=0),
        )
        if l > 0:
            d_below = delta @ params.layers[l].W.T
    return grads


def adam_step(
    state: AdamState,
    params: RegressorParams,
    grads: list[LayerGrads],
    config: TrainConfig,
) -> tuple[RegressorParams, AdamState]:
    """One Adam update with bias correction; mutates params and state in place."""
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    bias1 = 1.0 - b1**state.t
    bias2 = 1.0 - b2**state.t
    for layer, grad, m, v in zip(params.layers, grads, state.m, state.v):
        for name in ("W", "b"):
            g = getattr(grad, "d" + name)
            m_acc = getattr(m, "d" + name)
            v_acc = getattr(v, "d" + name)
            m_acc *= b1
            m_acc += (1.0 - b1) * g
            v_acc *= b2
            v_acc += (1.0 - b2) * g * g
            m_hat = m_acc / bias1
            v_hat = v_acc / bias2
            theta = getattr(layer, name)
            theta -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return params, state


def train(
    X: np.ndarray,
    y: np.ndarray,
    config: TrainConfig = TrainConfig(),
    params: RegressorParams | None = None,
    hidden_width: int = 128,
    hidden_layers: int = 2,
) -> TrainResult:
    """Mini-batch training loop: seeded shuffle per epoch, forward/backward/
    Adam per batch (the last batch may be smaller), mean MSE per epoch."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a non-empty (N, D) array")
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"length mismatch: {X.shape[0]} examples vs {y.shape[0]} labels")

    if params is None:
        params = init_model(
            X.shape[1], hidden_width, hidden_layers, seed=derive_seed(config.seed, "init")
        )
    elif params.input_dim != X.shape[1]:
        raise ValueError(
            f"input dimension {X.shape[1]} != model dimension {params.input_dim}"
        )

    rng = np.random.default_rng(derive_seed(config.seed, "train"))
    state = AdamState.zeros_like(params)
    n = X.shape[0]
    history: list[float] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        sq_err = 0.0
        for batch_index, start in enumerate(range(0, n, config.batch_size), start=1):
            idx = order[start : start + config.batch_size]
            yhat, cache = forward(
                params, X[idx], train=True, dropout=config.dropout, rng=rng
            )
            loss = mse_loss(yhat, y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, batch_index)
            sq_err += loss * idx.size
            grads = backward(params, cache, y[idx])
            adam_step(state, params, grads, config)
        history.append(sq_err / n)
    return TrainResult(params=params, history=history)


def grad_check(
    params: RegressorParams,
    x: np.ndarray,
    y,
    h: float = 1e-5,
    abs_tol: float = 1e-8,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Dropout must be off (the loss surface probed by finite differences
    has to match the one backward differentiates).  Entry pairs whose
    difference is below abs_tol count as matching regardless of scale.
    """
    if h <= 0.0:
        raise ValueError("finite-difference step h must be > 0")
    X, _ = _as_batch(np.asarray(x, dtype=np.float64), params.input_dim)
    targets = np.atleast_1d(np.asarray(y, dtype=np.float64))

    _, cache = forward(params, X, train=True, dropout=0.0)
    analytic = backward(params, cache, targets)

    def loss_now() -> float:
        preds, _ = forward(params, X, train=False)
        return mse_loss(np.atleast_1d(preds), targets)

    worst = 0.0
    for layer, grad in zip(params.layers, analytic):
        for name in ("W", "b"):
            theta = getattr(layer, name)
            g_analytic = getattr(grad, "d" + name)
            flat = theta.reshape(-1)
            g_flat = g_analytic.reshape(-1)
            for i in range(flat.size):
                original = flat[i]
                flat[i] = original + h
                loss_plus = loss_now()
                flat[i] = original - h
                loss_minus = loss_now()
                flat[i] = original
                numeric = (loss_plus - loss_minus) / (2.0 * h)
                diff = abs(g_flat[i] - numeric)
                if diff > abs_tol:
                    worst = max(worst, diff / max(abs(g_flat[i]), abs(numeric)))
    return worst


def save_model(
    params: RegressorParams,
    path: str | os.PathLike,
    dropout: float = 0.2,
    extra: dict | None = None,
) -> None:
    """Persist the model as a single JSON document (atomic write)."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "D": params.input_dim,
        "H": params.hidden_width,
        "L": params.n_hidden,
        "p": dropout,
        "hidden_activation": HIDDEN_ACTIVATION,
        "weights": [layer.W.tolist() for layer in params.layers],
        "biases": [layer.b.tolist() for layer in params.layers],
    }
    if extra:
        for key, value in extra.items():
            doc.setdefault(key, value)
    with atomic_writer(path) as handle:
        json.dump(doc, handle)
        handle.write("\n")


def load_model(path: str | os.PathLike) -> tuple[RegressorParams, dict]:
    """Load and shape-validate a model file; returns (params, metadata)."""
    with open(path, encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"malformed model JSON: {exc.msg}") from None
    for key in ("format_version", "D", "H", "L", "p", "hidden_activation", "weights", "biases"):
        if key not in doc:
            raise ModelFormatError(f"missing field {key!r}")
    if doc["format_version"] != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {doc['format_version']!r}")
    if doc["hidden_activation"] != HIDDEN_ACTIVATION:
        raise ModelFormatError(f"unsupported hidden_activation {doc['hidden_activation']!r}")

    D, H, L = doc["D"], doc["H"], doc["L"]
    dims = [D] + [H] * L + [1]
    weights, biases = doc["weights"], doc["biases"]
    if len(weights) != L + 1 or len(biases) != L + 1:
        raise ModelFormatError(
            f"expected {L + 1} weight/bias blocks, got {len(weights)}/{len(biases)}"
        )
    layers = []
    for index, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        try:
            W = np.asarray(weights[index], dtype=np.float64)
            b = np.asarray(biases[index], dtype=np.float64)
        except (ValueError, TypeError):
            raise ModelFormatError(f"layer {index}: malformed weight shape") from None
        if W.shape != (fan_in, fan_out):
            raise ModelFormatError(
                f"layer {index}: weight shape {W.shape} != ({fan_in}, {fan_out})"
            )
        if b.shape != (fan_out,):
            raise ModelFormatError(f"layer {index}: bias shape {b.shape} != ({fan_out},)")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ModelFormatError(f"layer {index}: non-finite parameter value")
        layers.append(LayerParams(W=W, b=b))
    metadata = {k: v for k, v in doc.items() if k not in ("weights", "biases")}
    return RegressorParams(layers), metadata
