"""Desk-scale fully-connected ReLU classifier with explicit input gradients.

Everything is plain numpy: forward pass, softmax cross-entropy, backprop
to both parameters and inputs, mini-batch SGD, and adversarial training.
The module also provides an analytically solvable binary linear classifier
(`LinearOracle`) whose adversarial set on the unit sphere is an exact
spherical cap; it serves as the ground-truth model for validating the
attack and estimator pipeline end to end.

Model files are versioned JSON with dimension headers and row-major float
payloads; floats are written with shortest round-trip precision, so
save/load is bit-exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import ModelFormatError, RobustPointError, TrainingError
from .geometry import angle_between
from .rng import STREAM_DATA, STREAM_INIT, substream

__all__ = [
    "MicroNet",
    "TrainConfig",
    "TrainResult",
    "LinearOracle",
    "CapRegion",
    "MODEL_FORMAT_VERSION",
    "init_micronet",
    "forward",
    "predict",
    "loss_and_input_grad",
    "evaluate_accuracy",
    "train_sgd",
    "adversarial_train",
    "linear_adversarial_cap",
    "linear_direction_sparsity",
    "expected_direction_sparsity",
    "linear_expected_sparsity",
    "save_model",
    "load_model",
]

MODEL_FORMAT_VERSION = 1
_MODEL_KIND = "relu-mlp"


@dataclass
class MicroNet:
    """Fully-connected ReLU network; the last layer is linear (logits).

    weights[i] has shape (d_in, d_out) and biases[i] shape (d_out,);
    consecutive layer dimensions must chain, and all entries are finite.
    """

    weights: list
    biases: list

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("weights and biases must be nonempty lists of equal length")
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.biases = [np.asarray(b, dtype=float) for b in self.biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} do not match")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ValueError(
                    f"layer {i}: input width {w.shape[0]} does not chain with "
                    f"previous output width {self.weights[i - 1].shape[1]}"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i}: parameters must be finite")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def class_count(self) -> int:
        return self.weights[-1].shape[1]

    def copy(self) -> "MicroNet":
        return MicroNet([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_micronet(
    n: int, hidden: Sequence[int], n_classes: int, rng: np.random.Generator
) -> MicroNet:
    """He-initialized network with the given hidden widths (biases zero)."""
    if n < 1 or n_classes < 2:
        raise ValueError(f"need n >= 1 and n_classes >= 2, got n={n}, n_classes={n_classes}")
    dims = [int(n)] + [int(h) for h in hidden] + [int(n_classes)]
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.standard_normal((d_in, d_out)) * math.sqrt(2.0 / d_in))
        biases.append(np.zeros(d_out))
    return MicroNet(weights, biases)


def _as_batch(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    if arr.ndim == 2:
        return arr, False
    raise ValueError(f"inputs must be a vector or a matrix of rows, got ndim={arr.ndim}")


def _forward_cache(model: MicroNet, X: np.ndarray):
    """Forward pass keeping activations and pre-activations for backprop."""
    acts = [X]
    pre = []
    a = X
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        pre.append(z)
        a = np.maximum(z, 0.0) if i < last else z
        acts.append(a)
    return acts, pre


def forward(model: MicroNet, x) -> np.ndarray:
    """Logits for one input vector or a batch of rows."""
    X, single = _as_batch(x)
    if X.shape[1] != model.input_dim:
        raise ValueError(f"input width {X.shape[1]} != model input_dim {model.input_dim}")
    acts, _ = _forward_cache(model, X)
    return acts[-1][0] if single else acts[-1]


def predict(model: MicroNet, x):
    """Predicted class index; argmax breaks ties toward the lowest index."""
    logits = forward(model, x)
    if logits.ndim == 1:
        return int(np.argmax(logits))
    return np.argmax(logits, axis=1)


def _softmax_and_losses(logits: np.ndarray, y: np.ndarray):
    m = logits.max(axis=1, keepdims=True)
    exps = np.exp(logits - m)
    sums = exps.sum(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(sums[:, 0])
    losses = lse - logits[np.arange(logits.shape[0]), y]
    return exps / sums, losses


def _check_labels(y, batch: int, n_classes: int) -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim == 0:
        arr = np.full(batch, int(arr))
    arr = arr.astype(int)
    if arr.shape != (batch,):
        raise ValueError(f"labels have shape {arr.shape}, expected ({batch},)")
    if arr.min() < 0 or arr.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes}), got range "
                         f"[{arr.min()}, {arr.max()}]")
    return arr


def loss_and_input_grad(model: MicroNet, x, y):
    """Softmax cross-entropy and its gradient with respect to the input.

    For a single vector returns (loss, grad) with grad of shape (n,); for a
    batch of rows returns per-example losses (B,) and gradients (B, n).
    ReLU uses the zero subgradient at kinks.
    """
    X, single = _as_batch(x)
    Y = _check_labels(y, X.shape[0], model.class_count)
    acts, pre = _forward_cache(model, X)
    probs, losses = _softmax_and_losses(pre[-1], Y)
    dz = probs.copy()
    dz[np.arange(X.shape[0]), Y] -= 1.0
    for i in range(len(model.weights) - 1, -1, -1):
        da = dz @ model.weights[i].T
        if i > 0:
            dz = da * (pre[i - 1] > 0.0)
    grad = da
    return (float(losses[0]), grad[0]) if single else (losses, grad)


def _loss_and_param_grads(model: MicroNet, X: np.ndarray, Y: np.ndarray):
    acts, pre = _forward_cache(model, X)
    probs, losses = _softmax_and_losses(pre[-1], Y)
    batch = X.shape[0]
    dz = probs
    dz[np.arange(batch), Y] -= 1.0
    dz /= batch
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ dz
        grads_b[i] = dz.sum(axis=0)
        if i > 0:
            dz = (dz @ model.weights[i].T) * (pre[i - 1] > 0.0)
    return float(losses.mean()), grads_w, grads_b


def evaluate_accuracy(model: MicroNet, X, y) -> float:
    """Fraction of rows whose predicted class equals the label."""
    X = np.asarray(X, dtype=float)
    y = _check_labels(y, X.shape[0], model.class_count)
    return float(np.mean(predict(model, X) == y))


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch SGD settings; `hidden` fixes the architecture."""

    epochs: int = 30
    lr: float = 0.1
    batch_size: int = 64
    hidden: tuple = (32,)
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.lr <= 0.0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


@dataclass(frozen=True)
class TrainResult:
    model: MicroNet
    train_accuracy: float
    eval_accuracy: Optional[float] = None


def _fit(dataset, config: TrainConfig, perturb) -> MicroNet:
    X = np.asarray(dataset.X, dtype=float)
    y = np.asarray(dataset.y, dtype=int)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ValueError("dataset must provide matching nonempty X rows and y labels")
    model = init_micronet(
        X.shape[1], config.hidden, int(dataset.n_classes), substream(config.seed, STREAM_INIT)
    )
    shuffle_rng = substream(config.seed, STREAM_DATA)
    m = X.shape[0]
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(m)
        for start in range(0, m, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = X[idx], y[idx]
            if perturb is not None:
                xb = perturb(model, xb, yb)
            loss, gw, gb = _loss_and_param_grads(model, xb, yb)
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}; lower the learning rate")
            for i in range(len(model.weights)):
                model.weights[i] -= config.lr * gw[i]
                model.biases[i] -= config.lr * gb[i]
    return model


def train_sgd(dataset, config: TrainConfig, eval_dataset=None) -> TrainResult:
    """Train on softmax cross-entropy with mini-batch SGD.

    `dataset` is any object with X (m, n) float rows, y (m,) int labels and
    n_classes. Deterministic given config.seed: initialization and epoch
    shuffles come from named substreams of it.
    """
    model = _fit(dataset, config, perturb=None)
    return TrainResult(
        model,
        evaluate_accuracy(model, dataset.X, dataset.y),
        None if eval_dataset is None else evaluate_accuracy(model, eval_dataset.X, eval_dataset.y),
    )


def adversarial_train(
    dataset, threat, attack_config, train_config: TrainConfig, eval_dataset=None
) -> TrainResult:
    """SGD where each mini-batch is replaced by its attacked version.

    Every batch is perturbed by the unconstrained attack under `threat`
    before the gradient step. With threat.eps == 0 the trajectory is
    identical to train_sgd under the same train_config.
    """
    from .attack import pgd  # runtime import; attack depends on this module

    def perturb(model, xb, yb):
        if threat.eps == 0.0:
            return xb
        return xb + pgd(model, xb, yb, threat, attack_config).delta

    model = _fit(dataset, train_config, perturb)
    return TrainResult(
        model,
        evaluate_accuracy(model, dataset.X, dataset.y),
        None if eval_dataset is None else evaluate_accuracy(model, eval_dataset.X, eval_dataset.y),
    )


# ---------------------------------------------------------------------------
# Analytic linear classifier
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearOracle:
    """Binary classifier sign(w.x + b) with closed-form adversarial geometry.

    Class 1 on the positive side of the hyperplane, class 0 otherwise
    (the boundary itself predicts 0, matching lowest-index argmax ties).
    """

    w: np.ndarray
    b: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or w.shape[0] < 2:
            raise ValueError("w must be a vector of dimension >= 2")
        if not np.isfinite(w).all() or np.linalg.norm(w) == 0.0:
            raise ValueError("w must be finite and nonzero")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    def decision_value(self, x) -> float:
        return float(np.dot(self.w, np.asarray(x, dtype=float)) + self.b)

    def predict(self, x) -> int:
        return 1 if self.decision_value(x) > 0.0 else 0

    def to_micronet(self) -> MicroNet:
        """Equivalent two-logit single-layer network (logit gap = w.x + b)."""
        w_mat = np.stack([np.zeros_like(self.w), self.w], axis=1)
        return MicroNet([w_mat], [np.array([0.0, self.b])])


@dataclass(frozen=True)
class CapRegion:
    """Spherical cap: unit directions within half_angle of center."""

    center: np.ndarray
    half_angle: float


def linear_adversarial_cap(
    oracle: LinearOracle, x, eps: float, label: Optional[int] = None
) -> Optional[CapRegion]:
    """Adversarial directions of a linear classifier as an exact cap.

    A unit direction d flips the classification of x + eps*d away from
    `label` (default: the oracle's own prediction at x) exactly when the
    angle from d to -s*w/||w|| is below arccos(margin/(eps*||w||)), where
    s is the labeled side's sign and margin = s*(w.x + b). Returns None
    when the margin reaches eps*||w|| (tangent caps count as empty).
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x, dtype=float)
    if label is None:
        label = oracle.predict(x)
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    s = 1.0 if label == 1 else -1.0
    w_norm = float(np.linalg.norm(oracle.w))
    margin = s * oracle.decision_value(x)
    if margin >= eps * w_norm:
        return None
    beta = float(np.arccos(np.clip(margin / (eps * w_norm), -1.0, 1.0)))
    return CapRegion(-s * oracle.w / w_norm, beta)


def linear_direction_sparsity(
    oracle: LinearOracle, x, eps: float, u, label: Optional[int] = None
) -> float:
    """Exact angular sparsity of direction u: max(0, angle(u, center) - beta).

    Raises RobustPointError when the adversarial cap is empty.
    """
    cap = linear_adversarial_cap(oracle, x, eps, label)
    if cap is None:
        raise RobustPointError("linear classifier is robust at this point within eps")
    return max(0.0, angle_between(np.asarray(u, dtype=float), cap.center) - cap.half_angle)


def expected_direction_sparsity(beta: float, n: int, *, tol: float = 1e-10) -> float:
    """Mean of max(0, theta - beta) when theta is the angle from a uniform
    direction in R^n to a fixed axis (density proportional to sin^(n-2)).
    """
    if not (0.0 <= beta <= math.pi):
        raise ValueError(f"beta must lie in [0, pi], got {beta}")
    if int(n) != n or n < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {n!r}")
    if beta == math.pi:
        return 0.0
    n = int(n)
    log_z = 0.5 * math.log(math.pi) + math.lgamma((n - 1) / 2.0) - math.lgamma(n / 2.0)
    z = math.exp(log_z)
    value, _ = integrate.quad(
        lambda t: (t - beta) * math.sin(t) ** (n - 2) / z, beta, math.pi,
        epsabs=tol, epsrel=1e-12, limit=200,
    )
    return value


def linear_expected_sparsity(
    oracle: LinearOracle, x, eps: float, label: Optional[int] = None
) -> float:
    """Expected angular sparsity of x over uniform directions, in closed form.

    Raises RobustPointError when the adversarial cap is empty.
    """
    cap = linear_adversarial_cap(oracle, x, eps, label)
    if cap is None:
        raise RobustPointError("linear classifier is robust at this point within eps")
    return expected_direction_sparsity(cap.half_angle, np.asarray(x).shape[0])


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_model(model: MicroNet, path) -> None:
    """Write the model as versioned JSON (row-major weights, exact floats)."""
    layers = []
    for w, b in zip(model.weights, model.biases):
        layers.append(
            {
                "rows": int(w.shape[0]),
                "cols": int(w.shape[1]),
                "weights": [float(v) for v in w.ravel(order="C")],
                "bias": [float(v) for v in b],
            }
        )
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": _MODEL_KIND,
        "input_dim": model.input_dim,
        "class_count": model.class_count,
        "layers": layers,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _format_error(msg: str) -> ModelFormatError:
    return ModelFormatError(f"model file: {msg}")


def load_model(path) -> MicroNet:
    """Read a model written by save_model; round-trips bit-exactly.

    Raises ModelFormatError on unparsable JSON (with location), on an
    unsupported format_version, and on dimension or payload mismatches.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ModelFormatError(
                f"model file is not valid JSON: {e.msg} at line {e.lineno} column {e.colno}"
            ) from e
    if not isinstance(doc, dict):
        raise _format_error("top level must be an object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise _format_error(
            f"unsupported format_version {version!r}; this build reads version "
            f"{MODEL_FORMAT_VERSION}"
        )
    if doc.get("kind") != _MODEL_KIND:
        raise _format_error(f"unsupported kind {doc.get('kind')!r}")
    layers = doc.get("layers")
    if not isinstance(layers, list) or not layers:
        raise _format_error("layers must be a nonempty list")
    weights, biases = [], []
    for i, layer in enumerate(layers):
        try:
            rows, cols = int(layer["rows"]), int(layer["cols"])
            flat = layer["weights"]
            bias = layer["bias"]
        except (KeyError, TypeError, ValueError) as e:
            raise _format_error(f"layer {i}: missing or malformed fields ({e})") from e
        if rows < 1 or cols < 1:
            raise _format_error(f"layer {i}: dimensions must be positive")
        if len(flat) != rows * cols:
            raise _format_error(
                f"layer {i}: expected {rows * cols} weights, found {len(flat)}"
            )
        if len(bias) != cols:
            raise _format_error(f"layer {i}: expected {cols} bias entries, found {len(bias)}")
        weights.append(np.asarray(flat, dtype=float).reshape(rows, cols))
        biases.append(np.asarray(bias, dtype=float))
    try:
        model = MicroNet(weights, biases)
    except ValueError as e:
        raise _format_error(str(e)) from e
    if model.input_dim != doc.get("input_dim") or model.class_count != doc.get("class_count"):
        raise _format_error("header dimensions do not match layer payload")
    return model
