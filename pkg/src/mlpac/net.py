"""Dense feedforward networks with per-class sigmoid outputs.

Both the policy and the critic are plain MLPs: tanh hidden layers, an
independent sigmoid per output unit. Gradients for the two loss families
used in training (weighted per-class binary cross-entropy and scaled
action log-probability) are computed analytically; ``finite_diff_check``
provides the central-difference oracle used to validate them.

All arithmetic is float64. Output probabilities are clamped to
``[PROB_EPS, 1 - PROB_EPS]`` so downstream logs stay finite; the analytic
gradients account for the clamp (zero derivative where it binds).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, FileFormatError, InputError, NumericError

PROB_EPS = 1e-7

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class DenseModel:
    """Immutable parameter set of a dense network.

    ``weights[l]`` has shape (layer_dims[l], layer_dims[l+1]); ``biases[l]``
    has shape (layer_dims[l+1],). Hidden layers use tanh, the output layer
    a per-unit sigmoid.
    """

    weights: tuple
    biases: tuple

    @property
    def layer_dims(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def num_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    @property
    def output_dim(self):
        return self.weights[-1].shape[1]

    @property
    def input_dim(self):
        return self.weights[0].shape[0]


@dataclass(frozen=True)
class Gradients:
    """Per-layer gradient arrays, shape-congruent with a DenseModel."""

    weights: tuple
    biases: tuple

    def scaled(self, factor: float) -> "Gradients":
        return Gradients(
            tuple(factor * w for w in self.weights),
            tuple(factor * b for b in self.biases),
        )

    def added(self, other: "Gradients") -> "Gradients":
        return Gradients(
            tuple(a + b for a, b in zip(self.weights, other.weights)),
            tuple(a + b for a, b in zip(self.biases, other.biases)),
        )


def zero_gradients(model: DenseModel) -> Gradients:
    return Gradients(
        tuple(np.zeros_like(w) for w in model.weights),
        tuple(np.zeros_like(b) for b in model.biases),
    )


def init_model(layer_dims, seed) -> DenseModel:
    """Create a model with uniform symmetric weights scaled by 1/sqrt(fan_in).

    Biases start at zero. Deterministic for a fixed seed.
    """
    if len(layer_dims) < 2:
        raise ConfigurationError(f"need at least input and output dims, got {layer_dims}")
    if any(int(d) < 1 for d in layer_dims):
        raise ConfigurationError(f"layer dims must be positive, got {layer_dims}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-scale, scale, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return DenseModel(tuple(weights), tuple(biases))


def _sigmoid(z):
    # Piecewise form avoids exp overflow for large |z|.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_cached(model: DenseModel, x: np.ndarray):
    """Run the network, keeping per-layer activations for backprop.

    Returns (activations, probs, live) where ``activations[l]`` is the input
    to layer l, ``probs`` the clamped output probabilities, and ``live`` a
    boolean mask, False where the output clamp binds (zero gradient there).
    """
    a = np.asarray(x, dtype=float)
    squeeze = a.ndim == 1
    if squeeze:
        a = a[None, :]
    if a.shape[1] != model.input_dim:
        raise InputError(
            f"input has {a.shape[1]} features, model expects {model.input_dim}"
        )
    activations = [a]
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        a = np.tanh(a @ w + b)
        activations.append(a)
    z = a @ model.weights[-1] + model.biases[-1]
    raw = _sigmoid(z)
    live = (raw > PROB_EPS) & (raw < 1.0 - PROB_EPS)
    probs = np.clip(raw, PROB_EPS, 1.0 - PROB_EPS)
    return activations, probs, live, squeeze


def forward(model: DenseModel, x) -> np.ndarray:
    """Per-class probabilities for one feature vector or a batch (rows)."""
    _, probs, _, squeeze = _forward_cached(model, x)
    return probs[0] if squeeze else probs


def _backprop(model: DenseModel, activations, delta) -> Gradients:
    """Backpropagate ``delta`` (dLoss/dz at the output layer) to all params."""
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grads_w[layer] = activations[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            # tanh'(z) = 1 - tanh(z)^2, expressed in the stored activation
            delta = (delta @ model.weights[layer].T) * (1.0 - activations[layer] ** 2)
    return Gradients(tuple(grads_w), tuple(grads_b))


def weighted_bce_loss(probs, targets, weights) -> float:
    """Mean over rows of the weighted per-class binary cross-entropy."""
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    elem = -(targets * np.log(probs) + (1.0 - targets) * np.log(1.0 - probs))
    return float((weights * elem).sum() / probs.shape[0])


def backward_weighted_bce(model: DenseModel, x_batch, targets, weights):
    """Loss and exact analytic gradients of the weighted BCE objective.

    ``targets`` are {0,1} per cell, ``weights`` nonnegative per cell. The
    loss is the mean over batch rows of the weighted per-class BCE.
    """
    x_batch = np.atleast_2d(np.asarray(x_batch, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    if not (np.isfinite(x_batch).all() and np.isfinite(weights).all()):
        raise NumericError("non-finite values in inputs to weighted BCE")
    if targets.shape != (x_batch.shape[0], model.output_dim):
        raise InputError(
            f"targets shape {targets.shape} does not match "
            f"(batch={x_batch.shape[0]}, classes={model.output_dim})"
        )
    if weights.shape != targets.shape:
        raise InputError(f"weights shape {weights.shape} != targets shape {targets.shape}")
    activations, probs, live, _ = _forward_cached(model, x_batch)
    loss = weighted_bce_loss(probs, targets, weights)
    n = x_batch.shape[0]
    delta = weights * live * (probs - targets) / n
    return loss, _backprop(model, activations, delta)


def logprob_value(probs, actions) -> float:
    """Log-probability of an action vector under factorized Bernoulli probs."""
    probs = np.asarray(probs, dtype=float)
    actions = np.asarray(actions)
    chosen = np.where(actions == 1, probs, 1.0 - probs)
    return float(np.log(chosen).sum())


def backward_scaled_logprob(model: DenseModel, x, actions, scale: float) -> Gradients:
    """Gradient of ``scale * ln pi(actions | x)`` with respect to all params.

    ``actions`` is a vector in {+1, -1} of length output_dim. Computed in
    logit space so saturated probabilities stay finite.
    """
    actions = np.asarray(actions)
    if actions.shape != (model.output_dim,):
        raise InputError(
            f"actions shape {actions.shape} != (output_dim={model.output_dim},)"
        )
    if not np.isfinite(scale):
        raise NumericError("scale must be finite")
    activations, probs, live, _ = _forward_cached(model, np.asarray(x, dtype=float))
    targets = (actions == 1).astype(float)[None, :]
    delta = scale * live * (targets - probs)
    return _backprop(model, activations, delta)


def reinforce_delta_gradient(model: DenseModel, x_batch, deltas_factory) -> Gradients:
    """Backprop a caller-supplied output delta for a whole batch at once.

    ``deltas_factory(probs, live)`` must return dObjective/dz at the output
    layer, shape (batch, output_dim). Used by the REINFORCE batch gradient
    so that many sampled action vectors collapse into one backward pass.
    """
    activations, probs, live, _ = _forward_cached(model, np.atleast_2d(np.asarray(x_batch, dtype=float)))
    delta = deltas_factory(probs, live)
    return _backprop(model, activations, delta)


def apply_update(model: DenseModel, grads: Gradients, step: float, direction: str) -> DenseModel:
    """Return a new model with params moved by step*grads (ascend or descend)."""
    if direction == "ascend":
        sign = 1.0
    elif direction == "descend":
        sign = -1.0
    else:
        raise ConfigurationError(f"direction must be 'ascend' or 'descend', got {direction!r}")
    for w, g in zip(model.weights, grads.weights):
        if w.shape != g.shape:
            raise InputError(f"gradient shape {g.shape} != weight shape {w.shape}")
    new_w = tuple(w + sign * step * g for w, g in zip(model.weights, grads.weights))
    new_b = tuple(b + sign * step * g for b, g in zip(model.biases, grads.biases))
    return DenseModel(new_w, new_b)


def _flatten(arrays):
    return np.concatenate([a.ravel() for a in arrays])


def _model_from_flat(model: DenseModel, flat: np.ndarray) -> DenseModel:
    weights = []
    biases = []
    pos = 0
    for w in model.weights:
        weights.append(flat[pos : pos + w.size].reshape(w.shape))
        pos += w.size
    for b in model.biases:
        biases.append(flat[pos : pos + b.size].reshape(b.shape))
        pos += b.size
    return DenseModel(tuple(weights), tuple(biases))


def model_to_flat(model: DenseModel) -> np.ndarray:
    return _flatten(model.weights + model.biases)


def gradients_to_flat(grads: Gradients) -> np.ndarray:
    return _flatten(grads.weights + grads.biases)


def _default_check_inputs(model: DenseModel, n_rows: int):
    c = model.output_dim
    targets = (np.add.outer(np.arange(n_rows), np.arange(c)) % 2).astype(float)
    weights = np.ones((n_rows, c))
    actions = np.where(np.arange(c) % 2 == 0, 1, -1)
    return targets, weights, actions


def finite_diff_check(
    model: DenseModel,
    x_batch,
    loss_kind: str,
    eps: float = 1e-5,
    targets=None,
    weights=None,
    actions=None,
    scale: float = 1.0,
    grads: Gradients = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_kind`` is "weighted_bce" or "scaled_logprob". Targets, weights,
    actions default to fixed deterministic patterns; pass ``grads`` to check
    a specific (possibly corrupted) gradient instead of the analytic one.
    Intended for small models (a few hundred parameters).
    """
    x_batch = np.atleast_2d(np.asarray(x_batch, dtype=float))
    default_t, default_w, default_a = _default_check_inputs(model, x_batch.shape[0])
    if targets is None:
        targets = default_t
    if weights is None:
        weights = default_w
    if actions is None:
        actions = default_a

    if loss_kind == "weighted_bce":
        def value(m):
            return weighted_bce_loss(forward(m, x_batch), targets, weights)

        if grads is None:
            _, grads = backward_weighted_bce(model, x_batch, targets, weights)
    elif loss_kind == "scaled_logprob":
        if x_batch.shape[0] != 1:
            raise InputError("scaled_logprob check expects a single-row batch")

        def value(m):
            return scale * logprob_value(forward(m, x_batch[0]), actions)

        if grads is None:
            grads = backward_scaled_logprob(model, x_batch[0], actions, scale)
    else:
        raise ConfigurationError(f"unknown loss_kind {loss_kind!r}")

    analytic = gradients_to_flat(grads)
    flat = model_to_flat(model)
    numeric = np.empty_like(flat)
    for k in range(flat.size):
        bumped = flat.copy()
        bumped[k] = flat[k] + eps
        f_plus = value(_model_from_flat(model, bumped))
        bumped[k] = flat[k] - eps
        f_minus = value(_model_from_flat(model, bumped))
        numeric[k] = (f_plus - f_minus) / (2.0 * eps)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def save_model(model: DenseModel, path) -> None:
    """Write a JSON checkpoint: layer dims plus row-major weights and biases."""
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "layer_dims": model.layer_dims,
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path) -> DenseModel:
    """Read a checkpoint written by ``save_model``."""
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"checkpoint is not valid JSON: {exc}") from exc
    try:
        version = payload["format_version"]
        if version != CHECKPOINT_FORMAT_VERSION:
            raise FileFormatError(f"unsupported checkpoint format_version {version}")
        dims = payload["layer_dims"]
        weights = []
        biases = []
        for layer in payload["layers"]:
            weights.append(np.asarray(layer["weights"], dtype=float))
            biases.append(np.asarray(layer["bias"], dtype=float))
    except (KeyError, TypeError) as exc:
        raise FileFormatError(f"malformed checkpoint: missing {exc}") from exc
    model = DenseModel(tuple(weights), tuple(biases))
    if model.layer_dims != list(dims):
        raise FileFormatError(
            f"checkpoint layer_dims {dims} do not match stored arrays {model.layer_dims}"
        )
    return model
