"""Feed-forward scalar model with exact per-example parameter gradients.

Parameters live in one flat float64 vector.  Layout is layer-major; within a
layer the weight matrix (shape ``(w_out, w_in)``) is stored row-major and is
followed by the bias vector.  The model output is the pre-sigmoid logit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit, log_expit

from . import rng

ACTIVATIONS = ("relu", "tanh")


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    layer_widths: tuple[int, ...]
    activation: str = "relu"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise ValueError("need at least an input and an output width")
        if any(w < 1 for w in widths):
            raise ValueError(f"layer widths must be positive, got {widths}")
        if widths[-1] != 1:
            raise ValueError("final width must be 1 (scalar output)")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        """Parse ``"784-64-32-1:relu"``; the activation suffix defaults to relu."""
        text = text.strip()
        widths, _, act = text.partition(":")
        try:
            layer_widths = tuple(int(w) for w in widths.split("-"))
        except ValueError:
            raise ValueError(f"bad model spec {text!r}") from None
        return cls(layer_widths, act.strip() or "relu")

    def __str__(self):
        return "-".join(map(str, self.layer_widths)) + ":" + self.activation

    @property
    def input_dim(self) -> int:
        return self.layer_widths[0]

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def n_params(self) -> int:
        w = self.layer_widths
        return sum((w[i] + 1) * w[i + 1] for i in range(self.n_layers))

    def layer_ranges(self) -> list[tuple[int, int]]:
        """Half-open ``(start, stop)`` index range of each layer's parameters."""
        out, start = [], 0
        w = self.layer_widths
        for i in range(self.n_layers):
            stop = start + (w[i] + 1) * w[i + 1]
            out.append((start, stop))
            start = stop
        return out


def unpack(spec: ModelSpec, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Views ``(W, b)`` per layer into the flat parameter vector."""
    params = np.asarray(params)
    if params.shape != (spec.n_params,):
        raise DimensionError(f"expected {spec.n_params} parameters, got shape {params.shape}")
    layers = []
    w = spec.layer_widths
    for i, (start, _) in enumerate(spec.layer_ranges()):
        n_in, n_out = w[i], w[i + 1]
        mid = start + n_in * n_out
        layers.append((params[start:mid].reshape(n_out, n_in), params[mid:mid + n_out]))
    return layers


def init_params(spec: ModelSpec, seed: int) -> np.ndarray:
    """Weights uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero."""
    gen = rng.stream(seed, rng.INIT)
    params = np.zeros(spec.n_params)
    for W, _ in unpack(spec, params):
        bound = 1.0 / math.sqrt(W.shape[1])
        W[...] = gen.uniform(-bound, bound, size=W.shape)
    return params


def last_layers_mask(spec: ModelSpec, k: int) -> np.ndarray:
    """Boolean mask over parameters selecting the final ``k`` layers.

    ``k == 0`` means no restriction (every parameter included).
    """
    if not 0 <= k <= spec.n_layers:
        raise ValueError(f"mask depth must be in [0, {spec.n_layers}], got {k}")
    mask = np.zeros(spec.n_params, dtype=bool)
    if k == 0:
        mask[:] = True
        return mask
    for start, stop in spec.layer_ranges()[spec.n_layers - k:]:
        mask[start:stop] = True
    return mask


def masked_gradient(g: np.ndarray, mask: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if g.shape[-1] != mask.shape[0]:
        raise DimensionError(f"gradient length {g.shape[-1]} != mask length {mask.shape[0]}")
    return np.where(mask, g, 0.0)


def _as_batch(spec: ModelSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise DimensionError(f"inputs must have {spec.input_dim} features, got shape {X.shape}")
    return X


def _act(spec, z):
    return np.maximum(z, 0.0) if spec.activation == "relu" else np.tanh(z)


def _act_grad(spec, z, a):
    # relu subgradient at exactly 0 is 0
    return (z > 0).astype(float) if spec.activation == "relu" else 1.0 - a * a


def _forward(spec, layers, X):
    acts, zs = [X], []
    a = X
    for i, (W, b) in enumerate(layers):
        z = a @ W.T + b
        zs.append(z)
        a = z if i == len(layers) - 1 else _act(spec, z)
        acts.append(a)
    return acts, zs


def forward_batch(spec: ModelSpec, params: np.ndarray, X) -> np.ndarray:
    """Logits for a batch of inputs, shape ``(n,)``."""
    X = _as_batch(spec, X)
    acts, _ = _forward(spec, unpack(spec, params), X)
    return acts[-1][:, 0]


def forward(spec: ModelSpec, params: np.ndarray, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.input_dim,):
        raise DimensionError(f"input must have shape ({spec.input_dim},), got {x.shape}")
    return float(forward_batch(spec, params, x)[0])


def hidden_features(spec: ModelSpec, params: np.ndarray, X) -> np.ndarray:
    """Final hidden activation vector of each input (the last layer's input)."""
    acts, _ = _forward(spec, unpack(spec, params), _as_batch(spec, X))
    return acts[-2]


def _backprop(spec, params, X, dout, per_example):
    """Backpropagate output cotangents ``dout`` (shape ``(n,)``).

    With ``per_example`` the result is the ``(n, P)`` matrix of
    ``dout[k] * d f(x_k) / dw``; otherwise those rows summed into ``(P,)``.
    """
    layers = unpack(spec, params)
    acts, zs = _forward(spec, layers, X)
    n = X.shape[0]
    out = np.empty((n, spec.n_params)) if per_example else np.empty(spec.n_params)
    delta = np.asarray(dout, dtype=float).reshape(n, 1)
    for i in reversed(range(len(layers))):
        start, stop = spec.layer_ranges()[i]
        a_prev = acts[i]
        n_w = a_prev.shape[1] * delta.shape[1]
        if per_example:
            gw = out[:, start:start + n_w].reshape(n, delta.shape[1], a_prev.shape[1])
            np.multiply(delta[:, :, None], a_prev[:, None, :], out=gw)
            out[:, start + n_w:stop] = delta
        else:
            out[start:start + n_w] = (delta.T @ a_prev).ravel()
            out[start + n_w:stop] = delta.sum(axis=0)
        if i > 0:
            W = layers[i][0]
            delta = (delta @ W) * _act_grad(spec, zs[i - 1], acts[i])
    return out


def per_example_gradients(spec: ModelSpec, params: np.ndarray, X) -> np.ndarray:
    """Rows are d f(x_k)/dw for each input, shape ``(n, P)``."""
    X = _as_batch(spec, X)
    return _backprop(spec, params, X, np.ones(X.shape[0]), per_example=True)


def per_example_gradient(spec: ModelSpec, params: np.ndarray, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.input_dim,):
        raise DimensionError(f"input must have shape ({spec.input_dim},), got {x.shape}")
    return per_example_gradients(spec, params, x)[0]


def loss_and_gradient(spec: ModelSpec, params: np.ndarray, X, y) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy of sigmoid(logit) against 0/1 labels, and its gradient."""
    X = _as_batch(spec, X)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    if y.shape[0] != X.shape[0]:
        raise DimensionError(f"{X.shape[0]} inputs but {y.shape[0]} labels")
    f = forward_batch(spec, params, X)
    loss = -np.mean(y * log_expit(f) + (1.0 - y) * log_expit(-f))
    grad = _backprop(spec, params, X, (expit(f) - y) / X.shape[0], per_example=False)
    return float(loss), grad


def as_params(spec: ModelSpec, values: Sequence[float]) -> np.ndarray:
    """Validate and copy a parameter sequence into a float64 vector."""
    p = np.array(values, dtype=float)
    if p.shape != (spec.n_params,):
        raise DimensionError(f"expected {spec.n_params} parameters, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("parameters must be finite")
    return p
