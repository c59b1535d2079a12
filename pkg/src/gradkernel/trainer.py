"""Plain minibatch SGD on the binary cross-entropy loss."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from . import rng
from .model import ModelSpec, forward_batch, loss_and_gradient
from .regression import evaluate


@dataclass
class TrainConfig:
    epochs: int = 9
    steps_per_epoch: int = 10
    batch_size: int = 100
    learning_rate: float = 0.1
    seed: int = 0
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.steps_per_epoch < 1 or self.batch_size < 1:
            raise ValueError("steps_per_epoch and batch_size must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")


def sgd_epoch(spec: ModelSpec, params, X, y, cfg: TrainConfig, epoch_index: int) -> np.ndarray:
    """One epoch of ``cfg.steps_per_epoch`` SGD updates; returns new parameters.

    Each step draws ``cfg.batch_size`` training indices uniformly with
    replacement from a stream keyed on ``(cfg.seed, epoch_index)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    gen = rng.stream(cfg.seed, rng.BATCH, epoch_index)
    params = np.array(params, dtype=float)
    for _ in range(cfg.steps_per_epoch):
        batch = gen.integers(0, len(X), size=cfg.batch_size)
        _, grad = loss_and_gradient(spec, params, X[batch], y[batch])
        if cfg.mask is not None:
            grad = np.where(cfg.mask, grad, 0.0)
        params -= cfg.learning_rate * grad
    return params


def network_accuracy(spec: ModelSpec, params, X, y) -> float:
    """Accuracy of ``sigmoid(logit) > 0.5`` as the positive-class decision."""
    return evaluate(expit(forward_batch(spec, params, X)), y, 0.5).accuracy


def train(spec: ModelSpec, params, X, y, cfg: TrainConfig) -> list[np.ndarray]:
    """Run ``cfg.epochs`` epochs; returns the trail of snapshots, initial one first."""
    trail = [np.array(params, dtype=float)]
    for epoch in range(cfg.epochs):
        trail.append(sgd_epoch(spec, trail[-1], X, y, cfg, epoch))
    return trail
