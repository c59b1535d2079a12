"""Gradient-kernel matrices, cosine normalization and the checkpoint path kernel."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import DimensionError, ModelSpec, masked_gradient, per_example_gradients

# squared-norm floor below which a gradient counts as degenerate
DEGENERATE_EPS = 1e-24

# rows of per-example gradients materialized at once
BLOCK_SIZE = 128


@dataclass
class KernelMatrix:
    entries: np.ndarray
    kind: str
    query_self: np.ndarray
    basis_self: np.ndarray
    degenerate_queries: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    degenerate_basis: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def n_degenerate(self) -> int:
        return len(self.degenerate_queries) + len(self.degenerate_basis)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in self.entries:
                writer.writerow([f"{v:.17g}" for v in row])


def gradient_kernel(g_i, g_j) -> float:
    """Dot product of two parameter gradients, summed without intermediate rounding."""
    g_i = np.asarray(g_i, dtype=float)
    g_j = np.asarray(g_j, dtype=float)
    if g_i.shape != g_j.shape or g_i.ndim != 1:
        raise DimensionError(f"gradient shapes differ: {g_i.shape} vs {g_j.shape}")
    return math.fsum((g_i * g_j).tolist())


def iter_gradient_blocks(spec: ModelSpec, params, X, mask=None, block_size: int = BLOCK_SIZE):
    """Yield ``(start, G)`` with ``G`` the (masked) gradients of ``X[start:start+len(G)]``."""
    X = np.asarray(X, dtype=float)
    for start in range(0, X.shape[0], block_size):
        G = per_example_gradients(spec, params, X[start:start + block_size])
        if mask is not None:
            G = masked_gradient(G, mask)
        yield start, G


def kernel_matrix(spec: ModelSpec, params, queries, basis, mask=None) -> KernelMatrix:
    """Raw gradient kernel between every query and every basis example.

    Basis gradients are held in memory (``n_basis x P``); query gradients are
    produced in blocks and discarded after their rows are filled, so the full
    query gradient matrix is never stored.
    """
    queries = np.asarray(queries, dtype=float)
    basis = np.asarray(basis, dtype=float)
    if queries.ndim != 2 or basis.ndim != 2:
        raise DimensionError("queries and basis must be 2-d example arrays")
    G_basis = np.concatenate(
        [G for _, G in iter_gradient_blocks(spec, params, basis, mask)], axis=0
    ) if len(basis) else np.zeros((0, spec.n_params))
    basis_self = np.einsum("ij,ij->i", G_basis, G_basis)
    entries = np.empty((len(queries), len(basis)))
    query_self = np.empty(len(queries))
    for start, G in iter_gradient_blocks(spec, params, queries, mask):
        stop = start + len(G)
        entries[start:stop] = G @ G_basis.T
        query_self[start:stop] = np.einsum("ij,ij->i", G, G)
    return KernelMatrix(entries, "raw", query_self, basis_self)


def cosine_normalize(K: KernelMatrix) -> KernelMatrix:
    """Divide each entry by the geometric mean of its two self-kernels.

    Rows or columns whose self-kernel is below ``DEGENERATE_EPS`` are zeroed
    and listed in ``degenerate_queries`` / ``degenerate_basis``.
    """
    if K.kind != "raw":
        raise ValueError("cosine_normalize expects a raw kernel matrix")
    q_ok = K.query_self >= DEGENERATE_EPS
    b_ok = K.basis_self >= DEGENERATE_EPS
    q_scale = np.where(q_ok, 1.0 / np.sqrt(np.where(q_ok, K.query_self, 1.0)), 0.0)
    b_scale = np.where(b_ok, 1.0 / np.sqrt(np.where(b_ok, K.basis_self, 1.0)), 0.0)
    entries = K.entries * q_scale[:, None] * b_scale[None, :]
    return KernelMatrix(
        entries,
        "normalized",
        K.query_self,
        K.basis_self,
        degenerate_queries=np.flatnonzero(~q_ok),
        degenerate_basis=np.flatnonzero(~b_ok),
    )


def normalized_kernel(spec: ModelSpec, params, queries, basis, mask=None) -> KernelMatrix:
    return cosine_normalize(kernel_matrix(spec, params, queries, basis, mask))


def path_kernel_terms(spec: ModelSpec, trail: Sequence[np.ndarray], x_i, x_j, mask=None) -> list[float]:
    """Gradient kernel of the pair at each checkpoint in ``trail``."""
    if len(trail) == 0:
        raise ValueError("checkpoint trail is empty")
    X = np.stack([np.asarray(x_i, dtype=float), np.asarray(x_j, dtype=float)])
    terms = []
    for params in trail:
        G = per_example_gradients(spec, params, X)
        if mask is not None:
            G = masked_gradient(G, mask)
        terms.append(gradient_kernel(G[0], G[1]))
    return terms


def path_kernel(spec: ModelSpec, trail: Sequence[np.ndarray], x_i, x_j, mask=None) -> float:
    """Sum of the gradient kernel over the checkpoints (one term per epoch)."""
    return math.fsum(path_kernel_terms(spec, trail, x_i, x_j, mask))

