"""Least-squares fit of the basis expansion, prediction and scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DimensionError

RCOND = 1e-10


@dataclass
class RegressionFit:
    alpha: np.ndarray
    rank: int
    singular_value_ratio: float
    ridge_used: float
    degenerate_columns: int


@dataclass
class EvalReport:
    sse: float
    accuracy: float
    threshold: float


def _entries(K) -> np.ndarray:
    return np.asarray(getattr(K, "entries", K), dtype=float)


def fit(K, y, ridge: float = 0.0, rcond: float = RCOND) -> RegressionFit:
    """Minimize ``|y - K alpha|^2 + ridge |alpha|^2`` through a thin SVD of ``K``.

    Singular values below ``rcond * s_max`` are discarded, so rank-deficient
    designs give the minimum-norm solution instead of blowing up.
    ``singular_value_ratio`` is ``s_min / s_max`` over all singular values.
    """
    A = _entries(K)
    y = np.asarray(y, dtype=float).reshape(-1)
    if A.ndim != 2 or A.shape[1] < 1:
        raise DimensionError(f"design matrix must be 2-d with at least one column, got {A.shape}")
    if A.shape[0] != y.shape[0]:
        raise DimensionError(f"{A.shape[0]} kernel rows but {y.shape[0]} targets")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite entries in kernel matrix or targets")

    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    s_max = s[0] if s.size else 0.0
    keep = s > rcond * s_max if s_max > 0 else np.zeros_like(s, dtype=bool)
    filt = np.zeros_like(s)
    filt[keep] = s[keep] / (s[keep] ** 2 + ridge)
    alpha = Vt.T @ (filt * (U.T @ y))
    return RegressionFit(
        alpha=alpha,
        rank=int(keep.sum()),
        singular_value_ratio=float(s[-1] / s_max) if s_max > 0 else 0.0,
        ridge_used=float(ridge),
        degenerate_columns=int(np.sum(~A.any(axis=0))),
    )


def predict(K, fit: RegressionFit) -> np.ndarray:
    A = _entries(K)
    if A.ndim != 2 or A.shape[1] != fit.alpha.shape[0]:
        raise DimensionError(f"kernel has shape {A.shape}, fit has {fit.alpha.shape[0]} coefficients")
    return A @ fit.alpha


def evaluate(preds, y, threshold: float = 0.5) -> EvalReport:
    """Sum of squared errors and thresholded accuracy; ``pred == threshold`` is class 0."""
    preds = np.asarray(preds, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if preds.shape != y.shape:
        raise DimensionError(f"{preds.shape[0]} predictions but {y.shape[0]} labels")
    sse = float(np.sum((y - preds) ** 2))
    acc = float(np.mean((preds > threshold) == (y == 1))) if y.size else 0.0
    return EvalReport(sse=sse, accuracy=acc, threshold=threshold)
