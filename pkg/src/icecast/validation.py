"""Input validation helpers for the estimator API."""

from __future__ import annotations

import numpy as np


def check_series(y) -> np.ndarray:
    """Coerce to a 1-d float array; NaN marks gap days, infinities are
    rejected. Accepts lists, tuples, Series-likes and column vectors."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 2 and y.shape[1] == 1:
        y = y.ravel()
    if y.ndim != 1:
        raise ValueError(f"series must be 1-dimensional, got shape {y.shape}")
    if y.size == 0:
        raise ValueError("series is empty")
    if np.isinf(y).any():
        raise ValueError("series contains infinite values")
    return y


def check_horizon(horizon) -> int:
    h = int(horizon)
    if h != horizon or h < 1:
        raise ValueError(f"horizon must be a positive integer, got {horizon!r}")
    return h
