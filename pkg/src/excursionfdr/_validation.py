"""Input checks shared by the estimator front end."""

from __future__ import annotations

import numbers

import numpy as np

__all__ = ["check_stack_array", "check_mask_array", "check_level", "check_alpha"]


def check_stack_array(X) -> np.ndarray:
    """Coerce X to a float64 stack of shape (n, *dims) with 1-3 lattice axes."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim < 2 or arr.ndim > 4:
        raise ValueError(
            f"X must have shape (n_samples, *lattice_dims) with 1-3 lattice axes, "
            f"got ndim={arr.ndim}"
        )
    if arr.shape[0] < 2:
        raise ValueError(f"need at least 2 samples to estimate a standard deviation, got {arr.shape[0]}")
    if min(arr.shape) < 1:
        raise ValueError(f"X has an empty axis: shape {arr.shape}")
    return arr


def check_mask_array(mask, dims: tuple[int, ...]) -> np.ndarray | None:
    if mask is None:
        return None
    arr = np.asarray(mask)
    if arr.shape != tuple(dims):
        raise ValueError(f"mask shape {arr.shape} does not match lattice dims {tuple(dims)}")
    if arr.dtype != np.bool_:
        unique = np.unique(arr)
        if not np.isin(unique, (0, 1)).all():
            raise ValueError("mask entries must be boolean (or 0/1)")
    return arr.astype(bool)


def check_level(c) -> float:
    if not isinstance(c, numbers.Real) or not np.isfinite(c):
        raise ValueError(f"threshold level c must be a finite real number, got {c!r}")
    return float(c)


def check_alpha(alpha) -> float:
    if not isinstance(alpha, numbers.Real) or not 0.0 < float(alpha) < 1.0:
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha!r}")
    return float(alpha)
