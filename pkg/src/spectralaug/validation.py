"""Input validation helpers.

Feature maps are plain 2-D float64 arrays; spectra are 1-D arrays of
non-negative values sorted non-increasing.  These helpers normalise
array-likes into that canonical form and reject anything that violates
the invariants (NaN/Inf entries, empty axes, unsorted spectra).
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, ValidationError


def check_feature_map(x, name: str = "feature map") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got ndim={arr.ndim}")
    n, d = arr.shape
    if n < 1 or d < 1:
        raise ValidationError(f"{name} must have at least one row and one column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return np.ascontiguousarray(arr)


def check_vector(x, length: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size < 1:
        raise ValidationError(f"{name} must be non-empty")
    if length is not None and arr.size != length:
        raise DimensionMismatch(f"{name} must have length {length}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return arr


def check_spectrum(values, sorted_required: bool = True, name: str = "spectrum") -> np.ndarray:
    """Validate singular values: finite, non-negative, optionally non-increasing."""
    arr = check_vector(values, name=name)
    if np.any(arr < 0):
        raise ValidationError(f"{name} must be non-negative")
    if sorted_required and np.any(np.diff(arr) > 0):
        raise ValidationError(f"{name} must be sorted in non-increasing order")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "matrices") -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"{what} must share a shape: {a.shape} vs {b.shape}")


def check_square(a: np.ndarray, name: str = "matrix") -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {a.shape}")
