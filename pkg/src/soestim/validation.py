"""Input coercion helpers.

Every public entry point funnels array arguments through these so that
shape and dtype errors surface with a consistent vocabulary instead of
leaking numpy internals.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, ZeroColumnError


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a 2-d complex128 ndarray.

    Accepts anything array-like with real or complex entries. Raises
    DimensionMismatch if the result is not two-dimensional and ValueError
    if it contains non-finite entries.
    """
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-d, got ndim={arr.ndim}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_complex_vector(a, name: str = "vector") -> np.ndarray:
    """Return ``a`` as a 1-d complex128 ndarray."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-d, got ndim={arr.ndim}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def require_same_columns(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(
            f"column counts differ: {a.shape[1]} vs {b.shape[1]}"
        )


def require_no_zero_columns(a: np.ndarray, name: str = "matrix") -> None:
    # max modulus, not the 2-norm: squaring huge entries would overflow
    peaks = np.abs(a).max(axis=0) if a.size else np.zeros(a.shape[1])
    if np.any(peaks == 0.0):
        j = int(np.argmin(peaks))
        raise ZeroColumnError(f"{name} has a zero column at index {j}")
