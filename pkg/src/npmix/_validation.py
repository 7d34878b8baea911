"""Input validation helpers shared across the package.

These follow the scikit-learn convention of coercing array-likes up front
and failing with a clear message, so downstream numerics can assume clean
float64/int64 arrays.
"""

from __future__ import annotations

import numbers

import numpy as np


def check_scalar(value, name: str, *, positive: bool = False,
                 nonnegative: bool = False) -> float:
    """Coerce ``value`` to a finite float, optionally sign-checked."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    out = float(value)
    if not np.isfinite(out):
        raise ValueError(f"{name} must be finite, got {out!r}")
    if positive and out <= 0.0:
        raise ValueError(f"{name} must be > 0, got {out!r}")
    if nonnegative and out < 0.0:
        raise ValueError(f"{name} must be >= 0, got {out!r}")
    return out


def check_count_samples(X, name: str = "samples") -> np.ndarray:
    """Validate a sample of nonnegative integers.

    Accepts any array-like of shape ``(n,)`` or ``(n, 1)`` and returns a
    1-D int64 array.  Empty input, negative values and non-integers are
    rejected.
    """
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"empty input: {name} must contain at least one value")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.floor(arr)):
            raise ValueError(f"{name} must contain integers")
        arr = arr.astype(np.int64)
    elif arr.dtype.kind in "iu":
        arr = arr.astype(np.int64)
    else:
        raise ValueError(f"{name} must be numeric, got dtype {arr.dtype}")
    if np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative")
    return arr


def check_probability_vector(w, name: str = "weights", tol: float = 1e-12) -> np.ndarray:
    """Validate a vector of nonnegative weights summing to one within ``tol``."""
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D array")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > tol:
        raise ValueError(f"{name} must sum to 1 within {tol}, got {arr.sum()!r}")
    return arr
