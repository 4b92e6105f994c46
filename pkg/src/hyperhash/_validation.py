"""Input validation helpers used by the public estimators and geometry kernels."""

from __future__ import annotations

import numbers

import numpy as np


def check_curvature(c) -> float:
    """Validate a curvature parameter for operations that divide by sqrt(c)."""
    if not isinstance(c, numbers.Real) or not np.isfinite(c):
        raise ValueError(f"curvature must be a finite real number, got {c!r}")
    c = float(c)
    if c <= 0.0:
        raise ValueError(f"curvature must be positive, got {c}")
    return c


def check_array(x, name: str = "X", *, ndim: int | None = None) -> np.ndarray:
    """Coerce to a finite float64 array, optionally enforcing dimensionality."""
    arr = np.asarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_same_dim(x: np.ndarray, y: np.ndarray, op: str) -> None:
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(
            f"{op}: operands have mismatched dimension "
            f"({x.shape[-1]} vs {y.shape[-1]})"
        )


def check_in_ball(x: np.ndarray, c: float, name: str = "x") -> np.ndarray:
    """Require every row of ``x`` to lie strictly inside the ball of curvature c."""
    arr = check_array(x, name)
    sq = np.sum(arr * arr, axis=-1)
    if np.any(c * sq >= 1.0):
        bad = float(np.sqrt(np.max(sq)))
        raise ValueError(
            f"{name} is not inside the ball: max norm {bad:.6g} >= {1.0 / np.sqrt(c):.6g}"
        )
    return arr


def check_random_state(seed) -> np.random.Generator:
    """Turn an int seed or Generator into a Generator (fresh default when None)."""
    if seed is None:
        return np.random.default_rng()
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, numbers.Integral):
        return np.random.default_rng(int(seed))
    raise ValueError(f"random_state must be None, an int, or a Generator, got {seed!r}")
