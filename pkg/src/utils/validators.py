"""
Input validation shared by the numerical modules.
"""
from typing import Any

import numpy as np

from src.errors import DimensionError


def as_vector(v: Any, dim: int, name: str = "v") -> np.ndarray:
    """
    Convert an array-like to a complex vector of the expected dimension.

    Args:
        v: Array-like input
        dim: Required length
        name: Argument name used in the error message

    Returns:
        A one-dimensional complex128 array (a copy)
    """
    arr = np.array(v, dtype=np.complex128)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise DimensionError(f"{name} has shape {arr.shape}, expected ({dim},)")
    return arr


def require_positive_int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def require_nonneg_int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)


def relative(value: float, scale: float) -> float:
    """Return value/scale, or value itself when the scale vanishes."""
    return float(value / scale) if scale > 0 else float(value)
