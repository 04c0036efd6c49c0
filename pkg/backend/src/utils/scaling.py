"""Feature scaling shared by the clustering and cover routines."""

from __future__ import annotations

import numpy as np

from backend.src.utils.constants import ZERO_RANGE_FILL


def minmax_normalize(values: np.ndarray) -> np.ndarray:
    """Scale every column of a 2-D array to [0, 1].

    Columns with zero range map to ``ZERO_RANGE_FILL``.
    """
    values = np.asarray(values, dtype=float)
    lo: np.ndarray = values.min(axis=0)
    span: np.ndarray = values.max(axis=0) - lo
    flat: np.ndarray = span <= 0
    out: np.ndarray = (values - lo) / np.where(flat, 1.0, span)
    out[:, flat] = ZERO_RANGE_FILL
    return out


def series_ranges(values: np.ndarray) -> np.ndarray:
    """Per-column max - min, with zero ranges replaced by 1."""
    values = np.asarray(values, dtype=float)
    span: np.ndarray = values.max(axis=0) - values.min(axis=0)
    return np.where(span > 0, span, 1.0)
