"""Map- and count-level comparison metrics."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import stats

from .errors import ParameterError


def _values(obj):
    v = getattr(obj, "values", obj)
    return np.asarray(v, dtype=np.float64)


def _paired(a, b):
    va, vb = _values(a), _values(b)
    if va.shape != vb.shape:
        raise ParameterError(f"shape mismatch {va.shape} vs {vb.shape}")
    return va, vb


def map_mse(a, b) -> float:
    """Mean squared pixelwise difference."""
    va, vb = _paired(a, b)
    return float(np.mean((va - vb) ** 2))


def map_mae(a, b) -> float:
    """Mean absolute pixelwise difference."""
    va, vb = _paired(a, b)
    return float(np.mean(np.abs(va - vb)))


def count_error(dmap, true_count) -> float:
    """Absolute difference between the map total and the true head count."""
    total = dmap.total_count() if hasattr(dmap, "total_count") else math.fsum(
        float(s) for s in _values(dmap).sum(axis=1)
    )
    return abs(total - float(true_count))


def spearman(xs, ys) -> float:
    """Spearman rank correlation; NaN when either sequence is constant."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ParameterError(f"shape mismatch {xs.shape} vs {ys.shape}")
    if len(xs) < 2:
        return float("nan")
    with warnings.catch_warnings():
        # constant input is a documented NaN case, not worth a warning
        warnings.simplefilter("ignore", stats.ConstantInputWarning)
        return float(stats.spearmanr(xs, ys)[0])
