"""Ordinary least-squares line fits used for log-log rate estimates."""

from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .errors import FitError


class LineFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def fit_slope(points: Sequence[Tuple[float, float]]) -> LineFit:
    """Fit ``y = slope * x + intercept`` by ordinary least squares.

    Requires at least two points with distinct ``x``.  ``r2`` is 1.0 when
    the data have no spread in ``y``.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise FitError("need at least two (x, y) pairs")
    if not np.all(np.isfinite(arr)):
        raise FitError("non-finite values in fit data")
    x, y = arr[:, 0], arr[:, 1]
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx <= 1e-300 or np.ptp(x) == 0.0:
        raise FitError("x values are all equal")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    syy = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if syy == 0.0 else 1.0 - float(resid @ resid) / syy
    return LineFit(slope, intercept, r2)


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> LineFit:
    """Fit ``log y`` against ``log x``; both must be strictly positive."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise FitError("log-log fit needs strictly positive data")
    return fit_slope(np.column_stack([np.log(x), np.log(y)]))
