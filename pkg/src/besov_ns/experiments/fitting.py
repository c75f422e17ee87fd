"""Ordinary least-squares rate fitting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_rate(xs, ys) -> FitResult:
    """Fit ys = slope * xs + intercept by least squares."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    if x.size < 3:
        raise ValueError(f"rate fit needs at least 3 points, got {x.size}")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise ValueError("rate fit needs finite data")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx <= 1e-300 * max(1.0, float(np.abs(x).max()) ** 2) or np.unique(x).size < 2:
        raise ValueError("degenerate xs: all abscissae coincide")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(resid @ resid)
    if ss_tot == 0.0 or ss_res <= 1e-28 * max(ss_tot, 1e-300):
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return FitResult(slope, intercept, r2, int(x.size))
