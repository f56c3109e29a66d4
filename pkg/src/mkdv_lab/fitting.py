"""Least-squares slope fits used by the rate diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    r2: float
    stderr: float
    n: int

    def slope_interval(self, confidence: float = 0.95) -> tuple:
        if self.n < 3:
            return (-np.inf, np.inf)
        q = stats.t.ppf(0.5 + confidence / 2, self.n - 2)
        return (self.slope - q * self.stderr, self.slope + q * self.stderr)

    def as_tuple(self) -> tuple:
        return (self.slope, self.r2)


def linear_fit(x, y) -> Fit:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 2:
        raise ValueError("need at least two points for a fit")
    if np.ptp(y) == 0.0:
        return Fit(0.0, float(y[0]), 1.0, 0.0, x.size)
    res = stats.linregress(x, y)
    return Fit(float(res.slope), float(res.intercept), float(res.rvalue**2), float(res.stderr), x.size)


def loglog_fit(t, values) -> Fit:
    """Exponent p of values ~ t^p."""
    t = np.asarray(t, float)
    v = np.asarray(values, float)
    keep = v > 0
    return linear_fit(np.log(t[keep]), np.log(v[keep]))


def tail_loglog_fit(t, values, fraction: float = 0.5) -> Fit:
    """Log-log slope over the last ``fraction`` of the time span."""
    t = np.asarray(t, float)
    sel = t >= t[0] + (1.0 - fraction) * (t[-1] - t[0])
    return loglog_fit(t[sel], np.asarray(values, float)[sel])


def no_growth(t, values, confidence: float = 0.95) -> bool:
    """True unless the log-log slope is positive at the given confidence."""
    fit = loglog_fit(t, values)
    return fit.slope_interval(confidence)[0] <= 0.0
