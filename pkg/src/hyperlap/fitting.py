"""Log-log power-law fits for decay sweeps."""

from dataclasses import dataclass, asdict

import numpy as np


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    intercept: float
    r2: float
    n_points: int

    def as_dict(self):
        return asdict(self)


def loglog_fit(xs, ys) -> DecayFit:
    """Least-squares fit of log|y| = exponent * log x + intercept.

    Zero/negative y values are dropped (they sit below quadrature noise).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = (xs > 0) & (ys > 0) & np.isfinite(ys)
    xs, ys = xs[keep], ys[keep]
    if xs.size < 2:
        raise ValueError("need at least two positive points for a power-law fit")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return DecayFit(float(slope), float(intercept), float(r2), int(xs.size))


def dyadic_envelope(x, y, n_bins: int = 12):
    """Max of |y| over dyadic bins in x; returns (bin centers, bin maxima)."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    keep = x > 0
    x, y = x[keep], y[keep]
    lo, hi = np.log2(x.min()), np.log2(x.max())
    edges = np.linspace(lo, hi, n_bins + 1)
    centers, maxima = [], []
    for i in range(n_bins):
        sel = (np.log2(x) >= edges[i]) & (np.log2(x) <= edges[i + 1])
        if np.any(sel):
            centers.append(2.0 ** ((edges[i] + edges[i + 1]) / 2.0))
            maxima.append(float(y[sel].max()))
    return np.array(centers), np.array(maxima)
