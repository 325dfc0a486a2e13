"""Gauss-Legendre panel rules sized by total-phase estimates.

The oscillatory integrands in this package have phases whose total variation
is known a priori (|s|*t for spherical functions, r*diam for the tube
integrals).  Panels are sized so each one sees a bounded number of
wavelengths; a 16-point rule per panel then integrates to near machine
precision.
"""

from functools import lru_cache

import numpy as np

PANEL_ORDER = 16
# wavelengths one 16-point panel resolves comfortably
_WAVES_PER_PANEL = 1.0


@lru_cache(maxsize=64)
def gl_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panel_rule(a: float, b: float, n_panels: int, order: int = PANEL_ORDER):
    """Composite Gauss-Legendre rule on [a, b] with ``n_panels`` panels.

    Returns (nodes, weights) as flat arrays.
    """
    n_panels = max(1, int(n_panels))
    x, w = gl_nodes(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def panels_for_phase(total_phase: float, min_panels: int = 2,
                     waves_per_panel: float = None) -> int:
    """Panel count for an oscillatory integrand with given total phase (radians)."""
    wpp = _WAVES_PER_PANEL if waves_per_panel is None else waves_per_panel
    waves = abs(total_phase) / (2.0 * np.pi)
    return max(min_panels, int(np.ceil(waves / wpp)) + 1)


def osc_rule(a: float, b: float, total_phase: float, min_panels: int = 2,
             order: int = PANEL_ORDER, waves_per_panel: float = None):
    """Panel rule on [a, b] sized for a phase of total variation ``total_phase``."""
    return panel_rule(a, b, panels_for_phase(total_phase, min_panels,
                                             waves_per_panel), order)


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for n uniformly spaced samples (n odd preferred).

    Falls back to the trapezoid rule on the final interval when n is even.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    w = np.zeros(n)
    m = n if n % 2 == 1 else n - 1
    w[0:m] = 2.0
    w[1:m:2] = 4.0
    w[0] = 1.0
    w[m - 1] = 1.0
    w[:m] *= h / 3.0
    if m < n:
        w[m - 1] += h / 2.0
        w[m] = h / 2.0
    return w
