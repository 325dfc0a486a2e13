"""Smooth cutoff profiles.

The estimates verified here only require the cutoffs to exist with prescribed
plateau/support; we fix one concrete C-infinity family built from the standard
exp(-1/u) smoothstep.  Fitted constants (never exponents) depend on this
choice.
"""

import numpy as np


def _g(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smoothstep(u):
    """C-infinity monotone step: 0 for u <= 0, 1 for u >= 1, and
    smoothstep(u) + smoothstep(1-u) = 1 exactly."""
    u = np.asarray(u, dtype=float)
    a = _g(u)
    b = _g(1.0 - u)
    return a / (a + b + (a + b == 0.0))


def bump(x, plateau: float, support: float):
    """Even C-infinity bump: 1 on |x| <= plateau, 0 on |x| >= support."""
    if not 0.0 < plateau < support:
        raise ValueError("need 0 < plateau < support")
    x = np.abs(np.asarray(x, dtype=float))
    return smoothstep((support - x) / (support - plateau))


def chi0(x):
    """Standard time cutoff: supported in [-1, 1], equal to 1 on [-1/2, 1/2]."""
    return bump(x, 0.5, 1.0)


def b0_profile(t):
    """Radial cutoff: 1 on [-1, 1], vanishing outside [-2, 2]."""
    return bump(t, 1.0, 2.0)


def b1_profile(t):
    """Same shape as b0; used to localize polar integrals to [-2, 2]."""
    return bump(t, 1.0, 2.0)


def b1_narrow(t, half_plateau: float):
    """Plateau [-h, h], support [-2h, 2h] (radial splitting of the spectral kernel)."""
    return bump(t, half_plateau, 2.0 * half_plateau)


def band_taper(s, lam: float, beta: float):
    """Even taper: 1 on  |s|-lam| <= beta/4, supported in ||s|-lam| <= beta/2."""
    u = np.abs(np.abs(np.asarray(s, dtype=float)) - lam)
    return bump(u, beta / 4.0, beta / 2.0)


def radial_bump_h(dist, radius: float = 1.0):
    """Rotation-invariant bump on a hyperbolic space given the distance to the
    origin: 1 inside radius/2, 0 outside radius."""
    return bump(dist, radius / 2.0, radius)
