"""Oscillatory-integral evaluators and decay verifiers.

Covers the tube-phase integral J(r; rho) with its critical point and Hessian,
the plane transform k~ of the spectral localizer with its three sup-norm
regimes, the uniformization function xi, the two-dimensional pair integrals
driving the beam orthogonality estimates, and the radial splitting of the
localizer on 3-space.
"""

from dataclasses import dataclass, field

import numpy as np

from . import group_core as gc
from .cutoffs import b1_narrow, b1_profile, bump, chi0
from .errors import DomainError, ResourceError
from .fitting import DecayFit, loglog_fit
from .quadrature import osc_rule
from .special_functions import spherical_h2_grid, spherical_h3_points
from .transforms import PWKernel

TWO_PI = 2.0 * np.pi


@dataclass
class OscillatoryResult:
    value: complex
    params: dict = field(default_factory=dict)
    n_nodes: int = 0
    est_error: float = None

    @property
    def below_noise(self) -> bool:
        return self.est_error is not None and self.est_error > 0.05 * abs(self.value)


# ---------------------------------------------------------------------------
# the tube phase F and its critical structure


def h2_distance(x, t):
    """Hyperbolic distance of the plane point (x, e^t) from the origin."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    ch = np.cosh(t) + 0.5 * x * x * np.exp(-t)
    return np.arccosh(np.maximum(ch, 1.0))


def phase_F_tilde(x, t, s1, s2, rho):
    """A(exp(s1 X1 + s2 X2) k_rho n(x) a(t)) - rho t (exact evaluation)."""
    g = gc.exp_k(s1, s2) @ gc.k_rho(rho) @ gc.n_of(x) @ gc.a_of(t)
    return gc.iwasawa_A(g) - rho * t


def critical_point_residual(rho: float, step: float = 1e-4):
    """Norm of the finite-difference gradient of the tube phase at the origin,
    plus the (Psi, Theta) values of the critical unitary."""
    if not 0.0 <= rho <= 0.9:
        raise DomainError("rho must lie in [0, 0.9]")
    grad = np.zeros(4)
    for i in range(4):
        p = np.zeros(4)
        p[i] = step
        fp = phase_F_tilde(p[0], p[1] + 0.0, p[2], p[3], rho)
        fm = phase_F_tilde(-p[0], -p[1], -p[2], -p[3], rho)
        grad[i] = (fp - fm) / (2.0 * step)
    psi, theta = gc.psi_theta(gc.k_rho(rho))
    return float(np.linalg.norm(grad)), psi, theta


def gradient_residual_at(point, rho: float, step: float = 1e-4) -> float:
    """Finite-difference gradient norm of the tube phase at a given 4-point."""
    point = np.asarray(point, dtype=float)
    grad = np.zeros(4)
    for i in range(4):
        e = np.zeros(4)
        e[i] = step
        fp = phase_F_tilde(*(point + e), rho)
        fm = phase_F_tilde(*(point - e), rho)
        grad[i] = (fp - fm) / (2.0 * step)
    return float(np.linalg.norm(grad))


def hessian_F(rho: float, step: float = 1e-4):
    """Finite-difference Hessian of the tube phase at the origin and its
    determinant; variable order (x, t, s1, s2)."""
    if not 0.0 <= rho <= 0.9:
        raise DomainError("rho must lie in [0, 0.9]")

    def f(p):
        return phase_F_tilde(p[0], p[1], p[2], p[3], rho)

    h = step
    hess = np.zeros((4, 4))
    f0 = f(np.zeros(4))
    for i in range(4):
        ei = np.zeros(4)
        ei[i] = h
        hess[i, i] = (f(ei) - 2.0 * f0 + f(-ei)) / (h * h)
        for j in range(i + 1, 4):
            ej = np.zeros(4)
            ej[j] = h
            val = (f(ei + ej) - f(ei - ej) - f(-ei + ej) + f(-ei - ej)) / (4.0 * h * h)
            hess[i, j] = hess[j, i] = val
    return hess, float(np.linalg.det(hess))


def d_rho_matrix(rho: float) -> np.ndarray:
    """Reference Hessian: rows/cols ordered (x, t, s1, s2)."""
    r = np.sqrt(1.0 - rho * rho)
    return np.array([
        [-(1.0 - rho), 0.0, 0.0, -2.0],
        [0.0, -(1.0 - rho * rho), -2.0 * r, 0.0],
        [0.0, -2.0 * r, 0.0, 0.0],
        [-2.0, 0.0, 0.0, 0.0],
    ])


# ---------------------------------------------------------------------------
# J(r; rho)


def _b2_profile(x, t, radius: float = 1.0):
    return bump(h2_distance(x, t), radius / 2.0, radius)


def eval_J_rho(r: float, rho: float, method: str = "reduced",
               refine: float = 1.0, node_budget: int = 40_000_000) -> OscillatoryResult:
    """The tube-phase integral at frequency r and slope parameter rho.

    "reduced": the compact-group fiber is integrated in closed form (the
    spherical function), leaving a two-dimensional integral; "full4d" performs
    the literal four-dimensional quadrature over the plane box times the
    two-sphere chart and is affordable only for moderate r.
    """
    if r < 20.0:
        raise DomainError("J(r; rho) evaluator requires r >= 20")
    if not 0.0 <= rho <= 0.9:
        raise DomainError("rho must lie in [0, 0.9]")
    if method == "reduced":
        val, n_nodes = _j_rho_reduced(r, rho, refine)
        val2, _ = _j_rho_reduced(r, rho, refine * 1.5)
        return OscillatoryResult(value=val2, params={"r": r, "rho": rho},
                                 n_nodes=n_nodes, est_error=abs(val - val2))
    if method == "full4d":
        val, n_nodes = _j_rho_full4d(r, rho, refine, node_budget)
        return OscillatoryResult(value=val, params={"r": r, "rho": rho},
                                 n_nodes=n_nodes)
    raise DomainError(f"unknown method {method!r}")


def _j_rho_reduced(r, rho, refine):
    lim = 1.12
    phase = r * (1.0 + rho) * 2.0 * lim * 1.2 * refine
    x, wx = osc_rule(-lim, lim, phase, min_panels=8, waves_per_panel=2.0)
    t, wt = osc_rule(-lim, lim, phase, min_panels=8, waves_per_panel=2.0)
    X = x[:, None]
    T = t[None, :]
    amp = _b2_profile(X, T) * np.exp(-T / 2.0)
    d = h2_distance(X, T)
    vals = amp * spherical_h3_points(r, d) * np.exp(-1j * r * rho * T)
    total = np.sum(vals * wx[:, None] * wt[None, :])
    return complex(total), x.size * t.size


def _j_rho_full4d(r, rho, refine, node_budget):
    lim = 1.12
    phase_xt = r * (1.0 + rho) * 2.0 * lim * 1.2 * refine
    x, wx = osc_rule(-lim, lim, phase_xt, min_panels=8, waves_per_panel=2.0)
    t, wt = osc_rule(-lim, lim, phase_xt, min_panels=8, waves_per_panel=2.0)
    phase_ang = r * np.pi * 1.2 * refine
    vphi, wphi = osc_rule(0.0, np.pi, phase_ang, min_panels=8, waves_per_panel=2.0)
    # the integrand depends on the second angle through cos(psi) only
    psi, wpsi = osc_rule(0.0, np.pi, phase_ang, min_panels=8,
                         waves_per_panel=2.0)
    wpsi = 2.0 * wpsi
    n_total = x.size * t.size * vphi.size * psi.size
    if n_total > node_budget:
        raise ResourceError(f"full4d would need {n_total} nodes; raise the budget "
                            "or use the reduced method")
    X = x[:, None]
    T = t[None, :]
    amp_xt = _b2_profile(X, T) * np.exp(-T / 2.0)  # b2 * e^{t/2} * e^{-t}
    et = np.exp(t)
    emt = np.exp(-t)
    total = 0.0 + 0.0j
    co = np.cos(vphi / 2.0)
    si = np.sin(vphi / 2.0)
    for i, ph in enumerate(vphi):
        # |beta|^2 e^t + |conj(alpha) - conj(beta) x|^2 e^{-t} over (psi, x, t)
        b2v = si[i] * si[i]
        cross = co[i] * si[i] * np.cos(psi)  # Re(conj(alpha) beta-bar x) factor
        mod = (co[i] * co[i])[None, None] - 2.0 * x[None, :, None] * cross[:, None, None] \
            + (x * x)[None, :, None] * b2v
        den = b2v * et[None, None, :] + mod * emt[None, None, :]
        a_val = -np.log(den)
        integrand = amp_xt[None, :, :] * np.exp(a_val) * \
            np.exp(1j * r * (a_val - rho * t[None, None, :]))
        w3 = (wpsi[:, None, None] * wx[None, :, None] * wt[None, None, :])
        total += wphi[i] * np.sin(vphi[i]) * np.sum(integrand * w3)
    total /= 4.0 * np.pi
    return complex(total), n_total


def j_rho_sweep(r_values, rho: float, refine: float = 1.0):
    """|J(r; rho)| over r values plus the r^2-normalized plateau statistics."""
    vals = []
    for r in r_values:
        res = eval_J_rho(float(r), rho, refine=refine)
        vals.append(abs(res.value))
    vals = np.array(vals)
    scaled = vals * np.asarray(r_values, dtype=float) ** 2
    return vals, scaled


# ---------------------------------------------------------------------------
# k~ of the spectral localizer on the plane


def k_tilde_curve(kernel: PWKernel, s_values) -> np.ndarray:
    """Polar quadrature 2 pi int k_lam(t) b1(t) phi_{-s}(t) sinh t dt on a rule
    resolving the joint lam + s oscillation."""
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    t_hi = min(kernel._t_fine[-1], 2.0)
    s_top = float(np.max(np.abs(s_values)))
    t, w = osc_rule(0.0, t_hi, (kernel.lam + s_top) * t_hi * 1.25,
                    min_panels=8, waves_per_panel=2.0)
    kv = kernel._spline(t) * b1_profile(t) * np.sinh(t) * w
    phi = spherical_h2_grid(s_values, t, waves_per_panel=2.0)
    return TWO_PI * (phi @ kv)


def k_tilde(s, kernel: PWKernel) -> complex:
    return complex(k_tilde_curve(kernel, [float(s)])[0])


def ktilde_s_grid(lam: float, betas) -> np.ndarray:
    """Sampling grid for the sup-norm regimes: dense near lam, moderate
    elsewhere, with the regime boundary points of every requested beta."""
    parts = [np.linspace(0.5, lam / 2.0, 80),
             np.linspace(lam / 2.0, 0.85 * lam, 60),
             np.linspace(0.85 * lam, 1.15 * lam, 150),
             np.linspace(1.15 * lam, 1.8 * lam, 40)]
    for beta in betas:
        parts.append(np.array([lam - beta / 4.0, lam + beta / 4.0]))
        parts.append(lam + beta / 4.0 * np.array([-1.02, -1.2, 1.02, 1.2]))
    s = np.unique(np.concatenate(parts))
    return s[s > 0]


def verify_ktilde_regimes(lam: float, betas=(4.0, 16.0, 64.0), eps: float = 1.0,
                          kernel: PWKernel = None, curve=None, s_grid=None):
    """Sup of |k~| in the three regimes for each beta.

    Returns dict with global sup, near sup (|s| <= lam/2), and per-beta far
    sups (s outside the lam +- beta/4 window, s >= lam/2).
    """
    if kernel is None:
        kernel = PWKernel(lam, eps)
    if s_grid is None:
        s_grid = ktilde_s_grid(lam, betas)
    if curve is None:
        curve = k_tilde_curve(kernel, s_grid)
    mags = np.abs(curve)
    out = {
        "lam": lam,
        "s_grid": s_grid,
        "curve": curve,
        "global_sup": float(np.max(mags)),
        "near_sup": float(np.max(mags[s_grid <= lam / 2.0])),
        "far_sup": {},
    }
    for beta in betas:
        sel = (s_grid >= lam / 2.0) & (np.abs(s_grid - lam) >= beta / 4.0)
        out["far_sup"][beta] = float(np.max(mags[sel]))
    return out


# ---------------------------------------------------------------------------
# uniformization function


def uniformization_xi(r: float, omega: float, z: complex, t: float,
                      chart_radius: float = 1.0) -> float:
    """xi = (1 - dA/dt of exp(r X_omega) n(z) a(t)) / r^2 with X_omega the unit
    tangent direction cos(omega) X1 + sin(omega) X2.

    The t-derivative is the Theta value of the Iwasawa unitary (the derivative
    identity for the height along the torus), so no finite differences enter;
    r -> 0 is filled by Richardson extrapolation in r.
    """
    if abs(r) >= chart_radius:
        raise DomainError("r outside the chart radius")
    if abs(r) < 1e-6:
        h = 1e-3
        x1 = uniformization_xi(h, omega, z, t, chart_radius)
        x2 = uniformization_xi(2.0 * h, omega, z, t, chart_radius)
        return (4.0 * x1 - x2) / 3.0
    g = gc.exp_k(r * np.cos(omega), r * np.sin(omega)) @ gc.n_of(z) @ gc.a_of(t)
    _psi, theta = gc.psi_theta(gc.kappa(g))
    return (1.0 - theta) / (r * r)


def xi_grid_min(chart_radius: float = 0.5, c_box: float = 1.0, n: int = 10):
    """min |xi| and max |d^2 xi/dt^2| over an (r, omega, z, t) grid."""
    rs = np.linspace(-chart_radius, chart_radius, n + 1)
    rs = rs[np.abs(rs) > 1e-9]
    omegas = np.linspace(0.0, TWO_PI, n, endpoint=False)
    zs = [complex(a, b) for a in np.linspace(-c_box, c_box, 4)
          for b in np.linspace(-c_box, c_box, 4)]
    ts = np.linspace(-c_box, c_box, 5)
    min_xi = np.inf
    max_d2 = 0.0
    h = 1e-3
    for r in rs:
        for om in omegas[:: max(1, len(omegas) // 6)]:
            for z in zs[::3]:
                for t in ts:
                    x0 = uniformization_xi(r, om, z, t)
                    min_xi = min(min_xi, abs(x0))
                    xp = uniformization_xi(r, om, z, t + h)
                    xm = uniformization_xi(r, om, z, t - h)
                    max_d2 = max(max_d2, abs((xp - 2 * x0 + xm) / (h * h)))
    return float(min_xi), float(max_d2)


def beam_phase_rho(theta: float, x: float, chart_radius: float = 0.3):
    """Beam-induced phase correction rho(t) = A(b_theta n(x) a(t)) - t for the
    pair integrals (vanishes at theta = 0)."""
    def rho_fn(tp):
        return gc.A_bna(theta, x, np.asarray(tp, dtype=float)) - np.asarray(tp, dtype=float)
    return rho_fn


# ---------------------------------------------------------------------------
# two-dimensional pair integrals


def eval_pair_integral(s: float, s1: float, s2: float, g: gc.GroupElement,
                       rho1=None, rho2=None, chi=chi0, refine: float = 1.0,
                       max_dist: float = 3.0) -> OscillatoryResult:
    """J(s, s1, s2, g) = iint chi(t1) chi(t2)
    e^{-i s1 (t1 + rho1(t1)) + i s2 (t2 + rho2(t2))} phi_s(a(-t1) g a(t2)) dt.
    """
    if gc.dist(g, gc.identity()) > max_dist:
        raise DomainError("g outside the configured bound")
    if not (abs(s1 - s) <= abs(s) and abs(s2 - s) <= abs(s)):
        raise DomainError("s1, s2 must lie within the band around s")

    def run(scale):
        phase = (abs(s1) + abs(s)) * 2.0 * 1.25 * scale
        t1, w1 = osc_rule(-1.0, 1.0, phase, min_panels=8, waves_per_panel=2.0)
        phase2 = (abs(s2) + abs(s)) * 2.0 * 1.25 * scale
        t2, w2 = osc_rule(-1.0, 1.0, phase2, min_panels=8, waves_per_panel=2.0)
        ph1 = -s1 * (t1 + (rho1(t1) if rho1 is not None else 0.0))
        ph2 = s2 * (t2 + (rho2(t2) if rho2 is not None else 0.0))
        f1 = chi(t1) * np.exp(1j * ph1) * w1
        f2 = chi(t2) * np.exp(1j * ph2) * w2
        # point a(-t1) g a(t2) . o
        a, b = g.m[0]
        c, d = g.m[1]
        e2 = np.exp(t2)
        den = np.abs(d) ** 2 + np.abs(c) ** 2 * e2 * e2
        z2 = (b * np.conj(d) + a * np.conj(c) * e2 * e2) / den
        tc2 = e2 / den
        total = 0.0 + 0.0j
        chunk = max(1, 4_000_000 // t2.size)
        for i0 in range(0, t1.size, chunk):
            sl = slice(i0, min(i0 + chunk, t1.size))
            em = np.exp(-t1[sl])[:, None]
            zz = em * z2[None, :]
            tt = em * tc2[None, :]
            ch = 1.0 + (np.abs(zz) ** 2 + (tt - 1.0) ** 2) / (2.0 * tt)
            dist = np.arccosh(np.maximum(ch, 1.0))
            total += np.sum(f1[sl][:, None] * f2[None, :]
                            * spherical_h3_points(s, dist))
        return complex(total), t1.size * t2.size

    v1, n1 = run(1.0)
    v2, n2 = run(1.5)
    return OscillatoryResult(value=v2, params={"s": s, "s1": s1, "s2": s2},
                             n_nodes=n2, est_error=abs(v1 - v2))


def pair_integral_decay(g: gc.GroupElement, s_values, beta: float = 2.0,
                        rho1=None, rho2=None) -> DecayFit:
    """Fit |J| against s over the sweep (s1 = s, s2 = s + beta/2)."""
    mags = []
    for s in s_values:
        res = eval_pair_integral(float(s), float(s), float(s) + beta / 2.0, g,
                                 rho1=rho1, rho2=rho2)
        mags.append(max(abs(res.value), 1e-300))
    return loglog_fit(np.asarray(s_values, dtype=float), np.asarray(mags))


# ---------------------------------------------------------------------------
# radial splitting of the localizer on 3-space


@dataclass
class RadialSplit:
    kernel: PWKernel
    beta: float
    eps0: float
    half_plateau: float

    def b1(self, t):
        return b1_narrow(t, self.half_plateau)

    def b2(self, t):
        return bump(t, 1.0, 2.0) - self.b1(t)

    def k1_hat(self, s_values):
        return self.kernel.hat_h3(s_values, cutoff=self.b1)

    def k2_hat(self, s_values):
        return self.kernel.hat_h3(s_values, cutoff=self.b2)

    def k_hat(self, s_values):
        return self.kernel.hat_h3(s_values)


def kn_radial_split(lam: float, beta: float, eps0: float,
                    kernel: PWKernel = None) -> RadialSplit:
    """Split k_lam radially at the scale beta^{-1/2+eps0} (plateau of b1)."""
    if beta <= 1.0:
        raise DomainError("radial split expects beta > 1")
    half_plateau = beta ** (-0.5 + eps0)
    if kernel is None:
        kernel = PWKernel(lam, eps=1.0)
    return RadialSplit(kernel=kernel, beta=float(beta), eps0=float(eps0),
                       half_plateau=float(half_plateau))
