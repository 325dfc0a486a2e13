"""Geodesic-beam decomposition of band-limited plane functions.

A band-limited phi is cut into pieces phi_{m,n} localized to one boundary
interval (index m) and one horocyclic offset interval (index n); each piece
concentrates near the geodesic b_m n(x_n) l.  The boundary partition tau_m and
the offset partition eta_n are exact partitions of unity built from one
smoothstep bump, so the reconstruction sum telescopes identically.
"""

from dataclasses import dataclass, field

import numpy as np

from . import group_core as gc
from .cutoffs import smoothstep
from .errors import DomainError
from .geometry_tubes import BeamGrid, build_beam_grid
from .quadrature import simpson_weights
from .transforms import (SampledH2Function, SpectralFunction, spectral_l2_norm,
                         synthesize_h2)


def bump_eta(x):
    """Even bump: 1 on [-1/3, 1/3], supported in [-2/3, 2/3], with
    sum_k eta(x + k) = 1 identically."""
    x = np.abs(np.asarray(x, dtype=float))
    return smoothstep(3.0 * (2.0 / 3.0 - x))


def tau_m_values(grid: BeamGrid, m: int, theta):
    """Boundary partition member m evaluated at angles theta."""
    theta = np.asarray(theta, dtype=float)
    rel = (theta - grid.theta_centers[m] + np.pi) % (2.0 * np.pi) - np.pi
    return bump_eta(grid.n1 * rel / (2.0 * np.pi))


def eta_n_values(grid: BeamGrid, n: int, x):
    """Offset partition member n at horocyclic coordinates x.

    The translates step by the center spacing 4/n2, so the partition property
    forces the argument scaling n2 (x - x_n) / 4; the support is then 4/3 of
    the covering interval J_n.
    """
    x = np.asarray(x, dtype=float)
    return bump_eta(grid.n2 * (x - grid.x_centers[n]) / 4.0)


@dataclass
class ChiSpec:
    """Product cutoff chi(x, t) supported strictly inside the unit square."""

    plateau: float = 0.5
    support: float = 0.95

    def __call__(self, x, t):
        from .cutoffs import bump

        return bump(x, self.plateau, self.support) * bump(t, self.plateau, self.support)


@dataclass
class BeamFamily:
    grid: BeamGrid
    beams: dict
    band: tuple
    x_grid: np.ndarray
    t_grid: np.ndarray
    chi_phi: np.ndarray = None          # reference chi * phi on the grid
    phi_l2: float = None                # frequency-side L2 norm of phi
    recon_residual: float = None
    meta: dict = field(default_factory=dict)

    def measure_weights(self):
        wx = simpson_weights(self.x_grid.size, float(self.x_grid[1] - self.x_grid[0]))
        wt = simpson_weights(self.t_grid.size, float(self.t_grid[1] - self.t_grid[0]))
        return np.outer(wx, wt * np.exp(-self.t_grid))

    def beam_l2(self):
        """L2 norms of the individual beams (hyperbolic measure)."""
        w = self.measure_weights()
        return {key: float(np.sqrt(np.sum(np.abs(arr) ** 2 * w)))
                for key, arr in self.beams.items()}

    def beam_l1(self):
        w = self.measure_weights()
        return {key: float(np.sum(np.abs(arr) * w))
                for key, arr in self.beams.items()}

    def square_sum_constant(self) -> float:
        """C with sum ||phi_{m,n}||^2 = C ||phi||^2."""
        norms = self.beam_l2()
        return sum(v * v for v in norms.values()) / self.phi_l2 ** 2


def default_beam_axes(lam: float, beta: float, extent: float = 1.0):
    step = min(0.5 * lam ** -0.5 * beta ** 0.5, 1e-2)
    n = int(np.ceil(extent / step))
    axis = np.linspace(-n * step, n * step, 2 * n + 1)
    return axis, axis.copy()


def beam_decompose(phi: SpectralFunction, lam: float, beta: float, eps1: float,
                   c2: float, chi: ChiSpec = None, x_grid=None, t_grid=None,
                   refine: float = 1.0, compute_reference: bool = True) -> BeamFamily:
    """Cut chi * phi into geodesic beams on a plane sample grid.

    phi_{m,n}(z) = chi(z) eta_n(b_m^{-1} z) F^{-1}(phi tau_m)(z); one boundary
    synthesis per m is shared by all n.  The reconstruction reference is the
    same synthesis at doubled resolution, summed over m.
    """
    lo, hi = phi.band
    if not (0 < lo < hi):
        raise DomainError("band must be positive")
    if chi is None:
        chi = ChiSpec()
    grid = build_beam_grid(lam, beta, eps1)
    if x_grid is None or t_grid is None:
        x_grid, t_grid = default_beam_axes(lam, beta)
    x_grid = np.asarray(x_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)

    chi_vals = chi(x_grid[:, None], t_grid[None, :])

    halfw = grid.theta_halfwidth
    beams = {}
    recon = np.zeros((x_grid.size, t_grid.size), dtype=complex)
    reference = np.zeros_like(recon) if compute_reference else None

    for m in range(grid.n1):
        th_c = grid.theta_centers[m]
        window = (th_c - halfw, th_c + halfw)
        f_m = synthesize_h2(phi, x_grid, t_grid, c2, theta_window=window,
                            weight_fn=lambda th, mm=m: tau_m_values(grid, mm, th),
                            refine=refine)
        if compute_reference:
            f_m_ref = synthesize_h2(phi, x_grid, t_grid, c2, theta_window=window,
                                    weight_fn=lambda th, mm=m: tau_m_values(grid, mm, th),
                                    refine=2.0 * refine)
            reference += f_m_ref.values
        # rotated horocyclic coordinate of each grid point
        bm_inv = gc.b_theta(-th_c).m.real
        x_rot, _t_rot = gc.act_h2_mobius(bm_inv, x_grid[:, None], t_grid[None, :])
        fm_chi = chi_vals * f_m.values
        recon += fm_chi
        for n in range(grid.n2 + 1):
            beam = fm_chi * eta_n_values(grid, n, x_rot)
            if np.max(np.abs(beam)) > 0:
                beams[(m, n)] = beam

    fam = BeamFamily(grid=grid, beams=beams, band=phi.band, x_grid=x_grid,
                     t_grid=t_grid, chi_phi=recon,
                     phi_l2=spectral_l2_norm(phi, c2))
    if compute_reference:
        ref_chi = chi_vals * reference
        num = float(np.max(np.abs(recon - ref_chi)))
        den = float(np.max(np.abs(ref_chi)))
        fam.recon_residual = num / max(den, 1e-300)
        # also verify the beam sum telescopes onto the reconstruction
        s = np.zeros_like(recon)
        for arr in beams.values():
            s += arr
        fam.meta["partition_residual"] = float(
            np.max(np.abs(s - recon)) / max(den, 1e-300))
    return fam


def classify_beams(family: BeamFamily, delta: float, constant: float = None):
    """Split the index set by the norm threshold ||phi_{m,n}||^2 >=
    delta * C * ||phi||^2 and assert the delta^{-1} cardinality bound."""
    if not 0 < delta:
        raise DomainError("delta must be positive")
    c = family.square_sum_constant() if constant is None else float(constant)
    norms = family.beam_l2()
    thr = delta * c * family.phi_l2 ** 2
    big = {k for k, v in norms.items() if v * v >= thr}
    small = set(norms) - big
    if len(big) > np.ceil(1.0 / delta):
        raise AssertionError(
            f"large-norm family exceeds the 1/delta bound: {len(big)} > 1/{delta}")
    return big, small


def beam_l1_l2(family: BeamFamily):
    """Per-beam L1/L2 ratios (0 for zero beams)."""
    l1 = family.beam_l1()
    l2 = family.beam_l2()
    return {k: (l1[k] / l2[k] if l2[k] > 0 else 0.0) for k in l1}


def max_l1_l2_ratio(family: BeamFamily) -> float:
    r = beam_l1_l2(family)
    return max(r.values()) if r else 0.0


def random_band_spectral(lam: float, beta: float, rng, n_theta_modes: int = 8,
                         n_s: int = 33, n_b: int = 128) -> SpectralFunction:
    """Random smooth band-limited spectral function: Gaussian s-profiles times
    a trigonometric polynomial in the boundary angle (exactly representable on
    the stored grid, so boundary interpolation is exact)."""
    sg = np.linspace(lam - beta, lam + beta, n_s)
    th = np.linspace(0.0, 2.0 * np.pi, n_b, endpoint=False)
    vals = np.zeros((n_s, n_b), dtype=complex)
    for n in range(-n_theta_modes, n_theta_modes + 1):
        center = lam + 0.3 * beta * rng.uniform(-1, 1)
        width = beta * rng.uniform(0.3, 0.6)
        coef = rng.standard_normal() + 1j * rng.standard_normal()
        prof = np.exp(-((sg - center) / width) ** 2)
        vals += coef * np.outer(prof, np.exp(1j * n * th))
    return SpectralFunction(sg, th, vals, band=(lam - beta, lam + beta))
