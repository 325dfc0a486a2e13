"""hyperlap: a desk-scale numerical laboratory for harmonic analysis on
hyperbolic 2- and 3-space.

Modules: group_core (matrix kernel and subgroup distances), geometry_tubes
(tubes, beam index grids, counting), special_functions (spherical functions
and the boundary factor), transforms (Harish-Chandra/Helgason transforms,
spectral localizer, Weyl extension), beams (geodesic-beam decomposition),
oscillatory (phase integrals and decay verifiers), hecke_amplifier (exact
tree combinatorics), cli (reproducible experiment runs).
"""

__version__ = "0.1.0"
