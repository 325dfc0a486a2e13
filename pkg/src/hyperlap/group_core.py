"""SL(2,C) kernel: products, Iwasawa data, boundary action, subgroup distances.

Group elements are raw complex 2x2 unimodular matrices.  All formulas are kept
literal; determinant drift is renormalized lazily.  Conventions:

* upper half-space model, origin o = (0, 1), action by the fractional formula;
* Iwasawa order N * A * K0 with n(z) unipotent upper, a(t) = diag(e^{t/2}, e^{-t/2});
* the norm on sl(2,C) maps [[Z1, Z2], [Z3, -Z1]] to sqrt(|Z1|^2+|Z2|^2+|Z3|^2),
  inducing a left-invariant metric d on the group.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError

DET_TOL = 1e-10
_RENORM_TRIGGER = 1e-12

I2 = np.eye(2, dtype=complex)

X1 = np.array([[0, 1j], [1j, 0]], dtype=complex)
X2 = np.array([[0, -1], [1, 0]], dtype=complex)
X3 = np.array([[1j, 0], [0, -1j]], dtype=complex)
H_GEN = np.array([[0.5, 0], [0, -0.5]], dtype=complex)
X_GEN = np.array([[0, 1], [0, 0]], dtype=complex)

W0 = np.array([[0, 1j], [1j, 0]], dtype=complex)


# ---------------------------------------------------------------------------
# construction


def _renormalize(m: np.ndarray) -> np.ndarray:
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if not np.isfinite(det):
        raise DomainError("non-finite matrix entries")
    if abs(det - 1.0) > _RENORM_TRIGGER:
        if abs(det) < 1e-30:
            raise DomainError("singular matrix cannot be unimodular")
        m = m / np.sqrt(det)
    return m


@dataclass(frozen=True)
class GroupElement:
    """Unimodular complex 2x2 matrix; |det - 1| <= 1e-10 after construction."""

    m: np.ndarray

    def __post_init__(self):
        mm = np.asarray(self.m, dtype=complex).reshape(2, 2)
        mm = _renormalize(mm)
        object.__setattr__(self, "m", mm)
        det = mm[0, 0] * mm[1, 1] - mm[0, 1] * mm[1, 0]
        if abs(det - 1.0) > DET_TOL:
            raise DomainError(f"determinant drifted beyond tolerance: {det}")

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.m @ other.m)

    def inv(self) -> "GroupElement":
        a, b = self.m[0]
        c, d = self.m[1]
        return GroupElement(np.array([[d, -b], [-c, a]]))

    @property
    def entries(self):
        return self.m[0, 0], self.m[0, 1], self.m[1, 0], self.m[1, 1]

    def is_unitary(self, tol: float = 1e-10) -> bool:
        return np.max(np.abs(self.m @ self.m.conj().T - I2)) <= tol


def identity() -> GroupElement:
    return GroupElement(I2.copy())


def n_of(z: complex) -> GroupElement:
    return GroupElement(np.array([[1, z], [0, 1]], dtype=complex))


def a_of(t: float) -> GroupElement:
    e = np.exp(t / 2.0)
    return GroupElement(np.array([[e, 0], [0, 1.0 / e]], dtype=complex))


def k_so2(phi: float) -> GroupElement:
    """Rotation in SO(2) subset SU(2)."""
    c, s = np.cos(phi), np.sin(phi)
    return GroupElement(np.array([[c, s], [-s, c]], dtype=complex))


def b_theta(theta: float) -> GroupElement:
    """Boundary representative b_theta = rotation by theta/2 in SO(2)."""
    return k_so2(theta / 2.0)


def m_of(theta: float) -> GroupElement:
    return GroupElement(np.diag([np.exp(1j * theta), np.exp(-1j * theta)]))


def k_rho(rho: float) -> GroupElement:
    """Unitary critical point of the tube phase at slope parameter rho."""
    a = np.sqrt((1.0 + rho) / 2.0)
    b = 1j * np.sqrt((1.0 - rho) / 2.0)
    return GroupElement(np.array([[a, b], [b, a]]))


def exp_k(r1: float, r2: float) -> GroupElement:
    """exp(r1*X1 + r2*X2): closed form with r = sqrt(r1^2 + r2^2)."""
    r = np.hypot(r1, r2)
    if r < 1e-30:
        sinc = 1.0
    else:
        sinc = np.sin(r) / r
    c = np.cos(r)
    return GroupElement(np.array([
        [c, (1j * r1 - r2) * sinc],
        [(1j * r1 + r2) * sinc, c],
    ]))


def su2(alpha: complex, beta: complex) -> GroupElement:
    """Unitary [[alpha, beta], [-conj(beta), conj(alpha)]] (renormalized)."""
    return GroupElement(np.array([[alpha, beta], [-np.conj(beta), np.conj(alpha)]]))


@dataclass(frozen=True)
class IwasawaCoords:
    z: complex
    t: float
    k: GroupElement

    def reassemble(self) -> GroupElement:
        return n_of(self.z) @ a_of(self.t) @ self.k


@dataclass(frozen=True)
class BoundaryPoint:
    """Point of B = SO(2)/{+-I}, canonical angle in [0, 2*pi)."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % (2.0 * np.pi))

    def element(self) -> GroupElement:
        return b_theta(self.theta)


@dataclass(frozen=True)
class LieVector:
    """Coefficients in the basis (X1, X2, X3, H, X=real unipotent, iX)."""

    x1: float = 0.0
    x2: float = 0.0
    x3: float = 0.0
    h: float = 0.0
    xr: float = 0.0
    xi: float = 0.0

    def matrix(self) -> np.ndarray:
        return (self.x1 * X1 + self.x2 * X2 + self.x3 * X3
                + self.h * H_GEN + (self.xr + 1j * self.xi) * X_GEN)

    def norm(self) -> float:
        return sl2_norm(self.matrix())


# ---------------------------------------------------------------------------
# Iwasawa data


def _check_finite(m: np.ndarray):
    if not np.all(np.isfinite(m)):
        raise DomainError("non-finite matrix entries")


def iwasawa_decompose(g: GroupElement) -> IwasawaCoords:
    """g = n(z) a(t) k with k unitary; z, t from the bottom row, k from kappa."""
    m = g.m
    _check_finite(m)
    a, b = m[0]
    c, d = m[1]
    r2 = abs(c) ** 2 + abs(d) ** 2
    t = -np.log(r2)
    z = (a * np.conj(c) + b * np.conj(d)) / r2
    return IwasawaCoords(z=complex(z), t=float(t), k=kappa(g))


def iwasawa_A(g: GroupElement) -> float:
    """Height A(g): log of the fiber coordinate of g.o."""
    m = g.m
    _check_finite(m)
    return float(-np.log(abs(m[1, 0]) ** 2 + abs(m[1, 1]) ** 2))


def iwasawa_N(g: GroupElement) -> complex:
    m = g.m
    a, b = m[0]
    c, d = m[1]
    r2 = abs(c) ** 2 + abs(d) ** 2
    return complex((a * np.conj(c) + b * np.conj(d)) / r2)


def kappa(g: GroupElement) -> GroupElement:
    """Unitary factor (|c|^2+|d|^2)^{-1/2} [[conj(d), -conj(c)], [c, d]]."""
    m = g.m
    _check_finite(m)
    c, d = m[1]
    r = np.sqrt(abs(c) ** 2 + abs(d) ** 2)
    return GroupElement(np.array([[np.conj(d), -np.conj(c)], [c, d]]) / r)


def act_h3(g: GroupElement, p):
    """Action on the upper half-space point p = (z, t_coord), t_coord > 0."""
    z, tc = complex(p[0]), float(p[1])
    if tc <= 0:
        raise DomainError("fiber coordinate must be positive")
    a, b = g.m[0]
    c, d = g.m[1]
    w = c * z + d
    den = abs(w) ** 2 + abs(c) ** 2 * tc * tc
    z_new = ((a * z + b) * np.conj(w) + a * np.conj(c) * tc * tc) / den
    return complex(z_new), tc / den


def phi_action(g: GroupElement, k: GroupElement) -> GroupElement:
    """Right action Phi_g(k) = kappa(k g); satisfies Phi_{gh} = Phi_h o Phi_g."""
    return kappa(k @ g)


def psi_theta(k: GroupElement):
    """(Psi, Theta) = (alpha*conj(beta) + conj(alpha)*beta, |alpha|^2 - |beta|^2)."""
    if not k.is_unitary(1e-8):
        raise DomainError("psi_theta requires a unitary element")
    alpha, beta = k.m[0]
    psi = alpha * np.conj(beta) + np.conj(alpha) * beta
    theta = abs(alpha) ** 2 - abs(beta) ** 2
    return float(psi.real), float(theta)


# ---------------------------------------------------------------------------
# metric

def sl2_log(m: np.ndarray) -> np.ndarray:
    """Principal logarithm of a unimodular 2x2 matrix (vectorized over leading axes).

    Generic case via log(m) = phi * (m - cosh(phi) I)/sinh(phi) with
    cosh(phi) = tr(m)/2; near tr = +-2 a Cayley-Hamilton power series.
    """
    m = np.asarray(m, dtype=complex)
    tr = m[..., 0, 0] + m[..., 1, 1]
    out = np.empty_like(m)

    phi = np.arccosh(tr / 2.0 + 0j)
    sh = np.sinh(phi)
    generic = np.abs(sh) > 1e-4
    if np.any(generic):
        phig = phi[generic]
        shg = sh[generic]
        mg = m[generic]
        coef = (phig / shg)[..., None, None]
        out[generic] = coef * (mg - np.cosh(phig)[..., None, None] * I2)

    near = ~generic
    if np.any(near):
        mn = m[near]
        trn = tr[near]
        neg = np.real(trn) < 0
        base = np.where(neg[..., None, None], -mn, mn)
        shift = np.where(neg, 1j * np.pi, 0.0)
        e = base - I2
        # log(I+E) by series; Cayley-Hamilton keeps powers of E controlled
        term = e.copy()
        acc = e.copy()
        for k in range(2, 40):
            term = np.einsum("...ij,...jk->...ik", term, e)
            acc = acc + ((-1) ** (k + 1) / k) * term
            if np.max(np.abs(term)) < 1e-18:
                break
        acc[..., 0, 0] += shift
        acc[..., 1, 1] += shift
        out[near] = acc
    return out


def sl2_norm(L: np.ndarray) -> np.ndarray:
    """Norm sqrt(|Z1|^2+|Z2|^2+|Z3|^2) (diagonal averaged, exact when traceless)."""
    L = np.asarray(L, dtype=complex)
    n2 = (np.abs(L[..., 0, 0]) ** 2 + np.abs(L[..., 1, 1]) ** 2) / 2.0 \
        + np.abs(L[..., 0, 1]) ** 2 + np.abs(L[..., 1, 0]) ** 2
    out = np.sqrt(n2)
    return float(out) if out.ndim == 0 else out


def dist_mats(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Left-invariant distance between stacked unimodular matrices."""
    m1 = np.asarray(m1, dtype=complex)
    m2 = np.asarray(m2, dtype=complex)
    inv1 = np.empty_like(m1)
    inv1[..., 0, 0] = m1[..., 1, 1]
    inv1[..., 0, 1] = -m1[..., 0, 1]
    inv1[..., 1, 0] = -m1[..., 1, 0]
    inv1[..., 1, 1] = m1[..., 0, 0]
    rel = np.einsum("...ij,...jk->...ik", inv1, m2)
    return sl2_norm(sl2_log(rel))


def dist(g: GroupElement, h: GroupElement) -> float:
    return float(dist_mats(g.m, h.m))


# ---------------------------------------------------------------------------
# distances to subgroups

def _ma_matrix(theta, t):
    theta = np.asarray(theta, dtype=float)
    t = np.asarray(t, dtype=float)
    w = np.exp(t / 2.0 + 1j * theta)
    m = np.zeros(np.broadcast(theta, t).shape + (2, 2), dtype=complex)
    m[..., 0, 0] = w
    m[..., 1, 1] = 1.0 / w
    return m


def dist_ma_mats(mats: np.ndarray, n_rounds: int = 10) -> np.ndarray:
    """Vectorized d(., MA) for a stack of matrices: warm start from the diagonal
    ratio, then shrinking local grid descent in (theta, t)."""
    mats = np.asarray(mats, dtype=complex)
    flat = mats.reshape(-1, 2, 2)
    a = flat[:, 0, 0]
    d = flat[:, 1, 1]
    ratio = np.where(np.abs(d) < 1e-12, 1.0 + 0j, a / np.where(np.abs(d) < 1e-12, 1.0, d))
    t0 = np.log(np.maximum(np.abs(ratio), 1e-12))
    th0 = np.angle(ratio) / 2.0

    th_grid = np.linspace(0.0, 2.0 * np.pi, 24, endpoint=False)
    best_val = _eval_ma_dist(flat, th0, t0)
    best_th = th0.copy()
    best_t = t0.copy()
    for dt in (-0.6, -0.2, 0.0, 0.2, 0.6):
        for th in th_grid:
            th_arr = np.full(flat.shape[0], th)
            t_arr = t0 + dt
            cand = _eval_ma_dist(flat, th_arr, t_arr)
            upd = cand < best_val
            best_val = np.where(upd, cand, best_val)
            best_th = np.where(upd, th_arr, best_th)
            best_t = np.where(upd, t_arr, best_t)

    win_th = np.full(flat.shape[0], 0.35)
    win_t = np.full(flat.shape[0], 0.35)
    offs = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    for _ in range(n_rounds):
        for i in range(5):
            for j in range(5):
                th = best_th + offs[i] * win_th
                t = best_t + offs[j] * win_t
                cand = _eval_ma_dist(flat, th, t)
                upd = cand < best_val
                best_val = np.where(upd, cand, best_val)
                best_th = np.where(upd, th, best_th)
                best_t = np.where(upd, t, best_t)
        win_th *= 0.4
        win_t *= 0.4
    return best_val.reshape(mats.shape[:-2])


def _eval_ma_dist(flat, theta, t):
    w = np.exp(-t / 2.0 - 1j * theta)
    rel = np.empty_like(flat)
    rel[:, 0, 0] = flat[:, 0, 0] * w
    rel[:, 0, 1] = flat[:, 0, 1] * w
    rel[:, 1, 0] = flat[:, 1, 0] / w
    rel[:, 1, 1] = flat[:, 1, 1] / w
    return sl2_norm(sl2_log(rel))


_SUBGROUPS = ("MA", "MpA", "M", "Mp", "H", "Hp", "K0")


def _subgroup_element(which: str, params) -> np.ndarray:
    if which == "MA":
        theta, t = params
        return (m_of(theta) @ a_of(t)).m
    if which == "M":
        (theta,) = params
        return m_of(theta).m
    if which == "H":
        x, t, phi = params
        return (n_of(x) @ a_of(t) @ k_so2(phi)).m
    raise DomainError(f"unknown primitive subgroup {which}")


def _coarse_params(which: str, g: GroupElement):
    r = dist(g, identity()) + 1.0
    if which == "MA":
        return [np.linspace(0, 2 * np.pi, 16, endpoint=False),
                np.linspace(-r, r, 9)]
    if which == "M":
        return [np.linspace(0, 2 * np.pi, 32, endpoint=False)]
    if which == "H":
        return [np.linspace(-r, r, 7), np.linspace(-r, r, 7),
                np.linspace(0, 2 * np.pi, 12, endpoint=False)]
    raise DomainError(f"unknown primitive subgroup {which}")


def _min_dist_primitive(g: GroupElement, which: str, right: np.ndarray, tol: float) -> float:
    """min over s in subgroup of d(g, s * right): coarse grid then Nelder-Mead."""
    gm = g.m

    def f(p):
        return float(dist_mats(gm, _subgroup_element(which, p) @ right))

    grids = _coarse_params(which, g)
    mesh = np.meshgrid(*grids, indexing="ij")
    pts = np.stack([mm.ravel() for mm in mesh], axis=-1)
    vals = np.array([f(p) for p in pts])
    order = np.argsort(vals)
    best = vals[order[0]]
    best_p = pts[order[0]]
    for idx in order[:3]:
        res = optimize.minimize(f, pts[idx], method="Nelder-Mead",
                                options={"xatol": tol, "fatol": tol * 1e-2,
                                         "maxiter": 400})
        if res.fun < best:
            best, best_p = float(res.fun), res.x
    return float(best)


def dist_to_subgroup(g: GroupElement, which: str, coset: GroupElement = None,
                     tol: float = 1e-6, max_dist: float = 10.0) -> float:
    """Distance from g to a subgroup (optionally to subgroup * coset).

    which: MA, MpA (= M'A), M, Mp (= M'), H (= SL(2,R)), Hp (= H'), K0.
    Grid search + local refinement; only meaningful on bounded g.
    """
    if which not in _SUBGROUPS:
        raise DomainError(f"unknown subgroup {which!r}; expected one of {_SUBGROUPS}")
    if dist(g, identity()) > max_dist:
        raise DomainError("element too far from identity for subgroup distance")
    right = I2 if coset is None else coset.m
    w0m = W0

    if which == "K0":
        # polar factor as warm start, then local search in the 3 su(2) directions
        u, _s, vh = np.linalg.svd(g.m)
        un = u @ vh
        un = un / np.sqrt(np.linalg.det(un))
        gm = g.m

        def f(p):
            k = _expm2(p[0] * X1 + p[1] * X2 + p[2] * X3) @ un
            return float(dist_mats(gm, k @ right))

        res = optimize.minimize(f, np.zeros(3), method="Nelder-Mead",
                                options={"xatol": tol, "fatol": tol * 1e-2,
                                         "maxiter": 600})
        return float(res.fun)

    if which in ("MA", "M", "H"):
        return _min_dist_primitive(g, which, right, tol)
    if which == "MpA":
        return min(_min_dist_primitive(g, "MA", right, tol),
                   _min_dist_primitive(g, "MA", w0m @ right, tol))
    if which == "Mp":
        return min(_min_dist_primitive(g, "M", right, tol),
                   _min_dist_primitive(g, "M", w0m @ right, tol))
    if which == "Hp":
        return min(_min_dist_primitive(g, "H", right, tol),
                   _min_dist_primitive(g, "H", w0m @ right, tol))
    raise AssertionError


def A_bna(theta, x, t):
    """Closed form of the height A(b_theta n(x) a(t)) on the hyperbolic plane
    (vectorized): t - log(cos^2(th/2) + (x^2+e^{2t}) sin^2(th/2) - 2x sin(th/2)cos(th/2))."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    den = c * c + (x * x + np.exp(2.0 * t)) * s * s - 2.0 * x * s * c
    return t - np.log(den)


def act_h2_mobius(mat, x, t):
    """Action of a real unimodular 2x2 matrix on plane points (x, e^t);
    returns new Iwasawa coordinates (x', t')."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    z = x + 1j * np.exp(t)
    a, b = mat[0, 0].real, mat[0, 1].real
    c, d = mat[1, 0].real, mat[1, 1].real
    w = (a * z + b) / (c * z + d)
    return w.real, np.log(w.imag)


def random_element(rng, scale: float = 1.0) -> GroupElement:
    """exp of a random sl(2,C) vector of the given norm scale."""
    v = rng.standard_normal(6) * scale
    mat = (v[0] * X1 + v[1] * X2 + v[2] * X3 + v[3] * H_GEN
           + (v[4] + 1j * v[5]) * X_GEN)
    return GroupElement(_expm2(mat))


def _expm2(mat: np.ndarray) -> np.ndarray:
    """exp of a traceless 2x2 matrix: cosh(mu) I + sinh(mu)/mu * mat, mu^2 = -det."""
    mu2 = -(mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0])
    mu = np.sqrt(mu2 + 0j)
    if abs(mu) < 1e-8:
        s = 1.0 + mu2 / 6.0
        c = 1.0 + mu2 / 2.0
    else:
        s = np.sinh(mu) / mu
        c = np.cosh(mu)
    return c * I2 + s * mat
