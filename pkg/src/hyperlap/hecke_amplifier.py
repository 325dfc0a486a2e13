"""Exact Hecke-operator combinatorics on regular trees.

The radius-a operator T(a) is the indicator of the sphere of radius 2a in the
(q+1)-regular tree.  Products are expanded in the T(c) basis by streaming
enumeration of the sphere via backtrack-free edge labels; coefficients are
exact integers, eigenvalue bookkeeping is exact rational.  The split and
inert settings are the same identity in the single parameter Q (= q or q^2).
"""

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError, ResourceError

DEPTH_CAP = 24
NODE_CAP = 30_000_000


def sphere_size(q: int, a: int) -> int:
    """Vertices at distance 2a from a root in the (q+1)-regular tree."""
    if q < 2 or a < 0:
        raise DomainError("need q >= 2, a >= 0")
    if a == 0:
        return 1
    return (q + 1) * q ** (2 * a - 1)


def sphere_size_bfs(q: int, a: int) -> int:
    """Sphere size by literal breadth-first traversal of edge labels."""
    if a == 0:
        return 1
    if (q + 1) * q ** (2 * a - 1) > 500_000:
        raise ResourceError("BFS oracle restricted to small spheres")
    frontier = [(e,) for e in range(q + 1)]
    for _ in range(2 * a - 1):
        frontier = [w + (e,) for w in frontier for e in range(q)]
    return len(frontier)


@dataclass(frozen=True)
class HeckeCombination:
    """Exact linear combination of basis operators T(a) at one prime power q."""

    q: int
    coeffs: dict  # radius index -> Fraction

    def __post_init__(self):
        if self.q < 2:
            raise DomainError("q must be a prime power >= 2")
        clean = {int(a): Fraction(c) for a, c in self.coeffs.items()
                 if Fraction(c) != 0}
        for a in clean:
            if a < 0:
                raise DomainError("negative radius index")
        object.__setattr__(self, "coeffs", clean)

    def __add__(self, other):
        if self.q != other.q:
            raise DomainError("mismatched residue sizes")
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, Fraction(0)) + c
        return HeckeCombination(self.q, out)

    def scale(self, factor):
        f = Fraction(factor)
        return HeckeCombination(self.q, {a: c * f for a, c in self.coeffs.items()})

    def __eq__(self, other):
        return isinstance(other, HeckeCombination) and self.q == other.q \
            and self.coeffs == other.coeffs

    def mass(self) -> Fraction:
        """Coefficient-weighted total coset count."""
        return sum((c * sphere_size(self.q, a) for a, c in self.coeffs.items()),
                   Fraction(0))

    def l1_norm(self) -> Fraction:
        return sum((abs(c) * sphere_size(self.q, a)
                    for a, c in self.coeffs.items()), Fraction(0))

    def l2_norm_sq(self) -> Fraction:
        """Exact squared L2 norm: the basis indicators are disjoint."""
        return sum((c * c * sphere_size(self.q, a)
                    for a, c in self.coeffs.items()), Fraction(0))


def basis(q: int, a: int) -> HeckeCombination:
    return HeckeCombination(q, {a: Fraction(1)})


def _sphere_leading_zero_counts(q: int, a: int, cap_nodes: int):
    """Tally of leading-zero prefix lengths over the distance-2a sphere, by
    streaming enumeration of backtrack-free labels (root edge in 0..q, later
    edges in 0..q-1)."""
    depth = 2 * a
    if depth == 0:
        return {0: 1}
    total = sphere_size(q, a)
    if total > cap_nodes:
        raise ResourceError(f"sphere has {total} vertices, above the node cap")
    counts = {}
    first = range(q + 1)
    rest = [range(q)] * (depth - 1)
    for word in itertools.product(first, *rest):
        lead = 0
        for e in word:
            if e != 0:
                break
            lead += 1
        counts[lead] = counts.get(lead, 0) + 1
    return counts


def hecke_product(q: int, a: int, b: int, cap_nodes: int = NODE_CAP) -> HeckeCombination:
    """T(a) * T(b) in the T(c) basis by exact path counting: the coefficient of
    T(c) counts sphere-2a vertices at distance 2b from a fixed vertex at
    distance 2c, classified by the length of the shared geodesic prefix."""
    if a < 0 or b < 0:
        raise DomainError("radius indices must be nonnegative")
    if 2 * (a + b) > DEPTH_CAP:
        raise ResourceError(f"product depth {2 * (a + b)} exceeds the cap {DEPTH_CAP}")
    if a == 0:
        return basis(q, b)
    if b == 0:
        return basis(q, a)
    counts = _sphere_leading_zero_counts(q, a, cap_nodes)
    coeffs = {}
    for c in range(abs(a - b), a + b + 1):
        total = 0
        for lead, cnt in counts.items():
            ell = min(lead, 2 * c)
            if (2 * a - ell) + (2 * c - ell) == 2 * b:
                total += cnt
        if total:
            coeffs[c] = Fraction(total)
    return HeckeCombination(q, coeffs)


def product_combinations(u: HeckeCombination, v: HeckeCombination) -> HeckeCombination:
    if u.q != v.q:
        raise DomainError("mismatched residue sizes")
    out = HeckeCombination(u.q, {})
    for a, ca in u.coeffs.items():
        for b, cb in v.coeffs.items():
            out = out + hecke_product(u.q, a, b).scale(ca * cb)
    return out


# ---------------------------------------------------------------------------
# eigenvalue bookkeeping


def _q_param(q: int, regime: str) -> int:
    if regime == "split":
        return q
    if regime == "inert":
        return q * q
    raise DomainError("regime must be split or inert")


def tau2_from_tau1(q: int, tau1, regime: str = "inert") -> Fraction:
    """tau2 = tau1^2 - (1 - 1/Q) tau1 - (1 + 1/Q) with Q = q (split), q^2 (inert)."""
    big_q = _q_param(q, regime)
    t1 = Fraction(tau1)
    return t1 * t1 - (1 - Fraction(1, big_q)) * t1 - (1 + Fraction(1, big_q))


def dichotomy_check(q: int, tau1, regime: str = "inert") -> Fraction:
    """Compute tau2 and assert that tau1, tau2 are not both of size <= 1/4."""
    t1 = Fraction(tau1)
    t2 = tau2_from_tau1(q, t1, regime)
    if abs(t1) <= Fraction(1, 4) and abs(t2) <= Fraction(1, 4):
        raise AssertionError(f"dichotomy violated at q={q}, tau1={t1}, tau2={t2}")
    return t2


@dataclass(frozen=True)
class EigenData:
    """Normalized eigenvalue pair consistent with the degree-2 relation."""

    q: int
    tau1: Fraction
    tau2: Fraction
    regime: str = "inert"

    def __post_init__(self):
        object.__setattr__(self, "tau1", Fraction(self.tau1))
        object.__setattr__(self, "tau2", Fraction(self.tau2))
        expect = tau2_from_tau1(self.q, self.tau1, self.regime)
        if expect != self.tau2:
            raise DomainError(
                f"eigenvalues violate the Hecke relation: expected tau2={expect}")

    @classmethod
    def from_tau1(cls, q: int, tau1, regime: str = "inert"):
        return cls(q, Fraction(tau1), tau2_from_tau1(q, tau1, regime), regime)

    def eigenvalue(self, comb: HeckeCombination) -> Fraction:
        """Exact eigenvalue of a combination supported on radii <= 2."""
        big_q = _q_param(self.q, self.regime)
        evs = {0: Fraction(1),
               1: self.tau1 * Fraction(big_q),
               2: self.tau2 * Fraction(big_q) ** 2}
        out = Fraction(0)
        for a, c in comb.coeffs.items():
            if a not in evs:
                raise DomainError("eigenvalue known only for radii 0..2")
            out += c * evs[a]
        return out


def amplifier_select(data: EigenData) -> HeckeCombination:
    """T(1)/(tau1 Q) when |tau1| > 1/4, else T(2)/(tau2 Q^2); exact eigenvalue 1."""
    big_q = _q_param(data.q, data.regime)
    if abs(data.tau1) > Fraction(1, 4):
        return basis(data.q, 1).scale(Fraction(1, 1) / (data.tau1 * big_q))
    if data.tau2 == 0:
        raise DomainError("degenerate eigen-data: tau2 = 0 with small tau1")
    return basis(data.q, 2).scale(Fraction(1, 1) / (data.tau2 * big_q * big_q))


def amplifier_norms(datas, n_param: int = None):
    """(L1 bound, exact sum of squared L2 norms, a_O) for the normalized
    amplifier sum over the given places.

    The sphere sizes are taken in the tree for the effective parameter Q, so
    split places use the (q+1)-regular tree and inert places the (q^2+1) one.
    a_O equals the L2 mass at the identity, i.e. the same sum.
    """
    datas = list(datas)
    if not datas:
        return 0, Fraction(0), Fraction(0)
    l1_total = Fraction(0)
    l2sq_total = Fraction(0)
    for data in datas:
        big_q = _q_param(data.q, data.regime)
        comb = amplifier_select(data)
        # norms in the Q-regular tree
        l1 = sum((abs(c) * sphere_size(big_q, a) for a, c in comb.coeffs.items()),
                 Fraction(0))
        l2 = sum((c * c * sphere_size(big_q, a) for a, c in comb.coeffs.items()),
                 Fraction(0))
        l1_total += l1
        l2sq_total += l2
    a_o = l2sq_total
    return l1_total, l2sq_total, a_o


def dichotomy_scan(q_values, n_tau: int = 1000):
    """Assert the dichotomy on a rational grid of tau1 in [-1/4, 1/4] for all
    q in q_values and both regimes; returns the scanned count."""
    count = 0
    for q in q_values:
        for k in range(n_tau + 1):
            tau1 = Fraction(-1, 4) + Fraction(k, 2 * n_tau)
            for regime in ("split", "inert"):
                dichotomy_check(q, tau1, regime)
                count += 1
    return count


def product_table(q: int, a: int, b: int) -> dict:
    comb = hecke_product(q, a, b)
    return {"q": q, "a": a, "b": b,
            "coefficients": {str(c): str(v) for c, v in sorted(comb.coeffs.items())}}
