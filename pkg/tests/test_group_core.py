import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperlap import group_core as gc
from hyperlap.errors import DomainError

# frozen by one geodesic-integration run: the torus generator has norm 1/2
DIST_E_A1 = 0.5
# frozen from a dense-grid sweep: d(n(iy), H') = c|y| + O(y^2)
C_NIY_HP = 1.0


def rand_elem(rng, scale=1.0):
    return gc.random_element(rng, scale)


class TestIwasawa:
    def test_identity(self):
        iw = gc.iwasawa_decompose(gc.identity())
        assert abs(iw.z) < 1e-14 and abs(iw.t) < 1e-14
        assert np.allclose(iw.k.m, np.eye(2))

    def test_construction_own_inverse(self):
        g = gc.n_of(1 + 1j) @ gc.a_of(0.5)
        iw = gc.iwasawa_decompose(g)
        assert abs(iw.z - (1 + 1j)) < 1e-12
        assert abs(iw.t - 0.5) < 1e-12
        assert np.allclose(iw.k.m, np.eye(2), atol=1e-12)

    def test_reassembly_random(self, rng):
        for _ in range(1000):
            g = rand_elem(rng, rng.uniform(0.1, 2.0))
            iw = gc.iwasawa_decompose(g)
            assert np.max(np.abs(iw.reassemble().m - g.m)) <= 1e-10
            assert iw.k.is_unitary(1e-10)

    def test_A_matches_decomposition(self, rng):
        for _ in range(100):
            g = rand_elem(rng, 1.0)
            assert abs(gc.iwasawa_A(g) - gc.iwasawa_decompose(g).t) <= 1e-10

    def test_A_of_torus(self):
        for t in (-1.0, 0.0, 2.0):
            assert abs(gc.iwasawa_A(gc.a_of(t)) - t) < 1e-12

    def test_A_bna_closed_form_grid(self):
        thetas = np.linspace(0.1, 2 * np.pi - 0.1, 10)
        xs = np.linspace(-2, 2, 10)
        ts = np.linspace(-1, 1, 10)
        for th in thetas:
            for x in xs:
                for t in ts:
                    g = gc.b_theta(th) @ gc.n_of(x) @ gc.a_of(t)
                    assert abs(gc.iwasawa_A(g) - gc.A_bna(th, x, t)) < 1e-10

    def test_height_composition_formula(self, rng):
        # A(g0 n(z) a(t)) from the Iwasawa data of g0
        for _ in range(50):
            g0 = rand_elem(rng, 0.8)
            iw = gc.iwasawa_decompose(g0)
            alpha, beta = iw.k.m[0]
            z = complex(rng.normal(), rng.normal())
            t = rng.normal()
            lhs = gc.iwasawa_A(g0 @ gc.n_of(z) @ gc.a_of(t))
            rhs = iw.t + t - np.log(abs(alpha) ** 2 + abs(beta) ** 2
                                    * (abs(z) ** 2 + np.exp(2 * t))
                                    - alpha * np.conj(beta) * z
                                    - np.conj(alpha) * beta * np.conj(z)).real
            assert abs(lhs - rhs) < 1e-9

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            gc.iwasawa_A(gc.GroupElement(np.array([[1, 0], [0, 1]], dtype=complex)
                                         * np.array([[1, np.inf], [0, 1]])))


class TestKappa:
    def test_identity(self):
        assert np.allclose(gc.kappa(gc.identity()).m, np.eye(2))

    def test_bottom_row_proportional(self, rng):
        for _ in range(50):
            g = rand_elem(rng, 1.0)
            k = gc.kappa(g)
            c, d = g.m[1]
            r = np.sqrt(abs(c) ** 2 + abs(d) ** 2)
            assert abs(k.m[1, 0] - c / r) < 1e-12
            assert abs(k.m[1, 1] - d / r) < 1e-12

    def test_matches_decomposition(self, rng):
        for _ in range(200):
            g = rand_elem(rng, 1.0)
            assert np.max(np.abs(gc.kappa(g).m - gc.iwasawa_decompose(g).k.m)) <= 1e-10


class TestAction:
    def test_identity_fixes(self, rng):
        p = (0.3 + 0.2j, 1.7)
        z, t = gc.act_h3(gc.identity(), p)
        assert abs(z - p[0]) < 1e-14 and abs(t - p[1]) < 1e-14

    def test_diagonal_action(self):
        z, t = gc.act_h3(gc.a_of(0.7), (0.0, 1.0))
        assert abs(z) < 1e-14 and abs(t - np.exp(0.7)) < 1e-12

    def test_su2_fixes_origin(self, rng):
        for _ in range(50):
            k = gc.kappa(rand_elem(rng, 1.0))
            z, t = gc.act_h3(k, (0.0, 1.0))
            assert abs(z) < 1e-10 and abs(t - 1.0) < 1e-10

    def test_composition(self, rng):
        for _ in range(100):
            g, h = rand_elem(rng, 0.7), rand_elem(rng, 0.7)
            p = (complex(rng.normal(), rng.normal()) * 0.3, rng.uniform(0.5, 2.0))
            z1, t1 = gc.act_h3(g, gc.act_h3(h, p))
            z2, t2 = gc.act_h3(g @ h, p)
            assert abs(z1 - z2) < 1e-9 and abs(t1 - t2) < 1e-9

    def test_bad_fiber(self):
        with pytest.raises(DomainError):
            gc.act_h3(gc.identity(), (0.0, -1.0))


class TestPhiAction:
    def test_k0_right_translation(self, rng):
        k = gc.kappa(rand_elem(rng, 0.7))
        g = gc.kappa(rand_elem(rng, 0.7))  # g in K0
        assert np.max(np.abs(gc.phi_action(g, k).m - (k @ g).m)) < 1e-10

    def test_na_fixes_m(self, rng):
        m = gc.m_of(0.9)
        g = gc.n_of(0.5 + 0.1j) @ gc.a_of(0.3)
        out = gc.phi_action(g, m)
        assert np.max(np.abs(out.m - m.m)) < 1e-10

    def test_action_law(self, rng):
        for _ in range(100):
            g, h = rand_elem(rng, 0.6), rand_elem(rng, 0.6)
            k = gc.kappa(rand_elem(rng, 0.6))
            lhs = gc.phi_action(g @ h, k)
            rhs = gc.phi_action(h, gc.phi_action(g, k))
            assert np.max(np.abs(lhs.m - rhs.m)) < 1e-9


class TestPsiTheta:
    def test_identity(self):
        psi, theta = gc.psi_theta(gc.identity())
        assert psi == 0.0 and abs(theta - 1.0) < 1e-14

    def test_k_rho(self):
        for rho in (0.0, 0.3, 0.6):
            psi, theta = gc.psi_theta(gc.k_rho(rho))
            assert abs(psi) < 1e-12
            assert abs(theta - rho) < 1e-12

    def test_finite_difference_oracle(self, rng):
        h = 1e-5
        for _ in range(30):
            k = gc.kappa(rand_elem(rng, 0.8))
            psi, theta = gc.psi_theta(k)
            dn = (gc.iwasawa_A(k @ gc.n_of(h)) - gc.iwasawa_A(k @ gc.n_of(-h))) / (2 * h)
            da = (gc.iwasawa_A(k @ gc.a_of(h)) - gc.iwasawa_A(k @ gc.a_of(-h))) / (2 * h)
            assert abs(dn - psi) < 1e-6
            assert abs(da - theta) < 1e-6

    def test_m_invariance(self, rng):
        k = gc.kappa(rand_elem(rng, 0.8))
        for th in (0.4, 2.0):
            p1 = gc.psi_theta(gc.m_of(th) @ k)
            p0 = gc.psi_theta(k)
            assert abs(p1[0] - p0[0]) < 1e-12 and abs(p1[1] - p0[1]) < 1e-12

    def test_rejects_non_unitary(self):
        with pytest.raises(DomainError):
            gc.psi_theta(gc.a_of(1.0))


class TestExpK:
    def test_zero(self):
        assert np.allclose(gc.exp_k(0.0, 0.0).m, np.eye(2))

    def test_against_series_exponential(self, rng):
        # 12-term scaled-and-squared series oracle
        def expm_oracle(mat, k=8, terms=12):
            mm = mat / 2 ** k
            acc = np.eye(2, dtype=complex)
            term = np.eye(2, dtype=complex)
            for j in range(1, terms):
                term = term @ mm / j
                acc = acc + term
            for _ in range(k):
                acc = acc @ acc
            return acc

        for _ in range(50):
            r1, r2 = rng.normal(size=2)
            ref = expm_oracle(r1 * gc.X1 + r2 * gc.X2)
            assert np.max(np.abs(gc.exp_k(r1, r2).m - ref)) < 1e-10

    def test_trace(self, rng):
        for _ in range(50):
            r1, r2 = rng.normal(size=2)
            tr = np.trace(gc.exp_k(r1, r2).m)
            assert abs(tr - 2 * np.cos(np.hypot(r1, r2))) < 1e-12

    def test_unitary_unimodular(self, rng):
        g = gc.exp_k(0.4, -0.8)
        assert g.is_unitary(1e-12)


class TestDistance:
    def test_self(self, rng):
        g = rand_elem(rng, 1.0)
        assert gc.dist(g, g) < 1e-12

    def test_frozen_torus_distance(self):
        assert abs(gc.dist(gc.identity(), gc.a_of(1.0)) - DIST_E_A1) < 1e-10

    def test_left_invariance(self, rng):
        for _ in range(100):
            x, g, h = (rand_elem(rng, 0.7) for _ in range(3))
            assert abs(gc.dist(x @ g, x @ h) - gc.dist(g, h)) < 1e-8

    def test_symmetry(self, rng):
        for _ in range(30):
            g, h = rand_elem(rng, 0.8), rand_elem(rng, 0.8)
            assert abs(gc.dist(g, h) - gc.dist(h, g)) < 1e-9

    def test_small_distance_series(self):
        # first order: norm of eps*(X + H); the BCH cross term is O(eps^2)
        g = gc.n_of(1e-6) @ gc.a_of(1e-6)
        d = gc.dist(gc.identity(), g)
        assert abs(d - np.sqrt(1e-12 + 0.25e-12)) < 5e-12


class TestSubgroupDistance:
    def test_members(self):
        assert gc.dist_to_subgroup(gc.m_of(0.7) @ gc.a_of(0.4), "MA") < 1e-6
        w0 = gc.GroupElement(gc.W0)
        assert gc.dist_to_subgroup(w0 @ gc.m_of(0.7) @ gc.a_of(0.4), "MpA") < 1e-6
        h = gc.n_of(0.3) @ gc.a_of(-0.2) @ gc.k_so2(1.1)
        assert gc.dist_to_subgroup(h, "H") < 1e-6
        assert gc.dist_to_subgroup(h, "Hp") < 1e-6

    def test_niy_to_hp_linear(self):
        vals = {}
        for y in (0.02, 0.04, 0.08):
            vals[y] = gc.dist_to_subgroup(gc.n_of(1j * y), "Hp")
        for y, d in vals.items():
            assert abs(d / y - C_NIY_HP) < 0.05
        # monotone in the normal perturbation family
        ds = [vals[y] for y in sorted(vals)]
        assert ds == sorted(ds)

    def test_monotone_sweep(self):
        ds = [gc.dist_to_subgroup(gc.n_of(1j * y) @ gc.a_of(0.2), "MA")
              for y in (0.05, 0.1, 0.2, 0.4)]
        assert ds == sorted(ds)

    def test_unbounded_rejected(self):
        with pytest.raises(DomainError):
            gc.dist_to_subgroup(gc.a_of(25.0), "MA")

    def test_vectorized_ma_matches(self, rng):
        mats = np.stack([rand_elem(rng, 0.6).m for _ in range(12)])
        dv = gc.dist_ma_mats(mats)
        ds = np.array([gc.dist_to_subgroup(gc.GroupElement(m), "MA") for m in mats])
        assert np.max(np.abs(dv - ds)) < 1e-6


class TestCriticalForK:
    def test_torus_point_critical(self):
        h = 1e-5
        for t0 in (0.0, 0.5, -0.8):
            g = gc.a_of(t0)
            for X in (gc.X1, gc.X2, gc.X3):
                gp = gc.GroupElement(gc._expm2(h * X)) @ g
                gm = gc.GroupElement(gc._expm2(-h * X)) @ g
                d = (gc.iwasawa_A(gp) - gc.iwasawa_A(gm)) / (2 * h)
                assert abs(d) < 1e-6

    def test_off_torus_not_critical(self):
        h = 1e-5
        g = gc.n_of(0.3j) @ gc.a_of(0.2)
        derivs = []
        for X in (gc.X1, gc.X2, gc.X3):
            gp = gc.GroupElement(gc._expm2(h * X)) @ g
            gm = gc.GroupElement(gc._expm2(-h * X)) @ g
            derivs.append(abs(gc.iwasawa_A(gp) - gc.iwasawa_A(gm)) / (2 * h))
        assert max(derivs) > 1e-3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 1.5))
def test_reassembly_property(seed, scale):
    rng = np.random.default_rng(seed)
    g = gc.random_element(rng, scale)
    iw = gc.iwasawa_decompose(g)
    assert np.max(np.abs(iw.reassemble().m - g.m)) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_phi_action_law_property(seed):
    rng = np.random.default_rng(seed)
    g, h = gc.random_element(rng, 0.5), gc.random_element(rng, 0.5)
    k = gc.kappa(gc.random_element(rng, 0.5))
    lhs = gc.phi_action(g @ h, k)
    rhs = gc.phi_action(h, gc.phi_action(g, k))
    assert np.max(np.abs(lhs.m - rhs.m)) < 1e-9
