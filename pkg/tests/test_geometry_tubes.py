import numpy as np
import pytest

from hyperlap import group_core as gc
from hyperlap import geometry_tubes as gt
from hyperlap.errors import DomainError, ResourceError

# frozen from the pre-registered calibration sweep (seed 20250809, 500 samples):
# d(g, M'A) <= delta  =>  unit segment inside the tube of radius C_FWD * delta,
# and conversely segment in a radius-r tube  =>  d(g, M'A) <= C_REV * r.
C_FWD = 15.0
C_REV = 2.3


def dist_mpa_vec(mats):
    w0inv = np.linalg.inv(gc.W0)
    rot = np.einsum("ij,ajk->aik", w0inv, mats)
    return np.minimum(gc.dist_ma_mats(mats), gc.dist_ma_mats(rot))


class TestTubeMembership:
    def test_origin_inside(self):
        for delta, T in ((0.01, 0.5), (0.5, 10.0)):
            tube = gt.TubeSpec(gc.identity(), delta, T)
            assert gt.tube_contains(tube, (0.0, 1.0))

    def test_strict_radius(self):
        tube = gt.TubeSpec(gc.identity(), 0.1, 2.0)
        assert not gt.tube_contains(tube, (0.10001 + 0j, 1.0))
        assert gt.tube_contains(tube, (0.09999 + 0j, 1.0))

    def test_equivariance(self, rng):
        for _ in range(50):
            g = gc.random_element(rng, 0.5)
            tube_e = gt.TubeSpec(gc.identity(), 0.15, 1.5)
            tube_g = gt.TubeSpec(g, 0.15, 1.5)
            p = (complex(rng.normal(), rng.normal()) * 0.2,
                 float(np.exp(rng.normal() * 0.7)))
            gp = gc.act_h3(g, p)
            assert gt.tube_contains(tube_e, p) == gt.tube_contains(tube_g, gp)

    def test_guards(self):
        with pytest.raises(DomainError):
            gt.TubeSpec(gc.identity(), 1.5, 2.0)
        with pytest.raises(DomainError):
            gt.TubeSpec(gc.identity(), 0.5, 25.0)


class TestSegmentInTube:
    def test_identity_segment(self):
        tube = gt.TubeSpec(gc.identity(), 0.01, 1.2)
        assert gt.segment_in_tube(gc.identity(), tube, 1.0)
        assert not gt.segment_in_tube(gc.identity(), tube, 1.5)

    def test_normal_perturbation_excluded(self, rng):
        # d(g, M'A) ~ 10 delta pushes the segment out of the radius-delta tube
        delta = 1e-3
        g = gc.n_of(10 * delta) @ gc.a_of(0.0)
        tube = gt.TubeSpec(gc.identity(), delta, 3.0)
        assert not gt.segment_in_tube(g, tube, 1.0)

    def test_forward_inclusion_constant(self, rng):
        # d(g, M'A) <= delta => segment inside the C_FWD * delta tube
        for _ in range(60):
            theta = rng.uniform(0, 2 * np.pi)
            tval = rng.uniform(-0.8, 0.8)
            base = gc.m_of(theta) @ gc.a_of(tval)
            if rng.random() < 0.5:
                base = gc.GroupElement(gc.W0) @ base
            g = base @ gc.random_element(rng, 10 ** rng.uniform(-3.0, -1.5))
            d = float(dist_mpa_vec(g.m[None])[0])
            if d < 1e-8 or d > 0.05:
                continue
            tube = gt.TubeSpec(gc.identity(), min(C_FWD * d, 1.0), 3.0)
            assert gt.segment_in_tube(g, tube, 1.0)

    def test_reverse_constant(self, rng):
        # segment inside a radius-r tube => d(g, M'A) <= C_REV * r
        for _ in range(60):
            theta = rng.uniform(0, 2 * np.pi)
            base = gc.m_of(theta) @ gc.a_of(rng.uniform(-0.5, 0.5))
            g = base @ gc.random_element(rng, 10 ** rng.uniform(-3.0, -1.5))
            z, tc = gt.segment_points(g, 1.0)
            r_need = float(np.max(np.abs(z))) * 1.0001 + 1e-12
            if r_need > 1.0:
                continue
            assert gt.segment_in_tube(g, gt.TubeSpec(gc.identity(), r_need, 3.0), 1.0,
                                      max_dist=9.0)
            d = float(dist_mpa_vec(g.m[None])[0])
            assert d <= C_REV * r_need

    def test_bound_guard(self, rng):
        with pytest.raises(DomainError):
            gt.segment_in_tube(gc.a_of(8.0), gt.TubeSpec(gc.identity(), 0.5, 3.0), 1.0)


class TestTubeInclusionLemmas:
    def test_k_near_m_maps_tube_in(self, rng):
        # k with d(k, M') <= delta maps the half-tube into the C delta tube
        reported = []
        for _ in range(20):
            delta = 10 ** rng.uniform(-3, -1.5)
            r1, r2 = rng.normal(size=2)
            scale = delta / np.hypot(r1, r2)
            k = gc.exp_k(r1 * scale, r2 * scale)
            pts_z, pts_t = [], []
            for _ in range(50):
                z = (rng.normal() + 1j * rng.normal())
                z = z / max(1.0, abs(z)) * delta
                t = rng.uniform(-1.0, 1.0)
                p = gc.act_h3(k, (z, float(np.exp(t))))
                pts_z.append(abs(p[0]))
                pts_t.append(abs(np.log(p[1])))
            big = gt.TubeSpec(gc.identity(), min(1.0, 8 * delta), 2.2)
            assert max(pts_z) <= big.radius and max(pts_t) <= big.half_length
            reported.append(max(pts_z) / delta)
        assert max(reported) < 8.0  # reported constant

    def test_tube_in_larger_tube(self, rng):
        # segment of l inside g-tube => g-tube inside an enlarged standard tube
        for _ in range(10):
            delta = 10 ** rng.uniform(-2.5, -1.5)
            g = gc.m_of(rng.uniform(0, 2 * np.pi)) @ gc.a_of(rng.uniform(-0.3, 0.3)) \
                @ gc.random_element(rng, delta / 3)
            tube_g = gt.TubeSpec(g, delta, 2.5)
            seg_ok = gt.segment_in_tube(gc.identity(), tube_g, 1.0)
            if not seg_ok:
                continue
            big = gt.TubeSpec(gc.identity(), min(1.0, 6 * delta), 6.0)
            rng2 = np.random.default_rng(0)
            for _ in range(200):
                z = (rng2.normal() + 1j * rng2.normal())
                z = z / max(1.0, abs(z)) * delta
                t = rng2.uniform(-2.5, 2.5)
                p = gc.act_h3(g, (z, float(np.exp(t))))
                assert gt.tube_contains(big, p)


class TestBeamGrid:
    def test_counts(self):
        grid = gt.build_beam_grid(10000, 1.0, 0.05)
        assert grid.n1 == 63 and grid.n2 == 100

    def test_x_spacing(self):
        grid = gt.build_beam_grid(10000, 1.0, 0.05)
        gaps = np.diff(grid.x_centers)
        assert np.allclose(gaps, 4.0 / grid.n2)

    def test_coverage(self):
        grid = gt.build_beam_grid(400, 2.0, 0.05)
        # union of offset intervals covers [-2, 2]
        lo = grid.x_centers - grid.x_halfwidth
        hi = grid.x_centers + grid.x_halfwidth
        assert lo[0] <= -2.0 and hi[-1] >= 2.0
        assert np.all(lo[1:] <= hi[:-1] + 1e-12)
        # boundary intervals cover the circle
        assert grid.n1 * 2 * grid.theta_halfwidth >= 2 * np.pi

    def test_guard(self):
        with pytest.raises(DomainError):
            gt.build_beam_grid(-1.0, 1.0, 0.05)


class TestCounting:
    def test_own_beam_counted(self):
        grid = gt.build_beam_grid(400, 2.0, 0.05)
        base = grid.base_element(3, 7)
        tube = gt.TubeSpec(base, 0.05, 2.5)
        assert gt.count_tube_beams(tube, grid) >= 1

    def test_degenerate_radius(self):
        # membership is orientation-blind, so the antipodal boundary index
        # carrying the reversed copy of the axis may also count
        grid = gt.build_beam_grid(400, 2.0, 0.05)
        tube = gt.TubeSpec(gc.identity(), 1e-6, 2.5)
        assert gt.count_tube_beams(tube, grid) in (0, 1, 2)

    def test_monte_carlo_bound(self, rng):
        # frozen calibration (seed 20250809): max ratio 0.417 at this setting
        grid = gt.build_beam_grid(400, 2.0, 0.05)
        delta = 0.1
        bound = (1 + delta * grid.n1) * (1 + delta * grid.n2)
        worst = 0.0
        for i in range(50):
            sub = np.random.default_rng(
                np.random.SeedSequence(entropy=20250809, spawn_key=(i,)))
            if i % 2 == 0:
                m = int(sub.integers(0, grid.n1))
                n = int(sub.integers(0, grid.n2 + 1))
                base = grid.base_element(m, n) @ gc.random_element(sub, 0.05)
            else:
                base = gc.random_element(sub, 0.3)
            cnt = gt.count_tube_beams(gt.TubeSpec(base, delta, 2.5), grid)
            worst = max(worst, cnt / bound)
        assert worst <= 3 * 0.417

    def test_quadruples_identity_diagonal(self):
        grid = gt.build_beam_grid(400, 2.0, 0.05)
        n = gt.count_quadruples(gc.identity(), 1e-4, grid)
        assert n == grid.n1 * (grid.n2 + 1)

    def test_quadruples_zero_delta_generic(self, rng):
        grid = gt.build_beam_grid(400, 2.0, 0.05)
        g = gc.random_element(rng, 0.4)
        assert gt.count_quadruples(g, 0.0, grid) == 0

    def test_quadruples_resource_guard(self):
        grid = gt.build_beam_grid(4e8, 1.0, 0.05)
        with pytest.raises(ResourceError):
            gt.count_quadruples(gc.identity(), 0.01, grid)

    def test_sampled_estimate_close(self, rng):
        grid = gt.build_beam_grid(400, 2.0, 0.05)
        exact = gt.count_quadruples(gc.identity(), 0.05, grid)
        est = gt.count_quadruples_sampled(gc.identity(), 0.05, grid, 8000, rng)
        assert abs(est - exact) <= 0.5 * max(exact, 1)


class TestClosePairs:
    def test_same_pair_preserving(self):
        out = gt.close_pair_classify(0.3, 0.5, 0.3, 0.5, 1e-6)
        assert out == "orientation-preserving"

    def test_reversing_target(self):
        x1 = 0.4
        th = 2 * np.arctan2(1.0, -x1)
        out = gt.close_pair_classify(0.0, x1, th, -x1, 1e-5)
        assert out == "orientation-reversing"

    def test_generic_neither(self):
        assert gt.close_pair_classify(0.3, 0.5, 1.4, -0.9, 1e-6) == "neither"


class TestPlaneDecomposition:
    def test_sl2r_case(self, rng):
        g = gc.n_of(0.4) @ gc.a_of(0.3) @ gc.k_so2(0.7)
        out = gt.decompose_near_h2(g)
        assert len(out) == 6
        k1, zp, thp, tp, k2, used_w0 = out
        assert not used_w0
        # the middle rotation is defined mod pi on the plane
        assert abs(thp) < 1e-6 or abs(abs(thp) - np.pi) < 1e-6
        assert abs(np.imag(zp)) < 1e-6
        mid = gc.n_of(zp) @ gc.m_of(thp) @ gc.a_of(tp)
        re = k1 @ mid @ k2
        assert np.max(np.abs(re.m - g.m)) < 1e-7

    def test_m_element(self):
        out = gt.decompose_near_h2(gc.m_of(0.6))
        k1, zp, thp, tp, k2, used_w0 = out
        mid = gc.n_of(zp) @ gc.m_of(thp) @ gc.a_of(tp)
        re = k1 @ mid @ k2
        assert np.max(np.abs(re.m - gc.m_of(0.6).m)) < 1e-7
        assert abs(zp) < 1e-7 and abs(tp) < 1e-7

    def test_near_plane_reassembly(self, rng):
        for _ in range(10):
            h = gc.n_of(rng.normal() * 0.5) @ gc.a_of(rng.normal() * 0.4) \
                @ gc.k_so2(rng.uniform(0, 2 * np.pi))
            g = gc.m_of(rng.uniform(0, 2 * np.pi)) @ h
            out = gt.decompose_near_h2(g, max_dist=9.0)
            k1, zp, thp, tp, k2, used_w0 = out
            mid = gc.n_of(zp) @ gc.m_of(thp) @ gc.a_of(tp)
            re = k1 @ mid @ k2
            assert np.max(np.abs(re.m - g.m)) < 1e-7

    def test_positive_distance_marker(self):
        g = gc.n_of(0.5j) @ gc.a_of(0.0) @ gc.m_of(0.0)
        # push the plane strictly away: conjugate a separated configuration
        g2 = gc.n_of(1.0j) @ gc.GroupElement(np.diag([np.exp(0.3 + 0.4j),
                                                      np.exp(-0.3 - 0.4j)]))
        out = gt.decompose_near_h2(g2)
        if out[0] == "positive-distance":
            assert out[1] > 0.0
        else:
            re = out[0] @ (gc.n_of(out[1]) @ gc.m_of(out[2]) @ gc.a_of(out[3])) @ out[4]
            assert np.max(np.abs(re.m - g2.m)) < 1e-6
