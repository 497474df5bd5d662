import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from indefsl.errors import InvalidInputError
from indefsl.expr import parse_potential
from indefsl.generators import helicoid
from indefsl.geometry import Immersion, graph_immersion
from indefsl.graphs import PotentialField
from indefsl.varcheck import (
    Region, VariationField, bump, bump_grad, chart_axes_by_type, flat_closed_form,
    geometry_cache, growth_fit, growth_scan, instability_probe, second_variation,
    simpson_weights, spacelike_plane, timelike_plane, volume,
)


def perturbed(imm, W, xi, s, step=1e-4):
    """``imm + s f xi`` as a finite-difference immersion."""
    c = np.array(W_center[0])

    def f(p):
        fv, _ = W.values(p[None, :], c)
        return imm.f(p) + s * fv[0] * xi(p)

    return Immersion(imm.n, imm.ambient_signs, f, step=step)


W_center = [None]


def volume_second_difference(imm, W, xi, region, s=0.02, nodes=65):
    """Second difference of the volume in s, Richardson-extrapolated (error O(s^4))."""
    W_center[0] = region.center
    v0 = volume(imm, region, nodes)

    def d2(t):
        vp, vm = (volume(perturbed(imm, W, xi, sgn * t), region, nodes) for sgn in (1, -1))
        return (vp - 2 * v0 + vm) / t**2

    return (4 * d2(s / 2) - d2(s)) / 3


class TestQuadrature:
    def test_simpson_exact_on_cubics(self):
        x, w = simpson_weights(5, -1.0, 2.0)
        assert np.sum(w * (x**3 - x + 1)) == pytest.approx((16 - 1) / 4 - 1.5 + 3)

    def test_simpson_node_count(self):
        with pytest.raises(InvalidInputError):
            simpson_weights(4, 0, 1)

    def test_volume_of_flat_square(self):
        assert volume(timelike_plane(), Region((0, 0), 1.0)) == pytest.approx(4.0)

    def test_volume_scales(self):
        assert volume(spacelike_plane(), Region((0.5, 0), 2.0)) == pytest.approx(16.0)

    def test_volume_richardson(self):
        # dv = 1 + 4 F'' G'' is quartic, so the Simpson error ratio is exactly 16
        u, _ = parse_potential("wave:F=s^4/20,G=s^4/20", 2)
        imm = graph_immersion(u, 1)
        region = Region((0.0, 0.0), 0.5)
        v = [volume(imm, region, n) for n in (5, 9, 17)]
        assert (v[0] - v[1]) / (v[1] - v[2]) == pytest.approx(16.0, rel=1e-6)


class TestVariationField:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 5), st.integers(0, 1), st.integers(0, 2**31))
    def test_gradient_matches_fd(self, q, d, seed):
        r = np.random.default_rng(seed)
        W = VariationField(d, 0.7, q)
        c = np.array([0.1, -0.2])
        p = c + r.uniform(-0.6, 0.6, size=2)
        _, g = W.values(p[None, :], c)
        h = 1e-6
        fd = [(W.values((p + h * e)[None, :], c)[0] - W.values((p - h * e)[None, :], c)[0])[0]
              / (2 * h) for e in np.eye(2)]
        np.testing.assert_allclose(g[0], fd, atol=1e-5 * (1 + W.wavenumber))

    def test_vanishes_on_faces(self):
        W = VariationField(0, 1.0, 3)
        pts = np.array([[1.0, 0.2], [-1.0, -0.5], [0.3, 1.0]])
        f, g = W.values(pts, (0.0, 0.0))
        np.testing.assert_allclose(f, 0, atol=1e-15)
        np.testing.assert_allclose(g, 0, atol=1e-12)

    def test_bump(self):
        assert bump(np.array([0.0]))[()] == 1.0 and bump(np.array([1.2]))[()] == 0.0
        np.testing.assert_allclose(bump_grad(np.array([0.5])), [-6 * 0.5 * 0.75**2])

    @pytest.mark.parametrize("kw", [{"normal": "null"}, {"q": -1}, {"delta": 0.0}])
    def test_validation(self, kw):
        args = dict(direction=0, delta=1.0, q=1)
        args.update(kw)
        with pytest.raises(InvalidInputError):
            VariationField(**args)


class TestSecondVariation:
    @pytest.mark.parametrize("q", [0, 1, 4])
    @pytest.mark.parametrize("d", [0, 1])
    def test_flat_matches_closed_form(self, q, d):
        region = Region((0.3, -0.2), 0.8)
        W = VariationField(d, 0.8, q)
        v = second_variation(timelike_plane(), W, region)
        assert v == pytest.approx(flat_closed_form(q, 0.8, d, [-1, 1]), abs=1e-6)

    def test_flat_matches_volume_second_difference(self):
        region = Region((0.0, 0.0), 0.6)
        W = VariationField(1, 0.6, 0)
        xi = lambda p: np.array([0.0, 0.0, 1.0])
        fd = volume_second_difference(timelike_plane(), W, xi, region)
        assert fd == pytest.approx(second_variation(timelike_plane(), W, region), rel=2e-3)

    def test_helicoid_matches_volume_second_difference(self):
        a = 0.5
        imm = helicoid(a)
        region = Region((1.5, 0.0), 0.3)
        W = VariationField(0, 0.3, 0, normal="timelike")

        def xi(p):
            u, v = p
            return np.array([u, -a * np.sin(v), a * np.cos(v)]) / np.sqrt(u * u - a * a)

        fd = volume_second_difference(imm, W, xi, region)
        v = second_variation(imm, W, region, transverse_nodes=65)
        assert fd == pytest.approx(v, rel=5e-3)

    def test_cache_reuse_and_mismatch(self):
        region = Region((0.0, 0.0), 1.0)
        cache = geometry_cache(timelike_plane(), region, 0, q_max=3, transverse_nodes=33)
        assert cache.max_mean_curvature == 0 and cache.min_dv == pytest.approx(1.0)
        with pytest.raises(InvalidInputError):
            cache.second_variation(VariationField(1, 1.0, 1))

    def test_no_timelike_normal_on_timelike_plane(self):
        with pytest.raises(InvalidInputError):
            geometry_cache(timelike_plane(), Region((0, 0), 1.0), 0, "timelike", q_max=1)

    def test_delta_mismatch(self):
        with pytest.raises(InvalidInputError):
            second_variation(timelike_plane(), VariationField(0, 0.5, 1), Region((0, 0), 1.0))

    def test_axes_by_type(self):
        cache = geometry_cache(timelike_plane(), Region((0, 0), 1.0), 0, q_max=1,
                               transverse_nodes=9)
        assert chart_axes_by_type(cache) == {"spacelike": [1], "timelike": [0]}


class TestProbe:
    def test_timelike_plane(self):
        res = instability_probe(timelike_plane(), Region((0, 0), 1.0), q_max=20)
        assert res.v_pos > 0 and res.v_neg < 0 and res.q_pos <= 20 and res.q_neg <= 20
        assert (res.axis_pos, res.axis_neg) == (1, 0)
        d = res.to_dict()
        assert d["V_pos"] == res.v_pos and len(d["scan_pos"]) == res.q_pos

    def test_timelike_normal_swaps_roles(self):
        # t-axis timelike in R_2^3 with a timelike normal
        imm = Immersion(2, np.array([-1.0, -1.0, 1.0]), lambda q: np.array([q[0], 0.0, q[1]]),
                        lambda q: np.array([[1.0, 0], [0, 0], [0, 1.0]]),
                        lambda q: np.zeros((3, 2, 2)))
        res = instability_probe(imm, Region((0, 0), 1.0), q_max=5, normal="timelike",
                                transverse_nodes=33)
        assert res.v_pos > 0 and res.v_neg < 0
        assert (res.axis_pos, res.axis_neg) == (0, 1)

    def test_riemannian_base_rejected(self):
        with pytest.raises(InvalidInputError, match="index"):
            instability_probe(spacelike_plane(), Region((0, 0), 1.0))

    def test_non_minimal_base_rejected(self):
        u = PotentialField(2, lambda x: x[0] ** 3,
                           gradient=lambda x: np.array([3 * x[0] ** 2, 0.0]),
                           hessian=lambda x: np.diag([6 * x[0], 0.0]),
                           third=lambda x: np.array([[[6.0, 0], [0, 0]], [[0, 0], [0, 0]]]))
        with pytest.raises(InvalidInputError, match="minimal"):
            instability_probe(graph_immersion(u, 1), Region((0.4, 0), 0.1), q_max=2,
                              transverse_nodes=17)


class TestGrowth:
    def test_fit_exact(self):
        qs = np.arange(3, 9)
        fit = growth_fit(qs, 2.5 * (2 * qs + 1) ** 2 - 1.0)
        assert fit.slope == pytest.approx(2.5) and fit.intercept == pytest.approx(-1.0)
        assert fit.r2 == pytest.approx(1.0)

    def test_flat_slope_matches_closed_form(self):
        rows, fit = growth_scan(timelike_plane(), Region((0, 0), 1.0), 1, range(5, 11),
                                transverse_nodes=65)
        cf = [flat_closed_form(q, 1.0, 1, [-1, 1]) for q in (5, 6)]
        assert fit.slope == pytest.approx((cf[1] - cf[0]) / (13**2 - 11**2), rel=1e-6)
        assert fit.r2 > 0.99
