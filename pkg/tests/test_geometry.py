"""Ball-geometry unit tests: frozen high-precision values, metric axioms,
roundtrips, Euclidean limits, and gradient checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperhash import geometry as geo

import oracles

CURVATURES = [0.01, 0.1, 1.0]


def random_ball_points(rng, n, dim, c, fill=0.9):
    """Uniform-direction points with norms up to ``fill`` of the ball radius."""
    v = rng.normal(size=(n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    radii = rng.uniform(0.0, fill, size=(n, 1)) / math.sqrt(c)
    return v * radii


def finite_diff(f, x, step=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += step
        xm[idx] -= step
        g[idx] = (f(xp) - f(xm)) / (2 * step)
    return g


class TestMobiusAdd:
    def test_right_identity(self):
        rng = np.random.default_rng(0)
        for c in CURVATURES:
            x = random_ball_points(rng, 50, 4, c)
            zero = np.zeros(4)
            np.testing.assert_allclose(geo.mobius_add(x, zero, c), x, atol=1e-14)
            np.testing.assert_allclose(geo.mobius_add(zero, x, c), x, atol=1e-14)

    def test_left_inverse(self):
        rng = np.random.default_rng(1)
        for c in CURVATURES:
            x = random_ball_points(rng, 50, 4, c)
            np.testing.assert_allclose(
                geo.mobius_add(-x, x, c), np.zeros_like(x), atol=1e-12
            )

    def test_euclidean_limit(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(-0.3, 0.3, size=(20, 3))
        y = rng.uniform(-0.3, 0.3, size=(20, 3))
        np.testing.assert_allclose(geo.mobius_add(x, y, 1e-8), x + y, atol=1e-5)

    def test_frozen_high_precision_value(self):
        # mpmath evaluation of the closed form at c=1, x=(0.3,0), y=(0.2,0)
        got = geo.mobius_add(np.array([0.3, 0.0]), np.array([0.2, 0.0]), 1.0)
        np.testing.assert_allclose(got, [0.47169811320754717, 0.0], rtol=1e-15)

    def test_matches_oracle_on_random_inputs(self):
        rng = np.random.default_rng(3)
        for c in CURVATURES:
            x = random_ball_points(rng, 20, 3, c, fill=0.8)
            y = random_ball_points(rng, 20, 3, c, fill=0.8)
            expected = np.array(
                [[float(v) for v in oracles.mp_mobius_add(a, b, c)] for a, b in zip(x, y)]
            )
            np.testing.assert_allclose(geo.mobius_add(x, y, c), expected, atol=1e-13)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dimension"):
            geo.mobius_add(np.zeros(3), np.zeros(4), 1.0)

    def test_result_stays_in_ball(self):
        rng = np.random.default_rng(4)
        c = 1.0
        x = random_ball_points(rng, 200, 3, c, fill=0.999)
        y = random_ball_points(rng, 200, 3, c, fill=0.999)
        out = geo.mobius_add(x, y, c)
        assert np.all(np.linalg.norm(out, axis=1) <= geo.max_norm(c) + 1e-15)


class TestDistance:
    def test_self_distance_zero(self):
        rng = np.random.default_rng(5)
        for c in CURVATURES:
            x = random_ball_points(rng, 30, 5, c)
            np.testing.assert_allclose(geo.distance(x, x, c), 0.0, atol=1e-12)

    def test_frozen_value_origin_to_half(self):
        # 2*artanh(0.5) evaluated at 50 digits
        d = geo.distance(np.zeros(2), np.array([0.5, 0.0]), 1.0)
        np.testing.assert_allclose(d, 1.0986122886681098, rtol=1e-15)

    def test_euclidean_limit_relative(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(-0.4, 0.4, size=(50, 3))
        y = rng.uniform(-0.4, 0.4, size=(50, 3))
        d = geo.distance(x, y, 1e-8)
        ref = 2.0 * np.linalg.norm(x - y, axis=1)
        np.testing.assert_allclose(d, ref, rtol=1e-5)

    def test_euclidean_limit_monotone_in_curvature(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(-0.4, 0.4, size=(25, 3))
        y = rng.uniform(-0.4, 0.4, size=(25, 3))
        ref = 2.0 * np.linalg.norm(x - y, axis=1)
        gaps = []
        for k in range(4, 9):
            d = geo.distance(x, y, 10.0 ** (-k))
            gaps.append(np.max(np.abs(d - ref)))
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_metric_axioms(self):
        rng = np.random.default_rng(8)
        for c in CURVATURES:
            x = random_ball_points(rng, 1000, 4, c)
            y = random_ball_points(rng, 1000, 4, c)
            z = random_ball_points(rng, 1000, 4, c)
            dxy = geo.distance(x, y, c)
            dyx = geo.distance(y, x, c)
            dxz = geo.distance(x, z, c)
            dzy = geo.distance(z, y, c)
            assert np.all(dxy >= 0.0)
            np.testing.assert_allclose(dxy, dyx, atol=1e-12)
            assert np.all(dxy <= dxz + dzy + 1e-9)

    def test_matches_oracle(self):
        rng = np.random.default_rng(9)
        for c in CURVATURES:
            x = random_ball_points(rng, 20, 3, c, fill=0.8)
            y = random_ball_points(rng, 20, 3, c, fill=0.8)
            expected = np.array([float(oracles.mp_distance(a, b, c)) for a, b in zip(x, y)])
            np.testing.assert_allclose(geo.distance(x, y, c), expected, rtol=1e-12)

    def test_near_boundary_clamp_counted(self):
        geo.reset_boundary_clamp_count()
        edge = np.array([geo.max_norm(1.0), 0.0])
        geo.distance(-edge, edge, 1.0)
        assert geo.boundary_clamp_count() >= 1
        geo.reset_boundary_clamp_count()
        assert geo.boundary_clamp_count() == 0

    def test_rejects_nonpositive_curvature(self):
        with pytest.raises(ValueError, match="curvature"):
            geo.distance(np.zeros(2), np.zeros(2), 0.0)
        with pytest.raises(ValueError, match="curvature"):
            geo.distance(np.zeros(2), np.zeros(2), -1.0)


class TestPairwiseDistance:
    def test_agrees_with_elementwise(self):
        rng = np.random.default_rng(10)
        for c in CURVATURES:
            x = random_ball_points(rng, 15, 6, c)
            y = random_ball_points(rng, 11, 6, c)
            grid = geo.pairwise_distance(x[:, None, :], y[None, :, :], c)
            for i in range(15):
                np.testing.assert_allclose(
                    grid[i], geo.distance(x[i], y, c), rtol=1e-10, atol=1e-12
                )

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for c in CURVATURES:
            x = random_ball_points(rng, 6, 4, c, fill=0.8)
            y = random_ball_points(rng, 6, 4, c, fill=0.8)
            d, gx, gy = geo.pairwise_distance_grad(x, y, c)
            np.testing.assert_allclose(d, geo.distance(x, y, c), rtol=1e-10, atol=1e-12)
            for i in range(6):
                fx = finite_diff(lambda p: float(geo.distance(p, y[i], c)), x[i].copy())
                fy = finite_diff(lambda p: float(geo.distance(x[i], p, c)), y[i].copy())
                np.testing.assert_allclose(gx[i], fx, rtol=1e-5, atol=1e-8)
                np.testing.assert_allclose(gy[i], fy, rtol=1e-5, atol=1e-8)

    def test_zero_gradient_at_coincident_points(self):
        x = np.array([0.2, 0.1])
        _, gx, gy = geo.pairwise_distance_grad(x, x.copy(), 1.0)
        np.testing.assert_array_equal(gx, 0.0)
        np.testing.assert_array_equal(gy, 0.0)

    def test_coefficient_form_matches_dense_gradients(self):
        rng = np.random.default_rng(30)
        for c in CURVATURES:
            x = random_ball_points(rng, 7, 5, c, fill=0.8)
            y = random_ball_points(rng, 9, 5, c, fill=0.8)
            d_ref, gx_ref, gy_ref = geo.pairwise_distance_grad(
                x[:, None, :], y[None, :, :], c
            )
            d, cxs, cxo, cys, cyo = geo.distance_grad_coefficients(x, y, c)
            np.testing.assert_allclose(d, d_ref, rtol=1e-10, atol=1e-12)
            gx = cxs[..., None] * x[:, None, :] + cxo[..., None] * y[None, :, :]
            gy = cys[..., None] * y[None, :, :] + cyo[..., None] * x[:, None, :]
            np.testing.assert_allclose(gx, gx_ref, rtol=1e-9, atol=1e-12)
            np.testing.assert_allclose(gy, gy_ref, rtol=1e-9, atol=1e-12)


class TestExpLogMaps:
    def test_expmap0_zero_vector(self):
        np.testing.assert_array_equal(geo.expmap0(np.zeros(3), 0.1), np.zeros(3))

    def test_expmap0_frozen_value(self):
        # exp_0((1,0)) at c=1 is (tanh 1, 0)
        out = geo.expmap0(np.array([1.0, 0.0]), 1.0)
        np.testing.assert_allclose(out, [0.7615941559557649, 0.0], rtol=1e-15)

    def test_logmap0_frozen_value(self):
        out = geo.logmap0(np.array([math.tanh(1.0), 0.0]), 1.0)
        np.testing.assert_allclose(out, [1.0, 0.0], rtol=1e-12)

    def test_roundtrip_at_origin(self):
        rng = np.random.default_rng(12)
        v = rng.normal(size=(200, 5))
        v *= 3.0 / np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 3.0)
        for c in [0.1]:
            back = geo.logmap0(geo.expmap0(v, c), c)
            np.testing.assert_allclose(back, v, atol=1e-9)

    def test_roundtrip_random_inball(self):
        rng = np.random.default_rng(13)
        for c in CURVATURES:
            y = random_ball_points(rng, 1000, 4, c, fill=0.95)
            back = geo.expmap0(geo.logmap0(y, c), c)
            assert np.max(np.abs(back - y)) <= 1e-9

    def test_general_base_roundtrip(self):
        rng = np.random.default_rng(14)
        c = 0.5
        base = random_ball_points(rng, 20, 3, c, fill=0.6)
        y = random_ball_points(rng, 20, 3, c, fill=0.6)
        v = geo.logmap(y, c, base=base)
        np.testing.assert_allclose(geo.expmap(v, c, base=base), y, atol=1e-9)

    def test_expmap_matches_oracle(self):
        rng = np.random.default_rng(15)
        v = rng.normal(size=(10, 3))
        for c in CURVATURES:
            expected = np.array([[float(a) for a in oracles.mp_expmap0(row, c)] for row in v])
            np.testing.assert_allclose(geo.expmap0(v, c), expected, atol=1e-13)

    def test_expmap0_vjp_finite_differences(self):
        rng = np.random.default_rng(16)
        c = 0.3
        for scale in [1e-8, 1e-3, 1.0, 4.0]:
            v = rng.normal(size=(5, 4)) * scale
            g = rng.normal(size=(5, 4))
            pulled = geo.expmap0_vjp(v, g, c)
            for i in range(5):
                fd = finite_diff(
                    lambda p: float(np.dot(geo.expmap0(p, c), g[i])), v[i].copy(), step=1e-7
                )
                np.testing.assert_allclose(pulled[i], fd, rtol=1e-4, atol=1e-7)

    def test_expmap0_vjp_in_clamped_region(self):
        # norms large enough that the ball clamp is active
        c = 1.0
        v = np.array([[8.0, 1.0, 0.0]])
        assert np.linalg.norm(geo.expmap0(v, c)) == pytest.approx(geo.max_norm(c))
        g = np.array([[0.3, -0.7, 0.2]])
        pulled = geo.expmap0_vjp(v, g, c)
        fd = finite_diff(lambda p: float(np.dot(geo.expmap0(p, c), g[0])), v[0].copy(), step=1e-6)
        np.testing.assert_allclose(pulled[0], fd, atol=1e-6)


class TestKleinConversions:
    def test_origin_fixed(self):
        z = np.zeros(3)
        np.testing.assert_array_equal(geo.poincare_to_klein(z, 1.0), z)
        np.testing.assert_array_equal(geo.klein_to_poincare(z, 1.0), z)

    def test_frozen_values(self):
        k = geo.poincare_to_klein(np.array([0.5, 0.0]), 1.0)
        np.testing.assert_allclose(k, [0.8, 0.0], rtol=1e-15)
        p = geo.klein_to_poincare(np.array([0.8, 0.0]), 1.0)
        np.testing.assert_allclose(p, [0.5, 0.0], rtol=1e-15)

    def test_roundtrips(self):
        rng = np.random.default_rng(17)
        for c in CURVATURES:
            x = random_ball_points(rng, 500, 4, c, fill=0.95)
            back = geo.klein_to_poincare(geo.poincare_to_klein(x, c), c)
            np.testing.assert_allclose(back, x, atol=1e-12)
            k = geo.poincare_to_klein(x, c)
            back_k = geo.poincare_to_klein(geo.klein_to_poincare(k, c), c)
            np.testing.assert_allclose(back_k, k, atol=1e-12)


class TestEinsteinMidpoint:
    def test_single_point(self):
        x = np.array([[0.3, -0.2, 0.1]])
        np.testing.assert_allclose(geo.einstein_midpoint(x, 1.0), x[0], atol=1e-14)

    def test_symmetric_pair_maps_to_origin(self):
        x = np.array([0.4, 0.1, 0.0])
        mid = geo.einstein_midpoint(np.stack([x, -x]), 1.0)
        np.testing.assert_allclose(mid, np.zeros(3), atol=1e-14)

    def test_frozen_scalar_oracle_value(self):
        # Klein inputs (0.5,0) and (0,0) at c=1: gamma=(1.1547..., 1),
        # Klein midpoint 0.26794919243112271, ball point 0.13646973766160719.
        p1 = geo.klein_to_poincare(np.array([0.5, 0.0]), 1.0)
        p2 = np.zeros(2)
        mid = geo.einstein_midpoint(np.stack([p1, p2]), 1.0)
        np.testing.assert_allclose(mid, [0.13646973766160719, 0.0], rtol=1e-14)

    def test_matches_oracle_with_weights(self):
        rng = np.random.default_rng(18)
        for c in CURVATURES:
            pts = random_ball_points(rng, 7, 3, c, fill=0.8)
            w = rng.uniform(0.1, 2.0, size=7)
            expected = [float(a) for a in oracles.mp_einstein_midpoint(pts, c, w)]
            np.testing.assert_allclose(geo.einstein_midpoint(pts, c, w), expected, atol=1e-13)

    def test_permutation_invariant_and_inside_ball(self):
        rng = np.random.default_rng(19)
        c = 1.0
        pts = random_ball_points(rng, 9, 4, c, fill=0.999)
        mid = geo.einstein_midpoint(pts, c)
        perm = rng.permutation(9)
        mid_p = geo.einstein_midpoint(pts[perm], c)
        np.testing.assert_allclose(mid, mid_p, atol=1e-13)
        assert np.linalg.norm(mid) < 1.0 / math.sqrt(c)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            geo.einstein_midpoint(np.zeros((0, 3)), 1.0)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=2, max_size=5),
    st.sampled_from(CURVATURES),
)
def test_property_mobius_identity_and_roundtrip(coords, c):
    a = np.asarray(coords)
    x = a / (1.0 + np.linalg.norm(a)) * 0.95 / math.sqrt(c)
    zero = np.zeros_like(x)
    np.testing.assert_allclose(geo.mobius_add(x, zero, c), x, atol=1e-14)
    np.testing.assert_allclose(geo.mobius_add(-x, x, c), zero, atol=1e-12)
    np.testing.assert_allclose(geo.expmap0(geo.logmap0(x, c), c), x, atol=1e-9)
    np.testing.assert_allclose(
        geo.klein_to_poincare(geo.poincare_to_klein(x, c), c), x, atol=1e-12
    )
