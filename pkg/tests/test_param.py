"""
Tests for the isoparametric Q4 toolkit.
"""

import numpy as np
import pytest

from core.param import (
    CORNERS, TRI_WEIGHTS, constraint_row, detj_coeffs, forward_map, grad_shape_q4, inverse_bilinear,
    jacobian, physical_gradients, polygon_centroid, positive_preimage, refine_triangles, shape_q4,
    triangulate_concave,
)
from utils.errors import NoPreimage, NotConcave, PreimageNotFound


class TestShapeFunctions:
    def test_kronecker_at_corners(self):
        assert np.allclose(shape_q4(CORNERS), np.eye(4))

    def test_partition_of_unity(self, rng):
        xi = rng.uniform(-1, 1, (10, 2))
        assert np.allclose(shape_q4(xi).sum(axis=-1), 1.0)
        assert np.allclose(grad_shape_q4(xi).sum(axis=-2), 0.0)

    def test_gradients_match_finite_differences(self, rng):
        xi = rng.uniform(-1, 1, 2)
        h = 1e-7
        for k in range(2):
            step = np.zeros(2)
            step[k] = h
            fd = (shape_q4(xi + step) - shape_q4(xi - step)) / (2 * h)
            assert np.allclose(grad_shape_q4(xi)[:, k], fd, atol=1e-8)

    def test_physical_gradients_reproduce_identity(self, skewed_quad, rng):
        xi = rng.uniform(-1, 1, (5, 2))
        G, det = physical_gradients(skewed_quad, xi)
        assert np.all(det > 0)
        assert np.allclose(np.einsum('ai,qaj->qij', skewed_quad, G), np.eye(2))


class TestDetJ:
    def test_oracle_coefficients(self, concave_quad):
        a0, a1, a2 = detj_coeffs(concave_quad)
        assert a0 == pytest.approx(0.075, abs=1e-15)
        assert a1 == pytest.approx(-0.0875, abs=1e-15)
        assert a2 == pytest.approx(-0.0875, abs=1e-15)

    def test_linear_form_matches_jacobian(self, concave_quad, rng):
        xi = rng.uniform(-1, 1, (20, 2))
        _, det = jacobian(concave_quad, xi)
        assert np.allclose(detj_coeffs(concave_quad)(xi), det, atol=1e-14)

    def test_negative_at_reentrant_corner(self, concave_quad):
        assert detj_coeffs(concave_quad)([1.0, 1.0]) == pytest.approx(-0.1)


class TestInverseBilinear:
    def test_two_preimages_at_reentrant_vertex(self, concave_quad):
        roots = inverse_bilinear(concave_quad, [0.3, 0.3])
        assert len(roots) == 2
        assert np.allclose(roots[0].xi, [-1.0 / 7.0, -1.0 / 7.0], atol=1e-10)
        assert roots[0].sign == 1
        assert roots[0].det_j == pytest.approx(0.1, abs=1e-10)
        assert np.allclose(roots[1].xi, [1.0, 1.0], atol=1e-10)
        assert roots[1].sign == -1
        assert roots[1].det_j == pytest.approx(-0.1, abs=1e-10)

    def test_outside_point(self, concave_quad):
        with pytest.raises(NoPreimage):
            inverse_bilinear(concave_quad, [0.9, 0.9])

    def test_inverts_forward_map_on_convex_quad(self, skewed_quad, rng):
        for xi in rng.uniform(-0.95, 0.95, (10, 2)):
            roots = inverse_bilinear(skewed_quad, forward_map(skewed_quad, xi))
            assert len(roots) == 1
            assert np.allclose(roots[0].xi, xi, atol=1e-10)

    def test_affine_quad(self, unit_square):
        roots = inverse_bilinear(unit_square, [0.25, 0.75])
        assert np.allclose(roots[0].xi, [-0.5, 0.5], atol=1e-12)

    def test_positive_preimage(self, concave_quad):
        assert np.allclose(positive_preimage(concave_quad, [0.3, 0.3]), [-1.0 / 7.0, -1.0 / 7.0], atol=1e-10)
        with pytest.raises(PreimageNotFound):
            positive_preimage(concave_quad, [0.9, 0.9])


class TestConstraintRow:
    def test_oracle_row(self, concave_quad):
        row = constraint_row(concave_quad, 2)
        assert np.allclose(row, np.array([16.0, 12.0, -40.0, 12.0]) / 49.0, atol=1e-10)

    def test_row_sums_to_zero(self, concave_quad):
        assert abs(constraint_row(concave_quad, 2).sum()) < 1e-14

    def test_row_annihilates_affine_fields(self, concave_quad, rng):
        M = rng.standard_normal((2, 2))
        c = rng.standard_normal(2)
        u = concave_quad @ M.T + c
        assert np.allclose(constraint_row(concave_quad, 2) @ u, 0.0, atol=1e-12)


class TestTriangulatedQuadrature:
    def test_counts_default_refine(self, concave_quad):
        quad = triangulate_concave(concave_quad)
        assert quad.triangles.shape == (32, 3, 2)
        assert quad.n_points == 128

    def test_refine_three(self, concave_quad):
        quad = triangulate_concave(concave_quad, refine=3)
        assert quad.triangles.shape == (128, 3, 2)

    @pytest.mark.parametrize('refine', [0, 2, 3])
    def test_area_and_first_moments(self, concave_quad, refine):
        quad = triangulate_concave(concave_quad, refine)
        assert quad.area == pytest.approx(0.3, rel=1e-13)
        centroid = polygon_centroid(concave_quad)
        assert quad.integrate(quad.points[:, 0]) == pytest.approx(0.3 * centroid[0], rel=1e-12)
        assert quad.integrate(quad.points[:, 1]) == pytest.approx(0.3 * centroid[1], rel=1e-12)

    def test_points_on_positive_branch(self, concave_quad):
        quad = triangulate_concave(concave_quad)
        assert np.all(detj_coeffs(concave_quad)(quad.xi) > 0)
        assert np.allclose(forward_map(concave_quad, quad.xi), quad.points, atol=1e-10)

    def test_rule_weights(self):
        assert TRI_WEIGHTS.sum() == pytest.approx(1.0)

    def test_refinement_preserves_orientation(self):
        tri = np.array([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]])
        children = refine_triangles(tri, 2)
        e1 = children[:, 1] - children[:, 0]
        e2 = children[:, 2] - children[:, 0]
        areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        assert len(children) == 16
        assert np.all(areas > 0)
        assert areas.sum() == pytest.approx(0.5)

    def test_convex_element_rejected(self, unit_square):
        with pytest.raises(NotConcave):
            triangulate_concave(unit_square)
