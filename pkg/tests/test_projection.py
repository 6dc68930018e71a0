"""Exact Euclidean projections: correctness and convex-projection properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from e2eqos.core import Box, Product, SimplexBlock
from e2eqos.projection import contains, project

import helpers

finite_floats = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False,
                          allow_infinity=False)


def _vec(n):
    return arrays(np.float64, (n,), elements=finite_floats)


class TestBoxProjection:
    def test_clamps_coordinatewise(self):
        box = Box(np.array([0.0, -1.0]), np.array([1.0, 1.0]))
        out = project(box, np.array([2.0, -3.0]))
        assert out.tolist() == [1.0, -1.0]

    def test_interior_point_unchanged(self):
        box = Box(np.zeros(3), np.ones(3))
        x = np.array([0.2, 0.5, 0.9])
        assert project(box, x).tolist() == x.tolist()

    def test_returns_new_array(self):
        box = Box(np.zeros(2), np.ones(2))
        x = np.array([0.5, 0.5])
        out = project(box, x)
        out[0] = 99.0
        assert x[0] == 0.5

    def test_rejects_wrong_length(self):
        box = Box(np.zeros(2), np.ones(2))
        with pytest.raises(ValueError, match="shape"):
            project(box, np.zeros(3))

    @given(_vec(4))
    def test_projection_in_set(self, x):
        box = Box(np.full(4, -1.5), np.full(4, 2.0))
        assert contains(box, project(box, x), tol=0.0)


class TestSimplexProjection:
    def test_uniform_point(self):
        fs = SimplexBlock((((0, 3), 1.0),))
        out = project(fs, np.zeros(3))
        np.testing.assert_allclose(out, np.full(3, 1.0 / 3.0), atol=1e-15)

    def test_already_feasible_unchanged(self):
        fs = SimplexBlock((((0, 2), 1.0),))
        out = project(fs, np.array([0.25, 0.75]))
        np.testing.assert_allclose(out, [0.25, 0.75], atol=1e-15)

    def test_single_dominant_coordinate(self):
        fs = SimplexBlock((((0, 3), 1.0),))
        out = project(fs, np.array([5.0, 0.0, 0.0]))
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0], atol=1e-15)

    def test_scaled_target(self):
        fs = SimplexBlock((((0, 2), 4.0),))
        out = project(fs, np.array([1.0, 1.0]))
        np.testing.assert_allclose(out, [2.0, 2.0], atol=1e-15)

    def test_untouched_coordinates_pass_through(self):
        fs = SimplexBlock((((0, 2), 1.0), ((3, 5), 2.0)))
        out = project(fs, np.array([0.5, 0.5, -7.0, 1.0, 1.0]))
        assert out[2] == -7.0
        np.testing.assert_allclose(out[[0, 1, 3, 4]], [0.5, 0.5, 1.0, 1.0], atol=1e-15)

    @given(_vec(5))
    @settings(max_examples=150)
    def test_kkt_certificate(self, x):
        fs = SimplexBlock((((0, 5), 1.0),))
        p = project(fs, x)
        assert helpers.simplex_kkt_residual(x, p, 1.0) <= 1e-9

    @given(_vec(6), st.floats(min_value=0.1, max_value=8.0))
    @settings(max_examples=150)
    def test_kkt_certificate_two_blocks(self, x, target):
        fs = SimplexBlock((((0, 3), target), ((3, 6), 1.0)))
        p = project(fs, x)
        assert helpers.simplex_kkt_residual(x[:3], p[:3], target) <= 1e-9
        assert helpers.simplex_kkt_residual(x[3:], p[3:], 1.0) <= 1e-9


class TestProductProjection:
    def test_children_handled_independently(self):
        prod = Product((Box(np.zeros(2), np.ones(2)), SimplexBlock((((0, 2), 1.0),))))
        out = project(prod, np.array([2.0, -1.0, 3.0, 3.0]))
        np.testing.assert_allclose(out, [1.0, 0.0, 0.5, 0.5], atol=1e-15)


SETS = [
    Box(np.full(4, -1.0), np.array([0.5, 2.0, 1.0, 3.0])),
    SimplexBlock((((0, 4), 1.5),)),
    SimplexBlock((((0, 2), 1.0), ((2, 4), 2.0))),
    Product((Box(np.zeros(2), np.ones(2)), SimplexBlock((((0, 2), 1.0),)))),
]


@pytest.mark.parametrize("fs", SETS, ids=["box", "simplex", "two_blocks", "product"])
class TestConvexProjectionProperties:
    """Idempotence, membership, nonexpansiveness, variational inequality."""

    @given(x=_vec(4))
    @settings(max_examples=100)
    def test_idempotent(self, fs, x):
        p = project(fs, x)
        assert float(np.linalg.norm(project(fs, p) - p)) <= 1e-9

    @given(x=_vec(4))
    @settings(max_examples=100)
    def test_membership(self, fs, x):
        assert contains(fs, project(fs, x), tol=1e-9)

    @given(x=_vec(4), z=_vec(4))
    @settings(max_examples=100)
    def test_nonexpansive(self, fs, x, z):
        d_proj = float(np.linalg.norm(project(fs, x) - project(fs, z)))
        d_points = float(np.linalg.norm(x - z))
        assert d_proj <= d_points + 1e-9

    @given(x=_vec(4), z=_vec(4))
    @settings(max_examples=100)
    def test_variational_inequality(self, fs, x, z):
        # (x - P(x)) @ (z - P(x)) <= 0 for every feasible z
        p = project(fs, x)
        z_f = project(fs, z)
        assert float((x - p) @ (z_f - p)) <= 1e-9


class TestContains:
    def test_box_tolerance(self):
        box = Box(np.zeros(2), np.ones(2))
        assert contains(box, np.array([-1e-13, 1.0]))
        assert not contains(box, np.array([-1e-3, 1.0]))

    def test_simplex_sum_checked(self):
        fs = SimplexBlock((((0, 2), 1.0),))
        assert contains(fs, np.array([0.4, 0.6]))
        assert not contains(fs, np.array([0.4, 0.7]))
        assert not contains(fs, np.array([-0.1, 1.1]))

    def test_wrong_shape_is_not_member(self):
        assert not contains(Box(np.zeros(2), np.ones(2)), np.zeros(3))
