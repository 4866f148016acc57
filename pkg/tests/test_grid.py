import numpy as np
import pytest

from lcq.grid import GridPlan, GridSpec, interpolate, trapezoid


def test_spacing_and_shape():
    g = GridSpec.box([-1, 0], [1, 4], [5, 9])
    assert g.dim == 2
    assert g.shape == (5, 9)
    assert g.size == 45
    np.testing.assert_allclose(g.spacing, [0.5, 0.5])
    assert g.nodes().shape == (5, 9, 2)


@pytest.mark.parametrize("lo,hi,count", [([0.0], [0.0], [3]), ([1.0], [0.0], [3]), ([0.0], [1.0], [1])])
def test_rejects_degenerate_axes(lo, hi, count):
    with pytest.raises(ValueError):
        GridSpec.box(lo, hi, count)


def test_interpolation_exact_on_affine():
    g = GridSpec.cube(2, 1.0, 7)
    vals = 2 * g.nodes()[..., 0] - g.nodes()[..., 1] + 0.5
    pts = np.array([[0.13, -0.71], [0.99, 0.01], [-1.0, 1.0]])
    got = interpolate(g, vals, np.ones(g.shape, bool), pts)
    np.testing.assert_allclose(got, 2 * pts[:, 0] - pts[:, 1] + 0.5, atol=1e-13)


def test_interpolation_masked_corner_is_inf():
    g = GridSpec.cube(1, 1.0, 3)
    finite = np.array([True, True, False])
    got = interpolate(g, np.zeros(3), finite, np.array([[-0.5], [0.0], [0.5], [2.0]]))
    assert got[0] == 0 and got[1] == 0
    assert np.isinf(got[2]) and np.isinf(got[3])


def test_trapezoid_integrates_bilinear_exactly():
    g = GridSpec.box([0, 0], [2, 1], [3, 5])
    x, y = g.nodes()[..., 0], g.nodes()[..., 1]
    assert trapezoid(x * y + 1, g) == pytest.approx(2 * 0.5 + 2.0, rel=1e-14)


def test_refined_and_shifted():
    g = GridSpec.cube(1, 1.0, 5)
    assert g.refined().count == (9,)
    assert g.has_node_at_origin()
    assert not g.shifted(0.5 * g.spacing).has_node_at_origin()


def test_plan_grids():
    plan = GridPlan(3.0, 17, dual_half_width=5.0, fiber_count=9)
    assert plan.ambient(3).shape == (17, 17, 17)
    assert plan.fiber(2).shape == (9, 9)
    assert plan.fiber(0) is None
    assert plan.dual(2).hi == (5.0, 5.0)
    assert GridPlan(1.0, 3).dual(2) is None
