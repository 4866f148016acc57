import time

import numpy as np
import pytest

from lcq.convex import (
    BoxSupport,
    GridFunction,
    IndicatorBall,
    IndicatorBox,
    LogConcaveFunction,
    NormMultiple,
    Quadratic,
    point_indicator,
    sample_to_grid,
)
from lcq.grid import GridSpec
from lcq.legendre import (
    BOUNDARY_WARNING,
    asplund_derivative_check,
    asplund_limit_check,
    asplund_monotonicity_check,
    asplund_sum,
    biconjugation_error,
    conjugate,
    conjugate_bruteforce,
    gradient_bijection_check,
    inf_convolution,
    inf_convolution_bruteforce,
    scalar_right_mul,
    suggest_dual_grid,
    support_function,
)


def test_closed_form_pairs():
    c = conjugate(Quadratic.isotropic(3))
    assert isinstance(c, Quadratic)
    np.testing.assert_allclose(c.Q, np.eye(3))
    assert isinstance(conjugate(IndicatorBox(np.ones(2))), BoxSupport)
    c = conjugate(NormMultiple(1.0, 1))
    assert isinstance(c, IndicatorBall) and c.radius == 1.0
    assert isinstance(conjugate(conjugate(IndicatorBall(2.0, 2))), IndicatorBall)


def test_quadratic_conjugate_with_shift():
    u = Quadratic(np.array([[2.0, 0.5], [0.5, 1.0]]), [1.0, -1.0], 0.25)
    ys = np.array([[0.3, -0.2], [1.0, 2.0]])
    xs = np.linalg.solve(u.Q, ys.T - u.b[:, None]).T  # argmax of <x,y> - u(x)
    expect = np.sum(xs * ys, axis=1) - u.values(xs)
    np.testing.assert_allclose(conjugate(u).values(ys), expect, atol=1e-12)


def test_grid_half_square_1d():
    u = sample_to_grid(Quadratic.isotropic(1), GridSpec.cube(1, 4.0, 257))
    d = GridSpec.cube(1, 3.0, 257)
    c = conjugate(u, d)
    assert np.abs(c.node_values - 0.5 * d.axes()[0] ** 2).max() <= 1e-3
    b = conjugate_bruteforce(u, d)
    assert np.abs(c.node_values - b.node_values).max() <= 1e-12


@pytest.mark.parametrize("n,count", [(1, 1025), (2, 33), (3, 11)])
def test_fast_matches_bruteforce_on_arbitrary_data(rng, n, count):
    g = GridSpec.cube(n, 1.5, count)
    vals = rng.normal(size=g.shape)
    finite = rng.uniform(size=g.shape) > 0.3
    finite.flat[0] = True
    u = GridFunction(g, vals, finite)
    d = GridSpec.box(-rng.uniform(1, 4, n), rng.uniform(1, 4, n), count)
    assert np.abs(conjugate(u, d).node_values - conjugate_bruteforce(u, d).node_values).max() <= 1e-12


def test_point_indicator_conjugate_is_zero():
    g = GridSpec.cube(2, 1.0, 5)
    u = sample_to_grid(point_indicator(2), g)
    c = conjugate_bruteforce(u, GridSpec.cube(2, 3.0, 7))
    assert np.all(c.node_values == 0)


def test_conjugate_at_zero_is_minus_min():
    g = GridSpec.cube(1, 3.0, 61)
    u = sample_to_grid(Quadratic(np.eye(1), [0.7], 1.3), g)
    c = conjugate(u, GridSpec.cube(1, 2.0, 41))
    assert c.values([[0.0]])[0] == pytest.approx(-u.node_values.min(), abs=1e-14)


def test_boundary_warning_on_short_primal_box():
    u = sample_to_grid(Quadratic.isotropic(1), GridSpec.cube(1, 1.0, 21))
    c = conjugate(u, GridSpec.cube(1, 3.0, 21))
    assert BOUNDARY_WARNING in c.warnings


def test_suggested_dual_grid_covers_slopes():
    u = sample_to_grid(Quadratic(np.diag([1.0, 4.0])), GridSpec.cube(2, 2.0, 33))
    d = suggest_dual_grid(u)
    assert d.hi[1] > 7.0 and d.hi[0] < 2.0


def test_linear_time_scaling():
    x = np.linspace(-4, 4, 1 << 20)
    u = GridFunction(GridSpec.cube(1, 4.0, 1 << 20), 0.5 * x**2, np.ones(x.size, bool))
    conjugate(u, GridSpec.cube(1, 3.0, 1 << 20))  # compile and warm caches
    def timed(N):
        g = GridSpec.cube(1, 4.0, N)
        u = GridFunction(g, 0.5 * g.axes()[0] ** 2, np.ones(N, bool))
        d = GridSpec.cube(1, 3.0, N)
        best = np.inf
        for _ in range(3):
            t = time.perf_counter()
            conjugate(u, d)
            best = min(best, time.perf_counter() - t)
        return best
    t1, t2 = timed(1 << 20), timed(1 << 21)
    assert t1 < 1.0
    assert t2 / t1 < 2.3


def test_scalar_right_mul():
    u = scalar_right_mul(Quadratic.isotropic(1), 2.0)
    assert u.values([[2.0]])[0] == pytest.approx(1.0)  # x^2/4
    assert scalar_right_mul(IndicatorBall(1.5, 2), 2.0).radius == 3.0
    assert scalar_right_mul(Quadratic.isotropic(2), 0.0).radius == 0.0
    with pytest.raises(ValueError):
        scalar_right_mul(Quadratic.isotropic(2), -1.0)
    g = GridSpec.cube(1, 2.0, 9)
    ug = sample_to_grid(Quadratic.isotropic(1), g)
    sg = scalar_right_mul(ug, 2.0)
    np.testing.assert_allclose(sg.values([[2.0]]), [1.0])


def test_right_mul_conjugate_scales(rng):
    u = Quadratic(np.array([[1.5, 0.2], [0.2, 0.7]]), [0.1, 0.4], 0.3)
    y = rng.normal(size=(20, 2))
    for a in (0.3, 1.7):
        np.testing.assert_allclose(conjugate(scalar_right_mul(u, a)).values(y), a * conjugate(u).values(y), atol=1e-9)


def test_inf_convolution_identities():
    u = Quadratic.isotropic(2)
    assert inf_convolution(u, point_indicator(2)) is u
    w = inf_convolution(Quadratic.isotropic(1), Quadratic.isotropic(1))
    np.testing.assert_allclose(w.Q, [[0.5]])
    w = inf_convolution(IndicatorBox(np.ones(1)), IndicatorBox(np.ones(1)))
    np.testing.assert_allclose(w.halfwidths, [2.0])


def test_inf_convolution_grid_vs_bruteforce():
    g = GridSpec.cube(1, 4.0, 161)
    u = sample_to_grid(Quadratic.isotropic(1), g)
    w = inf_convolution(u, u, g)
    # the half-spaced search grid contains every midpoint x/2, so the brute min is exact
    q = Quadratic.isotropic(1)
    b = inf_convolution_bruteforce(q, q, g, GridSpec.cube(1, 4.0, 321))
    x = g.axes()[0]
    inner = np.abs(x) <= 3
    assert np.abs(b.node_values[inner] - 0.25 * x[inner] ** 2).max() < 1e-12
    assert np.abs(w.node_values[inner] - 0.25 * x[inner] ** 2).max() < 2 * g.h**2


def test_inf_convolution_grid_domains_add():
    g = GridSpec.cube(1, 3.0, 61)
    box = sample_to_grid(IndicatorBox(np.ones(1)), g)
    w = inf_convolution(box, box, g, GridSpec.cube(1, 4.0, 81))
    x = g.axes()[0]
    inside = np.abs(x) <= 2 + 1e-12
    np.testing.assert_array_equal(w.finite, inside)
    assert np.abs(w.node_values[inside]).max() < 1e-12


def test_asplund_sum_cases():
    f = LogConcaveFunction.gaussian(1)
    s = asplund_sum(f, f, 1.0, 0.5)
    np.testing.assert_allclose(s.u.Q, [[1 / 1.5]])
    assert asplund_sum(f, f, 1.0, 0.0).u.Q[0, 0] == 1.0
    assert asplund_sum(f, f, 0.0, 0.0).u.radius == 0.0
    K = LogConcaveFunction.characteristic_box([1.0, 2.0])
    L = LogConcaveFunction.characteristic_box([0.5, 0.5])
    np.testing.assert_allclose(asplund_sum(K, L, 1.0, 2.0).u.halfwidths, [2.0, 3.0])
    with pytest.raises(ValueError):
        asplund_sum(f, f, -1.0, 1.0)


def test_inf_convolution_ball_domains_2d():
    g = GridSpec.cube(2, 2.5, 51)
    ball = sample_to_grid(IndicatorBall(1.0, 2), g)
    w = inf_convolution(ball, ball, g, GridSpec.cube(2, 6.0, 121))
    r = np.linalg.norm(g.nodes(), axis=-1)
    # the node set of the unit disk sums to (almost) the disk of radius 2
    assert w.finite[r <= 2 - 2 * g.h].all()
    assert not w.finite[r >= 2 + 2 * g.h].any()


def test_asplund_sum_grid_matches_sup_formula():
    g = GridSpec.cube(1, 5.0, 201)
    f = LogConcaveFunction(sample_to_grid(Quadratic.isotropic(1), g))
    t = 0.5
    s = asplund_sum(f, f, 1.0, t, g)
    x = g.axes()[0]
    inner = np.abs(x) <= 4
    # sup over y of f(x - y) g(y/t)^t, with g = f
    y = x[:, None]
    sup = np.max(np.exp(-0.5 * (x[None, :] - y) ** 2 - t * 0.5 * (y / t) ** 2), axis=0)
    np.testing.assert_allclose(s(x[inner, None]), sup[inner], rtol=5e-3)


def test_support_function_examples():
    assert isinstance(support_function(LogConcaveFunction.characteristic_box([1, 1])), BoxSupport)
    h = support_function(LogConcaveFunction.gaussian(2))
    assert h.values([[1.0, 1.0]])[0] == pytest.approx(1.0)


def test_support_function_order_preserving(rng):
    # f <= g  =>  h_f <= h_g
    f = LogConcaveFunction(Quadratic.isotropic(2, c=0.5))
    g = LogConcaveFunction(Quadratic.isotropic(2))
    y = rng.normal(size=(30, 2))
    assert np.all(support_function(f).values(y) <= support_function(g).values(y))


def test_biconjugation_bound():
    for count in (65, 129):
        u = sample_to_grid(Quadratic(np.diag([1.0, 3.0])), GridSpec.cube(2, 3.0, count))
        r = biconjugation_error(u)
        assert r["max_error"] <= r["bound"]


def test_gradient_bijection_presets_exact():
    r = gradient_bijection_check(Quadratic(np.diag([1.0, 4.0])), [[1.0, 1.0]])
    assert r["max_inverse_residual"] < 1e-14 and r["max_fenchel_residual"] < 1e-14


def test_gradient_bijection_grid(rng):
    g = GridSpec.cube(1, 4.0, 257)
    u = sample_to_grid(Quadratic.isotropic(1), g)
    r = gradient_bijection_check(u, rng.uniform(-2, 2, (32, 1)), suggest_dual_grid(u))
    assert r["max_inverse_residual"] <= 5 * g.h


def test_asplund_lemmas(rng):
    u = Quadratic(np.array([[2.0, 0.4], [0.4, 1.0]]))
    v = Quadratic(np.diag([0.5, 2.0]))
    pts = rng.uniform(-2, 2, (20, 2))
    m = asplund_monotonicity_check(u, v, pts)
    assert m["u_violations"] == 0 and m["f_violations"] == 0
    assert asplund_limit_check(u, v, pts)["monotone_decay"]
    r1 = asplund_derivative_check(u, v, 0.5, [0.3, -0.7], dt=1e-2)
    r2 = asplund_derivative_check(u, v, 0.5, [0.3, -0.7], dt=1e-3)
    assert r2 <= 1e-4 and r2 < r1
