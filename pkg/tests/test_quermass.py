import math

import numpy as np
import pytest

from lcq.convex import IndicatorBall, LogConcaveFunction, Quadratic, point_indicator
from lcq.geometry import ball, body_quermass, gaussian_moments, omega
from lcq.grid import GridPlan, GridSpec
from lcq.legendre import asplund_sum, scalar_right_mul
from lcq.projection import HaarSampler, axis_subspaces
from lcq.quermass import (
    QuermassResult,
    TailMassError,
    blaschke_petkantschin_check,
    existence_bound_check,
    extrapolation_weights,
    i_total_mass,
    mixed_quermass_fd,
    mixed_quermass_representation,
    quermassintegral,
    reduce_translation,
    total_mass,
)


def spd(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T / n + np.eye(n)


# -- total mass -------------------------------------------------------------


def test_gaussian_mass_quadrature():
    r = total_mass(LogConcaveFunction.gaussian(2), GridSpec.cube(2, 6.0, 257), closed_form=False)
    assert r.method == "quadrature"
    assert abs(r.value - 2 * math.pi) <= 1e-4


def test_closed_form_masses():
    assert total_mass(LogConcaveFunction.characteristic_box([1.0, 1.0])).value == 4.0
    assert total_mass(LogConcaveFunction.characteristic_ball(2)).value == pytest.approx(math.pi)
    r = total_mass(LogConcaveFunction(Quadratic(np.diag([1.0, 4.0]), [1.0, 0.0], 0.5)))
    assert r.value == pytest.approx(2 * math.pi / 2 * math.exp(0.5 - 0.5))


def test_disk_mass_first_order():
    f = LogConcaveFunction.characteristic_ball(2)
    errs = []
    for count in (65, 129, 257):
        g = GridSpec.cube(2, 1.5, count)
        errs.append(abs(total_mass(f, g, closed_form=False).value - math.pi) / g.h)
    assert max(errs) < 6.0  # error = O(h)


def test_tail_mass_error():
    with pytest.raises(TailMassError):
        total_mass(LogConcaveFunction.gaussian(2), GridSpec.cube(2, 2.0, 33), closed_form=False)


def test_i_total_mass():
    f = LogConcaveFunction.gaussian(3)
    xi = HaarSampler(1).sample(0, 3, 2)
    assert i_total_mass(f, xi).value == pytest.approx(2 * math.pi, rel=1e-12)
    r = i_total_mass(f, xi, GridPlan(6.0, 65))
    assert abs(r.value - 2 * math.pi) <= 1e-3
    b = i_total_mass(LogConcaveFunction.characteristic_ball(3, 1.2), xi, GridPlan(1.5, 129))
    assert abs(b.value - math.pi * 1.44) < 4 * 3.0 / 128
    assert i_total_mass(f, None).value == omega(3)


# -- quermassintegrals ---------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3])
def test_ball_quermassintegrals(n):
    for R in (1.0, 1.5):
        f = LogConcaveFunction.characteristic_ball(n, R)
        for j in range(n):
            r = quermassintegral(f, j, mode="mc", samples=8, seed=3)
            assert r.value == pytest.approx(body_quermass(ball(n, R), j), rel=1e-12)
            assert r.stderr <= 1e-12


def test_ball_quermass_by_quadrature():
    f = LogConcaveFunction.characteristic_ball(3)
    r = quermassintegral(f, 1, mode="axis", plan=GridPlan(1.25, 257))
    assert r.value == pytest.approx(omega(3), rel=0.01)


def test_gaussian_quermass_rotation_invariant():
    r = quermassintegral(LogConcaveFunction.gaussian(3), 1, mode="mc", samples=32, seed=0)
    assert r.value == pytest.approx(omega(3) / omega(2) * 2 * math.pi, rel=1e-12)
    assert r.stderr <= 1e-12
    q = quermassintegral(LogConcaveFunction.gaussian(3), 1, mode="mc", samples=8, seed=0, plan=GridPlan(6.0, 65))
    assert q.value == pytest.approx(omega(3) / omega(2) * 2 * math.pi, rel=1e-3)


def test_w0_is_total_mass(rng):
    f = LogConcaveFunction(Quadratic(spd(rng, 3)))
    assert quermassintegral(f, 0).value == total_mass(f).value


def test_invalid_j():
    with pytest.raises(ValueError):
        quermassintegral(LogConcaveFunction.gaussian(2), 2)


def test_monotonicity(rng):
    for _ in range(10):
        Q = spd(rng, 3)
        f = LogConcaveFunction(Quadratic(Q + spd(rng, 3), c=rng.uniform(0, 1)))  # f <= g
        g = LogConcaveFunction(Quadratic(Q))
        for j in range(3):
            a = quermassintegral(f, j, samples=64, seed=1)
            b = quermassintegral(g, j, samples=64, seed=1)
            assert a.value <= b.value


def test_thread_count_does_not_change_bits():
    f = LogConcaveFunction(Quadratic(np.diag([1.0, 2.0, 3.0])))
    a = quermassintegral(f, 1, samples=16, seed=4, plan=GridPlan(6.0, 33), threads=1)
    b = quermassintegral(f, 1, samples=16, seed=4, plan=GridPlan(6.0, 33), threads=4)
    assert a.to_dict() == b.to_dict()


def test_result_serialises():
    d = quermassintegral(LogConcaveFunction.gaussian(2), 1, samples=4, seed=2).to_dict()
    assert {"value", "stderr", "method", "config", "warnings"} <= set(d)
    assert d["config"]["seed"] == 2


# -- mixed quermassintegrals ------------------------------------------------------


def test_extrapolation_weights():
    ts = [0.08, 0.04, 0.02]
    w = extrapolation_weights(ts)
    assert w.sum() == pytest.approx(1.0)
    # exact for quadratics in t
    p = lambda t: 3.0 - 2.0 * t + 5.0 * t**2
    assert w @ np.array([p(t) for t in ts]) == pytest.approx(3.0)


def test_fd_ball_pair():
    f = LogConcaveFunction.characteristic_ball(3)
    r = mixed_quermass_fd(f, f, 1, samples=8)
    assert r.value == pytest.approx(omega(3), rel=1e-9)
    assert r.details["converged"]


def test_fd_gaussian_pair():
    f = LogConcaveFunction.gaussian(2)
    assert mixed_quermass_fd(f, f, 0).value == pytest.approx(math.pi, rel=1e-9)


def test_fd_point_indicator_is_zero():
    f = LogConcaveFunction.gaussian(2)
    assert abs(mixed_quermass_fd(f, LogConcaveFunction(point_indicator(2)), 1, samples=8).value) < 1e-12


def test_fd_gaussian_with_grid_plan():
    f = LogConcaveFunction.gaussian(2)
    r = mixed_quermass_fd(f, f, 0, plan=GridPlan(6.0, 129))
    assert r.value == pytest.approx(math.pi, rel=0.01)


def test_representation_gaussian():
    f = LogConcaveFunction.gaussian(2)
    r = mixed_quermass_representation(f, f, 0, plan=GridPlan(6.0, 129))
    assert r.value == pytest.approx(gaussian_moments(2, 2) / 2 / 2, rel=1e-3)  # (1/2) int |x|^2/2 f


def test_representation_matches_fd(rng):
    f = LogConcaveFunction(Quadratic(spd(rng, 3)))
    g = LogConcaveFunction(Quadratic(spd(rng, 3)))
    kw = dict(samples=16, seed=5)
    fd = mixed_quermass_fd(f, g, 1, **kw)
    rep = mixed_quermass_representation(f, g, 1, plan=GridPlan(6.0, 65), **kw)
    budget = fd.details["extrapolation_error"] + 2 * (fd.stderr + rep.stderr) + 0.02 * abs(fd.value)
    assert abs(fd.value - rep.value) <= budget


def test_representation_needs_gradient():
    f = LogConcaveFunction.characteristic_ball(2)
    with pytest.raises(ValueError):
        mixed_quermass_representation(f, f, 0, plan=GridPlan(1.5, 33))


def test_linear_in_second_argument(rng):
    f, g, h = (LogConcaveFunction(Quadratic(spd(rng, 2))) for _ in range(3))
    gh = asplund_sum(g, h, 1.0, 1.0)
    for j in (0, 1):
        kw = dict(samples=32, seed=1)
        a = mixed_quermass_fd(f, gh, j, **kw).value
        b = mixed_quermass_fd(f, g, j, **kw).value + mixed_quermass_fd(f, h, j, **kw).value
        assert a == pytest.approx(b, rel=1e-3)
        plan = GridPlan(7.0, 129)
        a = mixed_quermass_representation(f, gh, j, plan=plan, **kw).value
        b = (mixed_quermass_representation(f, g, j, plan=plan, **kw).value
             + mixed_quermass_representation(f, h, j, plan=plan, **kw).value)
        assert a == pytest.approx(b, rel=1e-9)


def test_blaschke_petkantschin():
    for n, i, f in ((2, 1, LogConcaveFunction.gaussian(2)), (3, 2, LogConcaveFunction.characteristic_ball(3))):
        plan = GridPlan(6.0, 129) if n == 2 else GridPlan(1.25, 129)
        r = blaschke_petkantschin_check(f, i, samples=32, seed=0, plan=plan, quad_budget=0.01 if n == 2 else 0.03)
        assert r["passed"], r
        assert r["stderr"] <= 1e-9 * r["lhs"]  # rotation invariant integrand


def test_bp_inner_integrals():
    # 1-D weighted Gaussian integral equals 2; the disk integral of |x| equals 2 pi / 3
    xi = axis_subspaces(2, 1)[0]
    r = blaschke_petkantschin_check(LogConcaveFunction.gaussian(2), 1, samples=1, plan=GridPlan(6.0, 257))
    assert r["rhs"] / r["constant"] == pytest.approx(2.0, rel=1e-3)
    r = blaschke_petkantschin_check(LogConcaveFunction.characteristic_ball(3), 2, samples=1, plan=GridPlan(1.25, 257))
    assert r["rhs"] / r["constant"] == pytest.approx(2 * math.pi / 3, rel=0.02)
    assert xi.sub_dim == 1


@pytest.mark.parametrize("d", [0.0, -1.0, 1.0])
def test_existence_bound(d):
    f = LogConcaveFunction.gaussian(2)
    g = LogConcaveFunction(Quadratic.isotropic(2, c=d))
    r = existence_bound_check(f, g, 1, samples=8)
    assert r["d"] == pytest.approx(d)
    assert r["bound"] == pytest.approx(-max(d, 0.0) * r["W_f"])
    assert r["holds"]


def test_constant_factor_shift():
    # g e^{-d} moves the first variation by -d W_j(f) / (n - j)
    f = LogConcaveFunction(Quadratic(np.diag([1.0, 2.0, 0.5])))
    v = Quadratic(np.diag([0.7, 1.3, 1.0]))
    kw = dict(samples=16, seed=2)
    base = mixed_quermass_fd(f, LogConcaveFunction(v), 1, **kw)
    for d in (0.5, -0.25):
        shifted = mixed_quermass_fd(f, LogConcaveFunction(Quadratic(v.Q, c=d)), 1, **kw)
        assert shifted.value == pytest.approx(base.value - d * base.details["W_f"] / 2, rel=1e-4)


def test_translation_of_g_is_invisible():
    f = LogConcaveFunction(Quadratic(np.diag([1.0, 2.0])))
    Q = np.diag([0.7, 1.3])
    a = np.array([0.4, -0.8])
    g0 = LogConcaveFunction(Quadratic(Q))
    g1 = LogConcaveFunction(Quadratic(Q, -Q @ a, 0.5 * a @ Q @ a))  # v(x - a)
    assert reduce_translation(g1.u)[1] == pytest.approx(a)
    for j in (0, 1):
        w0 = mixed_quermass_fd(f, g0, j, samples=16, seed=3).value
        w1 = mixed_quermass_fd(f, g1, j, samples=16, seed=3).value
        assert w1 == pytest.approx(w0, rel=1e-9)


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_homogeneity(lam, rng):
    Q = spd(rng, 3)
    for j in range(3):
        a = quermassintegral(LogConcaveFunction(scalar_right_mul(Quadratic(Q), lam)), j, samples=64, seed=0).value
        b = quermassintegral(LogConcaveFunction(Quadratic(lam * Q)), j, samples=64, seed=0).value
        assert a == pytest.approx(lam ** (3 - j) * b, rel=0.01)


def test_common_random_numbers_reduce_variance():
    f = LogConcaveFunction(Quadratic(np.diag([0.3, 1.0, 4.0])))
    g = LogConcaveFunction(Quadratic(np.diag([2.0, 1.0, 0.5])))
    kw = dict(samples=64, seed=9)
    crn = mixed_quermass_fd(f, g, 1, common_samples=True, **kw)
    ind = mixed_quermass_fd(f, g, 1, common_samples=False, **kw)
    assert ind.stderr**2 >= 10 * crn.stderr**2


def test_result_type():
    r = mixed_quermass_fd(LogConcaveFunction.gaussian(2), LogConcaveFunction.gaussian(2), 0)
    assert isinstance(r, QuermassResult) and r.method == "fd"
    assert IndicatorBall(1.0, 2).dim == 2
