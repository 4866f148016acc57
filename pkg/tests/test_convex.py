import json

import numpy as np
import pytest

from lcq.convex import (
    ConvexityError,
    DimensionError,
    GridFunction,
    IndicatorBall,
    IndicatorBox,
    LogConcaveFunction,
    NormMultiple,
    Quadratic,
    evaluate,
    from_spec,
    load_spec,
    read_grid_csv,
    sample_to_grid,
    suggest_box,
    validate_class,
    write_grid_csv,
)
from lcq.grid import GridSpec


def test_evaluate_quadratic():
    r = evaluate(Quadratic.isotropic(2), [1.0, 1.0])
    assert r.value == 1.0
    np.testing.assert_allclose(r.gradient, [1.0, 1.0])


def test_evaluate_indicators():
    assert np.isinf(evaluate(IndicatorBall(1.0, 2), [2.0, 0.0]).value)
    r = evaluate(IndicatorBox([1.0, 1.0]), [0.5, -0.5])
    assert r.value == 0.0 and r.gradient is None


def test_evaluate_errors():
    with pytest.raises(DimensionError):
        evaluate(Quadratic.isotropic(2), [1.0, 2.0, 3.0])
    u = sample_to_grid(Quadratic.isotropic(1), GridSpec.cube(1, 1.0, 5))
    with pytest.raises(ValueError):
        evaluate(u, [1.5])


def test_sample_quadratic_nodes():
    u = sample_to_grid(Quadratic.isotropic(1), GridSpec.cube(1, 2.0, 9))
    np.testing.assert_allclose(u.node_values, [2, 1.125, 0.5, 0.125, 0, 0.125, 0.5, 1.125, 2])


def test_sample_ball_mask():
    u = sample_to_grid(IndicatorBall(1.0, 1), GridSpec.cube(1, 2.0, 5))
    np.testing.assert_array_equal(u.finite, [False, True, True, True, False])
    assert np.all(u.node_values[u.finite] == 0)


def test_sample_norm():
    u = sample_to_grid(NormMultiple(1.0, 1), GridSpec.cube(1, 1.0, 3))
    np.testing.assert_allclose(u.node_values, [1, 0, 1])


def test_nonconvex_grid_rejected():
    g = GridSpec.cube(1, 1.0, 5)
    wavy = GridFunction.from_values(g, np.array([0.0, 1.0, 0.0, 1.0, 0.0]))
    with pytest.raises(ConvexityError):
        sample_to_grid(wavy, g)
    bad = GridFunction(g, np.zeros(5), np.array([True, False, True, True, True]))
    from lcq.convex import discretely_convex

    assert not discretely_convex(bad.node_values, bad.finite)


def test_interpolation_second_order(rng):
    u = Quadratic(np.array([[2.0, 0.3], [0.3, 1.0]]))
    pts = rng.uniform(-1.5, 1.5, (200, 2))
    errs = []
    for count in (33, 65, 129):
        ug = sample_to_grid(u, GridSpec.cube(2, 2.0, count))
        errs.append(np.abs(ug.values(pts) - u.values(pts)).max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.3 * errs[1]


def test_grid_gradient_interior_only():
    ug = sample_to_grid(Quadratic.isotropic(1), GridSpec.cube(1, 2.0, 41))
    np.testing.assert_allclose(ug.gradient([[0.5]]), [[0.5]], atol=1e-12)
    assert np.isnan(ug.gradient([[2.0]])).all()


def test_validate_class_reports():
    assert validate_class(Quadratic.isotropic(2)) == {
        "kind": "quadratic", "proper": True, "convex": True, "coercive": True,
        "superlinear": True, "coercive_fit": None,
    }
    assert validate_class(NormMultiple(1.0, 2))["superlinear"] is False
    ug = sample_to_grid(Quadratic.isotropic(1), GridSpec.cube(1, 4.0, 65))
    rep = validate_class(ug)
    assert rep["coercive"] and rep["superlinear"] is None
    # oracle: least-squares line through the two outermost shells {|x| = 3.875, 4}
    r = np.array([3.875, 4.0])
    a_ls = np.polyfit(r, 0.5 * r**2, 1)[0]
    assert rep["coercive_fit"]["a"] == pytest.approx(a_ls)


def test_ordering_of_log_concave(rng):
    g = GridSpec.cube(2, 2.0, 17)
    u1 = Quadratic.isotropic(2)
    u2 = Quadratic.isotropic(2, c=0.5)
    pts = g.nodes().reshape(-1, 2)[rng.choice(g.size, 50)]
    assert np.all(u1.values(pts) <= u2.values(pts))
    assert np.all(LogConcaveFunction(u1)(pts) >= LogConcaveFunction(u2)(pts))


def test_suggest_box_gaussian():
    lo, hi = suggest_box(Quadratic(np.diag([1.0, 4.0])))
    np.testing.assert_allclose(hi, [6.0, 3.0])
    np.testing.assert_allclose(lo, [-6.0, -3.0])


def test_grid_csv_roundtrip(tmp_path):
    ug = sample_to_grid(IndicatorBall(1.0, 2), GridSpec.box([-2, -1], [2, 1], [5, 3]))
    path = tmp_path / "u.csv"
    write_grid_csv(ug, path)
    text = path.read_text().splitlines()
    assert text[0] == "2" and "inf" in text[3]
    back = read_grid_csv(path)
    assert back.grid == ug.grid
    np.testing.assert_array_equal(back.finite, ug.finite)


def test_spec_files(tmp_path):
    (tmp_path / "q.json").write_text(json.dumps({"kind": "quadratic", "scale": 2.0}))
    u = load_spec(tmp_path / "q.json", dim=3)
    assert isinstance(u, Quadratic) and u.dim == 3
    assert isinstance(from_spec({"kind": "indicator_ball", "radius": 2.0}, 2), IndicatorBall)
    with pytest.raises(ValueError):
        from_spec({"kind": "nope"}, 2)
    ug = sample_to_grid(Quadratic.isotropic(1), GridSpec.cube(1, 1.0, 5))
    write_grid_csv(ug, tmp_path / "g.csv")
    (tmp_path / "g.json").write_text(json.dumps({"kind": "grid", "csv": "g.csv"}))
    back = load_spec(tmp_path / "g.json")
    np.testing.assert_allclose(back.node_values, ug.node_values)
