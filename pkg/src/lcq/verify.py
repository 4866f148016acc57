"""The invariant battery behind ``lcq verify``.

Every check returns ``Row`` records (measured value, reference, residual,
budget). Checks are deterministic given the seed; nothing here depends on
wall-clock time or on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .convex import (
    GridFunction,
    IndicatorBall,
    IndicatorBox,
    LogConcaveFunction,
    Quadratic,
    sample_to_grid,
)
from .geometry import omega
from .grid import GridPlan, GridSpec
from .legendre import (
    asplund_derivative_check,
    asplund_limit_check,
    asplund_monotonicity_check,
    asplund_sum,
    biconjugation_error,
    conjugate,
    conjugate_bruteforce,
    gradient_bijection_check,
    inf_convolution,
    scalar_right_mul,
    support_function,
    suggest_dual_grid,
)
from .projection import HaarSampler, dt_projection_derivative_check, project_properties_check
from .quermass import (
    blaschke_petkantschin_check,
    existence_bound_check,
    mixed_quermass_fd,
    mixed_quermass_representation,
    quermassintegral,
    total_mass,
)

COLUMNS = ("test", "value", "reference", "residual", "budget", "pass")


@dataclass(frozen=True)
class Row:
    test: str
    value: float
    reference: float
    residual: float
    budget: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.budget)

    def as_list(self) -> list:
        return [self.test, repr(float(self.value)), repr(float(self.reference)),
                repr(float(self.residual)), repr(float(self.budget)), "pass" if self.passed else "FAIL"]


def _abs_row(test, value, reference, budget) -> Row:
    return Row(test, value, reference, abs(value - reference), budget)


def _rel_row(test, value, reference, budget) -> Row:
    return Row(test, value, reference, abs(value - reference) / abs(reference), budget)


def _bound_row(test, value, budget) -> Row:
    """``value <= budget`` with the residual being the value itself."""
    return Row(test, value, 0.0, value, budget)


def random_spd(rng: np.random.Generator, n: int, lo: float = 0.5, hi: float = 3.0) -> np.ndarray:
    """SPD matrix with eigenvalues drawn from ``[lo, hi]`` in a random frame."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (q * rng.uniform(lo, hi, n)) @ q.T


# -- conjugates ----------------------------------------------------------------


def conjugate_checks(seed: int = 0, brute_count_3d: int = 17) -> list[Row]:
    rng = np.random.default_rng([seed, 1])
    rows = []
    # arbitrary (even non-convex, partly masked) node data: both sides are exact maxima
    for n, count in ((1, 1025), (2, 33), (3, brute_count_3d)):
        g = GridSpec.cube(n, 2.0, count)
        vals = rng.uniform(-1, 1, g.shape) + 0.5 * np.sum(g.nodes() ** 2, axis=-1)
        finite = rng.uniform(size=g.shape) > 0.2
        finite.flat[0] = True
        u = GridFunction(g, vals, finite)
        dual = GridSpec.cube(n, 3.0, count)
        fast = conjugate(u, dual).node_values
        brute = conjugate_bruteforce(u, dual).node_values
        rows.append(_bound_row(f"conjugate.fast_vs_brute.n{n}.{count}", float(np.max(np.abs(fast - brute))), 1e-12))

    def quad_error(count):
        g = GridSpec.cube(1, 4.0, count)
        d = GridSpec.cube(1, 3.0, count)
        c = conjugate(sample_to_grid(Quadratic.isotropic(1), g), d)
        return float(np.max(np.abs(c.node_values - 0.5 * d.nodes()[..., 0] ** 2)))

    def cube_error(count):
        g = GridSpec.cube(2, 2.0, count)
        d = GridSpec.cube(2, 3.0, count)
        c = conjugate(sample_to_grid(IndicatorBox(np.ones(2)), g), d)
        return float(np.max(np.abs(c.node_values - np.abs(d.nodes()).sum(axis=-1))))

    for name, fn in (("half_square", quad_error), ("cube", cube_error)):
        e1, e2 = fn(257), fn(513)
        rows.append(_bound_row(f"conjugate.closed_form.{name}.257", e1, 1e-3))
        rows.append(Row(f"conjugate.refinement.{name}", e2, e1, e2 - 0.5 * e1, 1e-15))
    return rows


def bijection_checks(seed: int = 0, points: int = 32) -> list[Row]:
    rng = np.random.default_rng([seed, 2])
    rows = []
    for n, count in ((1, 257), (2, 129), (3, 49)):
        for label, Q in (("gaussian", np.eye(n)), ("anisotropic", np.diag(np.linspace(1.0, 4.0, n)))):
            g = GridSpec.cube(n, 4.0, count)
            u = sample_to_grid(Quadratic(Q), g)
            dual = suggest_dual_grid(u)
            b = biconjugation_error(u, dual)
            rows.append(Row(f"biconjugation.{label}.n{n}", b["max_error"], 0.0, b["max_error"], b["bound"]))
            pts = rng.uniform(-1.5, 1.5, (points, n))
            r = gradient_bijection_check(u, pts, dual)
            h = max(g.h, dual.h)
            rows.append(_bound_row(f"gradient_inverse.{label}.n{n}", r["max_inverse_residual"], 5 * h))
            rows.append(_bound_row(f"fenchel_equality.{label}.n{n}", r["max_fenchel_residual"], 5 * h))
    return rows


# -- quermass engine -----------------------------------------------------------


def representation_checks(seed: int = 0, samples: int = 256) -> list[Row]:
    rows = []
    for n, j in ((2, 0), (2, 1), (3, 0), (3, 1)):
        f = LogConcaveFunction.gaussian(n)
        plan = GridPlan(6.0, 129 if n == 2 else 65)
        fd = mixed_quermass_fd(f, f, j, t_steps=(0.08, 0.04, 0.02), samples=samples, seed=seed, plan=plan)
        rep = mixed_quermass_representation(f, f, j, samples=samples, seed=seed, plan=plan)
        rows.append(_rel_row(f"representation_vs_fd.n{n}.j{j}", rep.value, fd.value, 0.02))
        if (n, j) == (2, 0):
            rows.append(_rel_row("representation_vs_fd.anchor_pi.fd", fd.value, math.pi, 0.01))
            rows.append(_rel_row("representation_vs_fd.anchor_pi.representation", rep.value, math.pi, 0.01))
    return rows


def indicator_checks(seed: int = 0, samples: int = 256) -> list[Row]:
    rows = []
    for n in (2, 3):
        B = LogConcaveFunction.characteristic_ball(n)
        plan = GridPlan(1.25, 257 if n == 2 else 129)
        for j in range(n):
            a = quermassintegral(B, j, mode="axis", plan=plan)
            rows.append(_rel_row(f"ball_quermass.axis.n{n}.j{j}", a.value, omega(n), 0.01))
            m = quermassintegral(B, j, mode="mc", samples=samples, seed=seed, plan=plan)
            rows.append(_rel_row(f"ball_quermass.mc.n{n}.j{j}", m.value, omega(n), 0.01))
            rows.append(_bound_row(f"ball_quermass.mc_stderr.n{n}.j{j}", m.stderr, 1e-3))
            mixed = mixed_quermass_fd(B, B, j, samples=samples, seed=seed)
            rows.append(_rel_row(f"ball_mixed_fd.n{n}.j{j}", mixed.value, omega(n), 0.03))
    return rows


def bp_checks(seed: int = 0, samples: int = 256) -> list[Row]:
    rows = []
    for n, i in ((2, 1), (3, 2)):
        f = LogConcaveFunction.gaussian(n)
        r = blaschke_petkantschin_check(f, i, samples=samples, seed=seed, plan=GridPlan(6.0, 129 if n == 2 else 65))
        rows.append(Row(f"blaschke_petkantschin.n{n}.i{i}", r["rhs"], r["lhs"], r["relative_gap"], r["budget"]))
    return rows


def lemma_checks(seed: int = 0) -> list[Row]:
    rng = np.random.default_rng([seed, 6])
    rows = []
    for n in (1, 2, 3):
        u = Quadratic(random_spd(rng, n))
        v = Quadratic(random_spd(rng, n))
        pts = rng.uniform(-2, 2, (16, n))
        mono = asplund_monotonicity_check(u, v, pts)
        rows.append(_bound_row(f"asplund_monotone.u.n{n}", mono["u_violations"], 0))
        rows.append(_bound_row(f"asplund_monotone.f.n{n}", mono["f_violations"], 0))
        lim = asplund_limit_check(u, v, pts)
        rows.append(Row(f"asplund_limit.n{n}", lim["errors"][-1], 0.0,
                        0.0 if lim["monotone_decay"] else 1.0, 0.0))
        x = rng.uniform(-1, 1, n)
        rows.append(_bound_row(f"asplund_derivative.n{n}", asplund_derivative_check(u, v, 0.5, x), 1e-4))
    # the same monotonicity on grid-form inputs
    g = GridSpec.cube(2, 4.0, 65)
    ug = sample_to_grid(Quadratic(random_spd(rng, 2)), g)
    vg = sample_to_grid(Quadratic(random_spd(rng, 2)), g)
    mono = asplund_monotonicity_check(ug, vg, g.nodes()[16:49:4, 16:49:4].reshape(-1, 2))
    rows.append(_bound_row("asplund_monotone.grid.n2", mono["u_violations"] + mono["f_violations"], 0))
    for n, i in ((2, 1), (3, 1), (3, 2)):
        xi = HaarSampler(seed).sample(0, n, i)
        u = Quadratic(random_spd(rng, n))
        v = Quadratic(random_spd(rng, n))
        x = rng.uniform(-1, 1, i)
        rows.append(_bound_row(f"projection_derivative.n{n}.i{i}",
                               dt_projection_derivative_check(u, v, xi, 0.5, x), 1e-4))
    return rows


def structure_checks(seed: int = 0, samples: int = 256) -> list[Row]:
    rng = np.random.default_rng([seed, 7])
    rows = []
    pts = rng.uniform(-2, 2, (64, 3))
    u = Quadratic(random_spd(rng, 3), rng.normal(size=3), 0.3)
    v = Quadratic(random_spd(rng, 3), rng.normal(size=3), -0.2)
    lhs = conjugate(inf_convolution(u, v)).values(pts)
    rhs = conjugate(u).values(pts) + conjugate(v).values(pts)
    rows.append(_bound_row("conjugate_of_inf_convolution", float(np.max(np.abs(lhs - rhs))), 1e-9))
    for alpha in (0.5, 2.0):
        lhs = conjugate(scalar_right_mul(u, alpha)).values(pts)
        rows.append(_bound_row(f"conjugate_of_right_multiple.{alpha}",
                               float(np.max(np.abs(lhs - alpha * conjugate(u).values(pts)))), 1e-9))
    f, g = LogConcaveFunction(u), LogConcaveFunction(v)
    hs = support_function(asplund_sum(f, g, 1.0, 1.0)).values(pts)
    rows.append(_bound_row("support_function_additive",
                           float(np.max(np.abs(hs - support_function(f).values(pts) - support_function(g).values(pts)))),
                           1e-6))
    # projection commutes with the Asplund sum, both sides on grids
    f2 = LogConcaveFunction.gaussian(2)
    g2 = LogConcaveFunction(Quadratic(np.diag([1.0, 3.0])))
    amb, line = GridSpec.cube(2, 6.0, 129), GridSpec.cube(1, 6.0, 129)
    r = project_properties_check(f2, g2, HaarSampler(seed).sample(0, 2, 1), 1.0, 1.0, amb, line, line)
    rows.append(_bound_row("projection_structure.n2.i1", r["structure_residual"], 3 * r["h"]))
    # linearity of W_j(f, .) on a Gaussian triple
    f3, g3, h3 = (LogConcaveFunction(Quadratic(random_spd(rng, 3))) for _ in range(3))
    kw = dict(samples=samples, seed=seed)
    w_sum = mixed_quermass_fd(f3, asplund_sum(g3, h3, 1.0, 1.0), 1, **kw).value
    w_parts = mixed_quermass_fd(f3, g3, 1, **kw).value + mixed_quermass_fd(f3, h3, 1, **kw).value
    rows.append(_rel_row("mixed_linear_in_second_argument.n3.j1", w_sum, w_parts, 0.02))
    # W_j(lam . f) = lam^(n-j) W_j(f^lam)
    for lam in (0.5, 2.0):
        a = quermassintegral(LogConcaveFunction(scalar_right_mul(f3.u, lam)), 1, **kw).value
        b = quermassintegral(LogConcaveFunction(Quadratic(lam * f3.u.Q)), 1, **kw).value
        rows.append(_rel_row(f"homogeneity.lambda{lam}", a, lam**2 * b, 0.01))
    return rows


# -- inequalities ----------------------------------------------------------------


def random_pair(rng: np.random.Generator, n: int = 2):
    """A seeded pair ``(f, g, kind)``; Gaussians carry a random level shift."""
    kind = ("gaussian", "ball", "box", "mixed")[int(rng.integers(4))]

    def gauss():
        return LogConcaveFunction(Quadratic(random_spd(rng, n), None, float(rng.uniform(-1, 1))))

    if kind == "gaussian":
        return gauss(), gauss(), kind
    if kind == "ball":
        return (LogConcaveFunction(IndicatorBall(float(rng.uniform(0.5, 2)), n)),
                LogConcaveFunction(IndicatorBall(float(rng.uniform(0.5, 2)), n)), kind)
    if kind == "box":
        return (LogConcaveFunction(IndicatorBox(rng.uniform(0.5, 2, n))),
                LogConcaveFunction(IndicatorBox(rng.uniform(0.5, 2, n))), kind)
    return LogConcaveFunction(IndicatorBall(float(rng.uniform(0.5, 2)), n)), gauss(), kind


MIXED_PLAN = GridPlan(8.0, 257, dual_half_width=16.0, dual_count=257)


def inequality_checks(seed: int = 0, pairs: int = 50) -> list[Row]:
    rng = np.random.default_rng([seed, 8])
    worst_pl = math.inf
    worst_bound = math.inf
    marginal = 0
    for _ in range(pairs):
        f, g, kind = random_pair(rng)
        plan = MIXED_PLAN if kind == "mixed" else None
        grid = plan.ambient(2) if plan else None
        dual = plan.dual(2) if plan else None
        Jf = total_mass(f).value
        Jg = total_mass(g).value
        for lam in (0.25, 0.5, 0.75):
            s = asplund_sum(f, g, lam, 1 - lam, grid, dual)
            J = total_mass(s, grid if isinstance(s.u, GridFunction) else None).value
            rhs = Jf**lam * Jg ** (1 - lam)
            worst_pl = min(worst_pl, (J - rhs) / rhs)
        r = existence_bound_check(f, g, 0, samples=1, seed=seed, plan=plan)
        scale = max(abs(r["bound"]), abs(r["W_f"]))
        worst_bound = min(worst_bound, (r["value"] - r["bound"]) / scale)
        marginal += int(r["marginal"])
    return [
        Row("prekopa_leindler.worst_relative_margin", worst_pl, 0.0, max(-worst_pl, 0.0), 1e-6),
        Row("existence_bound.worst_relative_margin", worst_bound, 0.0, max(-worst_bound, 0.0), 1e-6),
        Row("existence_bound.marginal_cases", marginal, 0.0, 0.0, 0.0),
    ]


BATTERY: tuple[tuple[str, Callable[..., list[Row]]], ...] = (
    ("conjugate", conjugate_checks),
    ("bijection", bijection_checks),
    ("representation", representation_checks),
    ("indicator", indicator_checks),
    ("blaschke_petkantschin", bp_checks),
    ("lemmas", lemma_checks),
    ("structure", structure_checks),
    ("inequalities", inequality_checks),
)


def run_battery(seed: int = 42, only: Optional[Iterable[str]] = None) -> list[Row]:
    wanted = set(only) if only else None
    rows: list[Row] = []
    for name, check in BATTERY:
        if wanted is None or name in wanted:
            rows.extend(check(seed=seed))
    return rows


def rows_to_csv(rows: list[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.as_list())
    return buf.getvalue()
