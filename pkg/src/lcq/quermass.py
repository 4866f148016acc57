"""Total masses, functional Quermassintegrals and mixed Quermassintegrals.

``W_{n-i}(f) = (omega_n / omega_i) E[J_i(f)]`` where ``J_i(f)`` is the
integral of the projection ``f|xi`` over a random ``i``-dimensional
subspace. The mixed Quermassintegral ``W_j(f, g)`` is computed two ways:

* ``mixed_quermass_fd`` differentiates ``t -> W_j(f (+) t g)`` at ``0+``
  with one-sided differences and Richardson extrapolation, reusing the
  same subspaces for every ``t``;
* ``mixed_quermass_representation`` integrates ``h_{g|xi}`` against the
  push-forward of ``f|xi dx`` under ``grad(u|xi)`` on each subspace.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .convex import (
    BoxSupport,
    ConvexFunction,
    GridFunction,
    IndicatorBall,
    IndicatorBox,
    LogConcaveFunction,
    NormMultiple,
    Quadratic,
    sample_to_grid,
)
from .geometry import omega
from .grid import GridPlan, GridSpec, trapezoid
from .legendre import conjugate, dual_route
from .projection import HaarSampler, Subspace, axis_subspaces, project_potential

SCHEMA = "lcq/1"


class TailMassError(ValueError):
    """The integrand does not decay inside the quadrature box."""


@dataclass(frozen=True)
class QuermassResult:
    value: float
    stderr: float
    method: str  # "fd" | "representation" | "closed_form" | "quadrature"
    config: dict = field(default_factory=dict)
    warnings: tuple = ()
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "value": self.value,
            "stderr": self.stderr,
            "method": self.method,
            "config": self.config,
            "warnings": list(self.warnings),
            "details": self.details,
        }


def thread_count() -> int:
    env = os.environ.get("LCQ_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map(fn: Callable, items: Sequence, threads: Optional[int] = None) -> list:
    """Ordered map; results are reduced by the caller in input order."""
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def subspaces(n: int, i: int, mode: str = "mc", samples: int = 256, seed: Optional[int] = None) -> list[Subspace]:
    """Subspaces of dimension ``i`` to average over.

    ``axis`` enumerates coordinate subspaces; the resulting average equals
    the Haar average only for rotation-invariant integrands.
    """
    if mode == "axis":
        return axis_subspaces(n, i)
    if mode == "mc":
        if seed is None:
            raise ValueError("mode 'mc' needs a seed")
        return HaarSampler(seed).take(samples, n, i)
    raise ValueError(f"unknown mode {mode!r}")


def _identity_subspace(n: int) -> Subspace:
    return Subspace(np.eye(n), np.zeros((n, 0)))


# -- total mass ---------------------------------------------------------------


def closed_form_mass(u: ConvexFunction) -> Optional[float]:
    n = u.dim
    if isinstance(u, Quadratic):
        Pb = np.linalg.solve(u.Q, u.b)
        return float((2 * math.pi) ** (n / 2) / math.sqrt(np.linalg.det(u.Q)) * math.exp(0.5 * u.b @ Pb - u.c))
    if isinstance(u, IndicatorBall):
        return omega(n) * u.radius**n
    if isinstance(u, IndicatorBox):
        return float(np.prod(2 * u.halfwidths))
    if isinstance(u, NormMultiple) and u.a > 0:
        return n * omega(n) * math.factorial(n - 1) / u.a**n
    if isinstance(u, BoxSupport) and np.all(u.weights > 0):
        return float(np.prod(2 / u.weights))
    return None


def _grid_mass(f_vals: np.ndarray, grid: GridSpec, tail_tol: float) -> float:
    peak = float(f_vals.max()) if f_vals.size else 0.0
    if peak > 0:
        edge = f_vals[~grid.interior_mask(1)]
        if edge.size and edge.max() > tail_tol * peak:
            raise TailMassError(
                f"f reaches {edge.max() / peak:.2e} of its peak on the box boundary (budget {tail_tol:.0e})"
            )
    return trapezoid(f_vals, grid)


def total_mass(
    f: LogConcaveFunction,
    grid: Optional[GridSpec] = None,
    closed_form: bool = True,
    tail_tol: float = 1e-6,
) -> QuermassResult:
    """``J(f) = int f dx``, trapezoidal on ``grid`` unless a closed form applies."""
    config = {"grid": grid.to_dict() if grid is not None else None, "closed_form": closed_form}
    if closed_form:
        m = closed_form_mass(f.u)
        if m is not None:
            return QuermassResult(m, 0.0, "closed_form", config)
    if grid is None:
        if isinstance(f.u, GridFunction):
            grid = f.u.grid
            config["grid"] = grid.to_dict()
        else:
            raise ValueError("quadrature needs a grid")
    vals = np.exp(-np.asarray(f.u.values(grid.nodes())))
    warnings = getattr(f.u, "warnings", ())
    return QuermassResult(_grid_mass(vals, grid, tail_tol), 0.0, "quadrature", config, tuple(warnings))


def _projected_mass(u: ConvexFunction, xi: Subspace, plan: Optional[GridPlan], closed_form: bool, tail_tol: float):
    i, n = xi.sub_dim, xi.ambient_dim
    target = plan.target(i) if plan is not None else None
    fiber = plan.fiber(n - i) if plan is not None else None
    up = project_potential(u, xi, target, fiber, closed_form)
    if closed_form and plan is None:
        m = closed_form_mass(up)
        if m is not None:
            return m, ()
    if target is None:
        raise ValueError("quadrature needs a GridPlan")
    if isinstance(up, GridFunction) and up.grid == target:
        vals = np.exp(-up.node_values)
    else:
        vals = np.exp(-np.asarray(up.values(target.nodes())))
    return _grid_mass(vals, target, tail_tol), getattr(up, "warnings", ())


def i_total_mass(
    f: LogConcaveFunction,
    xi: Optional[Subspace],
    plan: Optional[GridPlan] = None,
    closed_form: bool = True,
    tail_tol: float = 1e-6,
) -> QuermassResult:
    """``J_i(f) = int_xi f|xi``; ``xi = None`` means ``i = 0`` and returns ``omega_n``."""
    if xi is None:
        return QuermassResult(omega(f.dim), 0.0, "closed_form", {"i": 0})
    m, warnings = _projected_mass(f.u, xi, plan, closed_form, tail_tol)
    config = {"i": xi.sub_dim, "plan": plan.to_dict() if plan else None, "closed_form": closed_form}
    method = "closed_form" if closed_form and plan is None else "quadrature"
    return QuermassResult(m, 0.0, method, config, tuple(warnings))


def _average(values: np.ndarray, scale: float, mode: str) -> tuple[float, float]:
    mean = float(np.mean(values, axis=-1)) if values.ndim == 1 else np.mean(values, axis=-1)
    if mode == "mc" and values.shape[-1] > 1:
        se = scale * np.std(values, axis=-1, ddof=1) / math.sqrt(values.shape[-1])
    else:
        se = 0.0 * scale
    return scale * mean, se


def _check_j(n: int, j: int):
    if not 0 <= j <= n - 1:
        raise ValueError(f"need 0 <= j <= n-1 = {n - 1}, got j={j}")


def _per_subspace_masses(us, n, j, mode, samples, seed, plan, closed_form, tail_tol, threads, seeds=None):
    """``J_{n-j}`` of each potential in ``us`` over a common (or per-item) subspace list."""
    i = n - j
    if j == 0:
        out = []
        for u in us:
            r = total_mass(LogConcaveFunction(u), plan.ambient(n) if plan else None, closed_form and plan is None, tail_tol)
            out.append((np.array([r.value]), r.warnings))
        return out
    results = []
    shared = subspaces(n, i, mode, samples, seed) if seeds is None else None
    for k, u in enumerate(us):
        subs = shared if shared is not None else subspaces(n, i, mode, samples, seeds[k])
        pairs = _map(lambda xi: _projected_mass(u, xi, plan, closed_form, tail_tol), subs, threads)
        vals = np.array([p[0] for p in pairs])
        warns = tuple(dict.fromkeys(w for p in pairs for w in p[1]))
        results.append((vals, warns))
    return results


def quermassintegral(
    f: LogConcaveFunction,
    j: int,
    mode: str = "mc",
    samples: int = 256,
    seed: Optional[int] = 0,
    plan: Optional[GridPlan] = None,
    closed_form: bool = True,
    tail_tol: float = 1e-6,
    threads: Optional[int] = None,
) -> QuermassResult:
    """``W_j(f) = (omega_n / omega_{n-j}) E[J_{n-j}(f)]``; ``W_0`` is the total mass."""
    n = f.dim
    _check_j(n, j)
    config = {"j": j, "n": n, "mode": mode, "samples": samples if mode == "mc" else None,
              "seed": seed if mode == "mc" else None, "plan": plan.to_dict() if plan else None,
              "closed_form": closed_form}
    if j == 0:
        r = total_mass(f, plan.ambient(n) if plan else None, closed_form and plan is None, tail_tol)
        return QuermassResult(r.value, 0.0, r.method, config, r.warnings)
    i = n - j
    (vals, warns), = _per_subspace_masses([f.u], n, j, mode, samples, seed, plan, closed_form, tail_tol, threads)
    value, se = _average(vals, omega(n) / omega(i), mode)
    method = "closed_form" if (closed_form and plan is None) else "quadrature"
    return QuermassResult(float(value), float(se), method, config, warns, {"J": vals.tolist()})


# -- first variation -----------------------------------------------------------


def reduce_translation(v: ConvexFunction) -> tuple[ConvexFunction, np.ndarray, float]:
    """Translate ``v`` so that its minimum sits at the origin.

    Returns the translated function, the translation and ``d = min v``.
    """
    if isinstance(v, Quadratic):
        x0 = v.minimizer
        return Quadratic(v.Q, None, v.min_value), x0, v.min_value
    if isinstance(v, GridFunction):
        vals = np.where(v.finite, v.node_values, np.inf)
        k = np.unravel_index(int(np.argmin(vals)), v.grid.shape)
        x0 = np.array([ax[i] for ax, i in zip(v.grid.axes(), k)])
        moved = GridFunction(v.grid.shifted(-x0), v.node_values, v.finite, v.warnings)
        return moved, x0, float(vals[k])
    # remaining presets are centred with minimum 0
    return v, np.zeros(v.dim), 0.0


def extrapolation_weights(ts: Sequence[float]) -> np.ndarray:
    """Weights ``w`` with ``D(0) ~ sum_k w_k D(t_k)`` (polynomial extrapolation)."""
    ts = np.asarray(ts, dtype=float)
    w = np.ones(len(ts))
    for k in range(len(ts)):
        for m in range(len(ts)):
            if m != k:
                w[k] *= ts[m] / (ts[m] - ts[k])
    return w


def _fd_weights(ts: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Weights on ``(W(0), W(t_1), ...)`` for the extrapolated slope and for the
    next-lower-order estimate built from the smallest steps."""
    ts = np.asarray(ts, dtype=float)

    def on_w(sub):
        d = extrapolation_weights(ts[sub])
        w = np.zeros(len(ts) + 1)
        w[1 + np.asarray(sub)] = d / ts[sub]
        w[0] = -np.sum(d / ts[sub])
        return w

    full = on_w(list(range(len(ts))))
    lower = on_w(list(range(1, len(ts)))) if len(ts) > 1 else full
    return full, lower


def mixed_quermass_fd(
    f: LogConcaveFunction,
    g: LogConcaveFunction,
    j: int,
    t_steps: Sequence[float] = (0.08, 0.04, 0.02),
    mode: str = "mc",
    samples: int = 256,
    seed: Optional[int] = 0,
    plan: Optional[GridPlan] = None,
    closed_form: bool = True,
    common_samples: bool = True,
    budget: float = 0.05,
    tail_tol: float = 1e-6,
    threads: Optional[int] = None,
) -> QuermassResult:
    """``W_j(f, g) = 1/(n-j) d/dt W_j(f (+) t g)`` at ``t = 0+``.

    ``W(0)`` goes through the same conjugate pipeline as ``W(t)`` so that
    grid discretisation errors cancel in the differences. With
    ``common_samples`` every ``t`` reuses one set of subspaces.
    """
    n = f.dim
    _check_j(n, j)
    ts = sorted((float(t) for t in t_steps), reverse=True)
    if not ts or ts[-1] <= 0:
        raise ValueError("t_steps must be positive")
    v, shift, d = reduce_translation(g.u)
    ambient = plan.ambient(n) if plan is not None else None
    dual = plan.dual(n) if plan is not None else None
    needs_grid = isinstance(f.u, GridFunction) or isinstance(v, GridFunction)
    if needs_grid and ambient is None:
        raise ValueError("grid inputs need a GridPlan")
    us = [dual_route([f.u, v], [1.0, t], ambient, dual) for t in [0.0] + ts]
    seeds = None
    if not common_samples and mode == "mc":
        seeds = [seed + 7919 * k for k in range(len(us))]
    per = _per_subspace_masses(us, n, j, mode, samples, seed, plan, closed_form, tail_tol, threads, seeds)
    J = np.array([p[0] for p in per])  # (len(ts)+1, subspaces)
    warnings = tuple(dict.fromkeys(w for p in per for w in p[1]))
    warnings += tuple(dict.fromkeys(w for u in us for w in getattr(u, "warnings", ())))
    i = n - j
    scale = (omega(n) / omega(i) if j else 1.0) / (n - j)
    full, lower = _fd_weights(ts)
    est = full @ J
    est_lower = lower @ J
    value = scale * float(np.mean(est))
    lower_value = scale * float(np.mean(est_lower))
    if mode == "mc" and J.shape[1] > 1:
        if seeds is None:
            se = scale * float(np.std(est, ddof=1)) / math.sqrt(J.shape[1])
        else:
            se_rows = np.std(J, axis=1, ddof=1) / math.sqrt(J.shape[1])
            se = scale * float(np.sqrt(np.sum((full * se_rows) ** 2)))
    else:
        se = 0.0
    extrap_error = abs(value - lower_value)
    converged = extrap_error <= budget * max(abs(value), 1e-12) + 3 * se
    if not converged:
        warnings += ("Richardson extrapolation did not settle within the budget",)
    W = (omega(n) / omega(i) if j else 1.0) * J.mean(axis=1)
    config = {"j": j, "n": n, "t_steps": ts, "mode": mode, "samples": samples if mode == "mc" else None,
              "seed": seed if mode == "mc" else None, "plan": plan.to_dict() if plan else None,
              "closed_form": closed_form, "common_samples": common_samples}
    details = {"W": W.tolist(), "W_f": float(W[0]), "extrapolation_error": extrap_error,
               "converged": bool(converged), "translation": shift.tolist(), "d": d,
               "one_sided": [float((W[k + 1] - W[0]) / t) / (n - j) for k, t in enumerate(ts)]}
    return QuermassResult(value, se, "fd", config, warnings, details)


# -- integral representation -------------------------------------------------


def _node_gradient(up: GridFunction) -> np.ndarray:
    """Central differences at interior nodes; ``nan`` elsewhere."""
    vals = np.where(up.finite, up.node_values, np.nan)
    grad = np.full(up.grid.shape + (up.grid.dim,), np.nan)
    inner = tuple(slice(1, -1) for _ in range(up.grid.dim))
    for k, h in enumerate(up.grid.spacing):
        fwd = [slice(1, -1)] * up.grid.dim
        bwd = [slice(1, -1)] * up.grid.dim
        fwd[k] = slice(2, None)
        bwd[k] = slice(None, -2)
        grad[inner + (k,)] = (vals[tuple(fwd)] - vals[tuple(bwd)]) / (2 * h)
    return grad


def _pushforward_integral(u, psi, xi, plan, closed_form, tail_tol):
    """``int_xi psi(grad(u|xi)(z)) f|xi(z) dz`` (and the total mass, for reference)."""
    n, i = xi.ambient_dim, xi.sub_dim
    target = plan.target(i)
    up = project_potential(u, xi, target, plan.fiber(n - i), closed_form)
    nodes = target.nodes()
    if isinstance(up, GridFunction):
        if up.grid != target:
            up = GridFunction.from_values(target, up.values(nodes))
        fvals = np.exp(-up.node_values)
        grad = _node_gradient(up)
    elif up.smooth:
        fvals = np.exp(-np.asarray(up.values(nodes)))
        grad = up.gradient(nodes)
    else:
        raise ValueError("gradient unavailable: the representation needs a smooth potential")
    ok = np.all(np.isfinite(grad), axis=-1) & (fvals > 0)
    psi_vals = np.zeros(target.shape)
    pts = xi.embed(grad[ok])
    pv = np.asarray(psi.values(pts))
    warnings = list(getattr(up, "warnings", ()))
    bad = ~np.isfinite(pv)
    if np.any(bad & (fvals[ok] > tail_tol * fvals.max())):
        warnings.append("support function evaluated outside its dual grid")
    pv[bad] = 0.0
    psi_vals[ok] = pv
    integrand = psi_vals * fvals
    edge = fvals[~target.interior_mask(1)]
    if edge.size and edge.max() > tail_tol * fvals.max():
        raise TailMassError("f|xi does not decay inside the target box")
    return trapezoid(integrand, target), tuple(warnings)


def support_of(g: LogConcaveFunction, plan: Optional[GridPlan] = None) -> ConvexFunction:
    """``h_g`` in closed form, or on the plan's dual grid for grid inputs."""
    dual = plan.dual(g.dim) if plan is not None else None
    return conjugate(g.u, dual)


def mixed_quermass_representation(
    f: LogConcaveFunction,
    g: LogConcaveFunction,
    j: int,
    mode: str = "mc",
    samples: int = 256,
    seed: Optional[int] = 0,
    plan: Optional[GridPlan] = None,
    closed_form: bool = True,
    tail_tol: float = 1e-6,
    threads: Optional[int] = None,
) -> QuermassResult:
    """``W_j(f, g) = 1/(n-j) (omega_n/omega_{n-j}) E[int_xi h_{g|xi}(grad(u|xi)) f|xi]``.

    ``h_{g|xi}`` is the restriction of ``h_g = v*`` to ``xi``.
    """
    n = f.dim
    _check_j(n, j)
    if plan is None:
        raise ValueError("the representation integral needs a GridPlan")
    if not f.u.smooth:
        raise ValueError("gradient unavailable: f must have a smooth potential")
    i = n - j
    psi = support_of(g, plan)
    subs = [_identity_subspace(n)] if j == 0 else subspaces(n, i, mode, samples, seed)
    pairs = _map(lambda xi: _pushforward_integral(f.u, psi, xi, plan, closed_form, tail_tol), subs, threads)
    vals = np.array([p[0] for p in pairs])
    warnings = tuple(dict.fromkeys(w for p in pairs for w in p[1])) + tuple(getattr(psi, "warnings", ()))
    scale = (omega(n) / omega(i)) / (n - j)
    value, se = _average(vals, scale, mode if j else "axis")
    config = {"j": j, "n": n, "mode": mode if j else "identity", "samples": samples if (mode == "mc" and j) else None,
              "seed": seed if (mode == "mc" and j) else None, "plan": plan.to_dict(), "closed_form": closed_form}
    return QuermassResult(float(value), float(se), "representation", config, warnings, {"integrals": vals.tolist()})


# -- diagnostics ---------------------------------------------------------------


def blaschke_petkantschin_check(
    f: LogConcaveFunction,
    i: int,
    samples: int = 256,
    seed: int = 0,
    plan: Optional[GridPlan] = None,
    mode: str = "mc",
    closed_form: bool = True,
    quad_budget: float = 0.01,
    threads: Optional[int] = None,
) -> dict:
    """Compare ``int f`` with the Grassmannian average of ``int_xi f(x) ||x||^(n-i) dx``.

    The integrand is ``f`` restricted to ``xi``, not the projection. The
    rotation-average constant is ``n omega_n / (i omega_i)``; the report also
    carries the value obtained with ``omega_n / omega_i``.
    """
    n = f.dim
    if not 1 <= i <= n:
        raise ValueError(f"need 1 <= i <= n, got {i}")
    if plan is None:
        raise ValueError("needs a GridPlan")
    lhs = total_mass(f, plan.ambient(n), closed_form=False).value
    target = plan.target(i)
    if n > i and target.has_node_at_origin():
        target = target.shifted(0.5 * target.spacing)
    z = target.nodes()
    weight = np.linalg.norm(z, axis=-1) ** (n - i)

    def inner(xi):
        return trapezoid(f(xi.embed(z)) * weight, target)

    subs = subspaces(n, i, mode, samples, seed)
    vals = np.array(_map(inner, subs, threads))
    const = n * omega(n) / (i * omega(i))
    rhs, se = _average(vals, const, mode)
    gap = abs(lhs - rhs) / lhs
    rel_se = float(se) / lhs
    return {
        "lhs": lhs,
        "rhs": float(rhs),
        "stderr": float(se),
        "relative_gap": gap,
        "budget": 2 * rel_se + quad_budget,
        "passed": gap <= 2 * rel_se + quad_budget,
        "constant": const,
        "rhs_with_omega_ratio": float(rhs) * i / n,
    }


def existence_bound_check(
    f: LogConcaveFunction,
    g: LogConcaveFunction,
    j: int,
    **fd_kwargs,
) -> dict:
    """``W_j(f, g) >= -max(d, 0) W_j(f) / (n - j)`` with ``d = min v``.

    Cases within three standard errors (plus a relative ``1e-6``) of the
    bound are flagged as marginal rather than failed.
    """
    n = f.dim
    fd = mixed_quermass_fd(f, g, j, **fd_kwargs)
    d = fd.details["d"]
    W = fd.details["W_f"]
    bound = -max(d, 0.0) * W / (n - j)
    tol = 3 * fd.stderr + 1e-6 * abs(W)
    return {
        "value": fd.value,
        "stderr": fd.stderr,
        "d": d,
        "W_f": W,
        "bound": bound,
        "holds": fd.value >= bound - tol,
        "marginal": abs(fd.value - bound) <= tol,
    }
