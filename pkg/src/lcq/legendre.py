"""Fenchel conjugates, infimal convolution, right scalar multiplication and
the Asplund sum of log-concave functions.

Grid conjugates use the linear-time lower-envelope sweep along each axis: the
n-dimensional transform is a sequence of 1-D partial conjugates, each of which
only needs the lower convex hull of a row. Because a linear function attains
its maximum over a finite point set at a hull vertex, the sweep returns the
exact discrete maximum for any input, convex or not.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numba
import numpy as np

from .convex import (
    BoxSupport,
    ConvexFunction,
    DimensionError,
    GridFunction,
    IndicatorBall,
    IndicatorBox,
    LogConcaveFunction,
    NormMultiple,
    Quadratic,
    point_indicator,
    sample_to_grid,
)
from .grid import GridSpec

__all__ = [
    "conjugate",
    "conjugate_bruteforce",
    "scalar_right_mul",
    "inf_convolution",
    "inf_convolution_bruteforce",
    "asplund_sum",
    "asplund_potential",
    "support_function",
    "suggest_dual_grid",
    "gradient_bijection_check",
    "biconjugation_error",
]

BOUNDARY_WARNING = "dual grid exceeds the slope range: argmax on the primal box boundary"


@numba.njit(cache=True, nogil=True)
def _conjugate_rows(x, vals, fin, s, out, arg):
    rows, n = vals.shape
    m = s.shape[0]
    hx = np.empty(n)
    hv = np.empty(n)
    hi = np.empty(n, dtype=np.int64)
    for r in range(rows):
        size = 0
        for k in range(n):
            if not fin[r, k]:
                continue
            xk = x[k]
            vk = vals[r, k]
            while size >= 2:
                x1 = hx[size - 2]
                v1 = hv[size - 2]
                if (hv[size - 1] - v1) * (xk - x1) >= (vk - v1) * (hx[size - 1] - x1):
                    size -= 1
                else:
                    break
            hx[size] = xk
            hv[size] = vk
            hi[size] = k
            size += 1
        if size == 0:
            for j in range(m):
                out[r, j] = -np.inf
                arg[r, j] = -1
            continue
        j = 0
        for q in range(m):
            sq = s[q]
            # strict comparison keeps the lowest index on ties
            while j + 1 < size and (hv[j + 1] - hv[j]) < sq * (hx[j + 1] - hx[j]):
                j += 1
            out[r, q] = sq * hx[j] - hv[j]
            arg[r, q] = hi[j]


def _conjugate_1d(x, vals, fin, s):
    vals = np.ascontiguousarray(vals, dtype=float)
    fin = np.ascontiguousarray(fin, dtype=np.bool_)
    out = np.empty((vals.shape[0], s.size))
    arg = np.empty((vals.shape[0], s.size), dtype=np.int64)
    _conjugate_rows(np.ascontiguousarray(x, dtype=float), vals, fin, np.ascontiguousarray(s, dtype=float), out, arg)
    return out, arg


def _grid_conjugate(u: GridFunction, dual: GridSpec):
    """Discrete conjugate on ``dual`` nodes plus the argmax node (multi-index)."""
    if dual.dim != u.dim:
        raise DimensionError(f"dual grid dimension {dual.dim} != {u.dim}")
    if not u.finite.any():
        raise ValueError("improper function: every node is +inf")
    n = u.dim
    xs = u.grid.axes()
    ys = dual.axes()
    w = np.where(u.finite, u.node_values, 0.0)
    fin = u.finite.copy()
    args = []
    g = None
    for k in range(n):
        wk = np.moveaxis(w, k, -1)
        fk = np.moveaxis(fin, k, -1)
        lead = wk.shape[:-1]
        out, arg = _conjugate_1d(xs[k], wk.reshape(-1, wk.shape[-1]), fk.reshape(-1, fk.shape[-1]), ys[k])
        g = np.moveaxis(out.reshape(lead + (ys[k].size,)), -1, k)
        args.append(np.moveaxis(arg.reshape(lead + (ys[k].size,)), -1, k))
        fin = np.isfinite(g)
        w = np.where(fin, -g, 0.0)
    # backtrack the argmax: axis k was maximised with axes < k already dual
    idx = [None] * n
    dual_idx = np.indices(dual.shape)
    for k in range(n - 1, -1, -1):
        sel = tuple(dual_idx[a] if a <= k else idx[a] for a in range(n))
        idx[k] = args[k][sel]
    return g, np.stack(idx, axis=-1)


def _boundary_flag(argmax: np.ndarray, primal: GridSpec, dual: GridSpec) -> bool:
    inner = dual.interior_mask(1)
    if not inner.any():
        return False
    a = argmax[inner]
    top = np.array(primal.count) - 1
    return bool(np.any((a == 0) | (a == top)))


def _closed_conjugate(u: ConvexFunction) -> Optional[ConvexFunction]:
    if isinstance(u, Quadratic):
        P = np.linalg.inv(u.Q)
        Pb = P @ u.b
        return Quadratic(P, -Pb, 0.5 * u.b @ Pb - u.c)
    if isinstance(u, IndicatorBall):
        return NormMultiple(u.radius, u.dim)
    if isinstance(u, NormMultiple):
        return IndicatorBall(u.a, u.dim)
    if isinstance(u, IndicatorBox):
        return BoxSupport(u.halfwidths)
    if isinstance(u, BoxSupport):
        return IndicatorBox(u.weights)
    return None


def conjugate(u: ConvexFunction, dual_grid: Optional[GridSpec] = None) -> ConvexFunction:
    """Fenchel conjugate ``u*(y) = sup_x <x, y> - u(x)``.

    Presets map to presets in closed form. Grid functions are transformed on
    ``dual_grid`` (default: :func:`suggest_dual_grid`); the result carries a
    warning when the dual box reaches beyond the slopes available on the
    primal box.
    """
    closed = _closed_conjugate(u)
    if closed is not None:
        return closed
    if not isinstance(u, GridFunction):
        raise TypeError(f"cannot conjugate {type(u).__name__}")
    dual = dual_grid if dual_grid is not None else suggest_dual_grid(u)
    g, argmax = _grid_conjugate(u, dual)
    warnings = (BOUNDARY_WARNING,) if _boundary_flag(argmax, u.grid, dual) else ()
    return GridFunction(dual, g, np.isfinite(g), warnings)


def conjugate_bruteforce(
    u: ConvexFunction,
    dual_grid: GridSpec,
    primal_grid: Optional[GridSpec] = None,
    chunk: int = 2048,
) -> GridFunction:
    """Exhaustive maximisation over every finite primal node (test oracle).

    Presets are first sampled on ``primal_grid``.
    """
    if not isinstance(u, GridFunction):
        if primal_grid is None:
            raise ValueError("presets need a primal_grid for the brute-force conjugate")
        u = sample_to_grid(u, primal_grid, check=False)
    if dual_grid.dim != u.dim:
        raise DimensionError(f"dual grid dimension {dual_grid.dim} != {u.dim}")
    fin = u.finite.ravel()
    if not fin.any():
        raise ValueError("improper function: every node is +inf")
    X = u.grid.nodes().reshape(-1, u.dim)
    flat_idx = np.flatnonzero(fin)
    X = X[flat_idx]
    v = u.node_values.ravel()[flat_idx]
    Y = dual_grid.nodes().reshape(-1, u.dim)
    out = np.empty(len(Y))
    arg = np.empty(len(Y), dtype=np.int64)
    for start in range(0, len(Y), chunk):
        y = Y[start : start + chunk]
        # same association order as the sweep for 1-D rows: y*x - v
        S = y[:, :1] * X[:, 0]
        for k in range(1, u.dim):
            S = S + y[:, k : k + 1] * X[:, k]
        S -= v
        j = np.argmax(S, axis=1)
        out[start : start + chunk] = S[np.arange(len(y)), j]
        arg[start : start + chunk] = flat_idx[j]
    out = out.reshape(dual_grid.shape)
    argmax = np.stack(np.unravel_index(arg, u.grid.shape), axis=-1).reshape(dual_grid.shape + (u.dim,))
    warnings = (BOUNDARY_WARNING,) if _boundary_flag(argmax, u.grid, dual_grid) else ()
    return GridFunction(dual_grid, out, np.isfinite(out), warnings)


def suggest_dual_grid(
    u: ConvexFunction,
    primal_grid: Optional[GridSpec] = None,
    count=None,
) -> GridSpec:
    """Dual box spanning the finite-difference slopes of ``u`` on its box."""
    if not isinstance(u, GridFunction):
        if primal_grid is None:
            raise ValueError("presets need a primal_grid to measure slopes")
        u = sample_to_grid(u, primal_grid, check=False)
    lo, hi = [], []
    for k, h in enumerate(u.grid.spacing):
        d = np.diff(np.where(u.finite, u.node_values, 0.0), axis=k) / h
        ok = np.diff(u.finite.astype(np.int8), axis=k) == 0
        ok &= np.take(u.finite, range(1, u.grid.count[k]), axis=k)
        slopes = d[ok]
        if slopes.size == 0:
            a, b = -1.0, 1.0
        else:
            a, b = float(slopes.min()), float(slopes.max())
        if b - a < 1e-9:
            a, b = a - 1.0, b + 1.0
        lo.append(a)
        hi.append(b)
    count = u.grid.count if count is None else count
    return GridSpec.box(lo, hi, count)


def _union_box(a: GridSpec, b: GridSpec) -> GridSpec:
    lo = np.minimum(a.lo, b.lo)
    hi = np.maximum(a.hi, b.hi)
    return GridSpec.box(lo, hi, np.maximum(a.count, b.count))


# -- scalar multiples and sums of presets ------------------------------------


def scalar_right_mul(u: ConvexFunction, alpha: float) -> ConvexFunction:
    """``(u alpha)(x) = alpha u(x / alpha)``; ``alpha = 0`` gives ``I_{0}``."""
    if alpha < 0:
        raise ValueError("right scalar multiplication needs alpha >= 0")
    if alpha == 0:
        return point_indicator(u.dim)
    if isinstance(u, Quadratic):
        return Quadratic(u.Q / alpha, u.b, alpha * u.c)
    if isinstance(u, IndicatorBall):
        return IndicatorBall(alpha * u.radius, u.dim)
    if isinstance(u, IndicatorBox):
        return IndicatorBox(alpha * u.halfwidths)
    if isinstance(u, (NormMultiple, BoxSupport)):
        return u
    if isinstance(u, GridFunction):
        return GridFunction(u.grid.scaled(alpha), alpha * np.where(u.finite, u.node_values, 0.0), u.finite, u.warnings)
    raise TypeError(f"cannot rescale {type(u).__name__}")


def _scale_left(u: ConvexFunction, alpha: float) -> Optional[ConvexFunction]:
    if alpha == 0:
        return NormMultiple(0.0, u.dim)
    if isinstance(u, Quadratic):
        return Quadratic(alpha * u.Q, alpha * u.b, alpha * u.c)
    if isinstance(u, NormMultiple):
        return NormMultiple(alpha * u.a, u.dim)
    if isinstance(u, BoxSupport):
        return BoxSupport(alpha * u.weights)
    if isinstance(u, (IndicatorBall, IndicatorBox)):
        return u
    return None


def _is_zero(u: ConvexFunction) -> bool:
    return (isinstance(u, NormMultiple) and u.a == 0) or (isinstance(u, BoxSupport) and not u.weights.any())


def _add(u: ConvexFunction, v: ConvexFunction) -> Optional[ConvexFunction]:
    if _is_zero(u):
        return v
    if _is_zero(v):
        return u
    if isinstance(u, Quadratic) and isinstance(v, Quadratic):
        return Quadratic(u.Q + v.Q, u.b + v.b, u.c + v.c)
    if isinstance(u, NormMultiple) and isinstance(v, NormMultiple):
        return NormMultiple(u.a + v.a, u.dim)
    if isinstance(u, BoxSupport) and isinstance(v, BoxSupport):
        return BoxSupport(u.weights + v.weights)
    if isinstance(u, IndicatorBall) and isinstance(v, IndicatorBall):
        return IndicatorBall(min(u.radius, v.radius), u.dim)
    if isinstance(u, IndicatorBox) and isinstance(v, IndicatorBox):
        return IndicatorBox(np.minimum(u.halfwidths, v.halfwidths))
    return None


def _as_grid(u: ConvexFunction, grid: GridSpec) -> GridFunction:
    if isinstance(u, GridFunction):
        if u.grid == grid:
            return u
        return GridFunction.from_values(grid, u.values(grid.nodes()))
    return sample_to_grid(u, grid, check=False)


def _dual_values(u: ConvexFunction, dual: GridSpec, warnings: list) -> np.ndarray:
    """``u*`` at the nodes of ``dual`` (closed form when available)."""
    closed = _closed_conjugate(u)
    if closed is not None:
        return closed.values(dual.nodes())
    if not isinstance(u, GridFunction):
        raise TypeError(f"cannot conjugate {type(u).__name__}")
    g, argmax = _grid_conjugate(u, dual)
    if _boundary_flag(argmax, u.grid, dual):
        warnings.append(BOUNDARY_WARNING)
    return g


def _domain_support(u: ConvexFunction, dual: GridSpec) -> Optional[np.ndarray]:
    """Support function of ``dom u`` at the dual nodes, or None when ``dom u = R^n``."""
    if isinstance(u, (IndicatorBall, IndicatorBox)):
        return _closed_conjugate(u).values(dual.nodes())
    if isinstance(u, GridFunction):
        zero = GridFunction(u.grid, np.zeros(u.grid.shape), u.finite)
        return _grid_conjugate(zero, dual)[0]
    return None


def _domain_mask(us, weights, dual: GridSpec, result: GridSpec) -> Optional[np.ndarray]:
    """Nodes of ``result`` inside ``sum_k weights[k] dom u_k`` (None if unrestricted).

    Support functions add under Minkowski sums, so the sum of the domain
    supports is transformed back; it vanishes on the summed domain and is
    positive off it. Only used when some input actually has a bounded,
    masked domain, which the bounded dual box alone cannot reproduce.
    """
    masked = any(
        isinstance(u, (IndicatorBall, IndicatorBox)) or (isinstance(u, GridFunction) and not u.finite.all())
        for u, w in zip(us, weights)
        if w > 0
    )
    if not masked:
        return None
    total = np.zeros(dual.shape)
    for u, w in zip(us, weights):
        if w == 0:
            continue
        h = _domain_support(u, dual)
        if h is None:
            return None
        total = total + w * h
    d, _ = _grid_conjugate(GridFunction(dual, total, np.ones(dual.shape, bool)), result)
    scale = sum(max(abs(a), abs(b)) for a, b in zip(result.lo, result.hi)) * sum(
        max(abs(a), abs(b)) for a, b in zip(dual.lo, dual.hi)
    )
    return d <= 1e-12 * max(scale, 1.0)


def dual_route(
    us: Sequence[ConvexFunction],
    weights: Sequence[float],
    result_grid: Optional[GridSpec] = None,
    dual_grid: Optional[GridSpec] = None,
) -> ConvexFunction:
    """``w`` with ``w* = sum_k weights[k] * us[k]*``, i.e. ``(u_1 a_1) [] (u_2 a_2) [] ...``.

    Closed form when every term stays inside the preset family; otherwise
    the conjugates are added on a shared dual grid and transformed back onto
    ``result_grid``. Zero weights are kept on the grid path so that a
    ``t = 0`` evaluation uses exactly the same discretisation as ``t > 0``.
    """
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    n = us[0].dim
    if any(u.dim != n for u in us) or (result_grid is not None and result_grid.dim != n):
        raise DimensionError("dimension mismatch")
    all_preset = not any(isinstance(u, GridFunction) for u in us)
    if all_preset:
        total = NormMultiple(0.0, n)
        for u, w in zip(us, weights):
            cu = _closed_conjugate(u)
            scaled = _scale_left(cu, w) if cu is not None else None
            total = _add(total, scaled) if scaled is not None else None
            if total is None:
                break
        if total is not None:
            return _closed_conjugate(total)
    if result_grid is None:
        grids = [u.grid for u in us if isinstance(u, GridFunction)]
        if not grids:
            raise ValueError("no closed form for this combination; pass result_grid")
        result_grid = grids[0]
    if dual_grid is None:
        for u in us:
            if isinstance(u, IndicatorBall) and u.radius == 0:
                continue
            d = suggest_dual_grid(u, result_grid)
            dual_grid = d if dual_grid is None else _union_box(dual_grid, d)
        if dual_grid is None:
            dual_grid = suggest_dual_grid(us[0], result_grid)
    warnings: list = []
    total = np.zeros(dual_grid.shape)
    finite = np.ones(dual_grid.shape, dtype=bool)
    for u, w in zip(us, weights):
        vals = _dual_values(u, dual_grid, warnings)
        fin = np.isfinite(vals)
        finite &= fin
        total = total + w * np.where(fin, vals, 0.0)
    wstar = GridFunction(dual_grid, total, finite)
    g, argmax = _grid_conjugate(wstar, result_grid)
    if _boundary_flag(argmax, dual_grid, result_grid):
        warnings.append(BOUNDARY_WARNING)
    finite = np.isfinite(g)
    dom = _domain_mask(us, weights, dual_grid, result_grid)
    if dom is not None and (dom & finite).any():
        finite &= dom
    return GridFunction(result_grid, g, finite, tuple(dict.fromkeys(warnings)))


def inf_convolution(
    u: ConvexFunction,
    v: ConvexFunction,
    result_grid: Optional[GridSpec] = None,
    dual_grid: Optional[GridSpec] = None,
) -> ConvexFunction:
    """``(u [] v)(x) = inf_y u(x - y) + v(y)`` through ``(u [] v)* = u* + v*``."""
    if u.dim != v.dim:
        raise DimensionError("dimension mismatch")
    for a, b in ((u, v), (v, u)):
        if isinstance(b, IndicatorBall) and b.radius == 0:
            return a if result_grid is None or not isinstance(a, GridFunction) else _as_grid(a, result_grid)
    return dual_route([u, v], [1.0, 1.0], result_grid, dual_grid)


def inf_convolution_bruteforce(
    u: ConvexFunction,
    v: ConvexFunction,
    result_grid: GridSpec,
    search_grid: Optional[GridSpec] = None,
    chunk: int = 512,
) -> GridFunction:
    """Direct ``min_y u(x - y) + v(y)`` over the nodes ``y`` of ``search_grid`` (test oracle)."""
    if u.dim != v.dim:
        raise DimensionError("dimension mismatch")
    search = search_grid or (v.grid if isinstance(v, GridFunction) else result_grid)
    Y = search.nodes().reshape(-1, u.dim)
    vy = v.values(Y)
    keep = np.isfinite(vy)
    Y, vy = Y[keep], vy[keep]
    X = result_grid.nodes().reshape(-1, u.dim)
    out = np.empty(len(X))
    for start in range(0, len(X), chunk):
        x = X[start : start + chunk]
        vals = u.values(x[:, None, :] - Y[None, :, :]) + vy
        out[start : start + chunk] = vals.min(axis=1)
    out = out.reshape(result_grid.shape)
    return GridFunction.from_values(result_grid, out)


def asplund_potential(
    u: ConvexFunction,
    v: ConvexFunction,
    t: float,
    result_grid: Optional[GridSpec] = None,
    dual_grid: Optional[GridSpec] = None,
) -> ConvexFunction:
    """``u_t = u [] (v t)``, the potential of ``f + t g``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return dual_route([u, v], [1.0, t], result_grid, dual_grid)


def asplund_sum(
    f: LogConcaveFunction,
    g: LogConcaveFunction,
    alpha: float,
    beta: float,
    result_grid: Optional[GridSpec] = None,
    dual_grid: Optional[GridSpec] = None,
) -> LogConcaveFunction:
    """``alpha . f (+) beta . g = exp(-[(u alpha) [] (v beta)])``."""
    if alpha < 0 or beta < 0:
        raise ValueError("Asplund weights must be nonnegative")
    if f.dim != g.dim:
        raise DimensionError("dimension mismatch")
    if alpha == 0 and beta == 0:
        return LogConcaveFunction(point_indicator(f.dim))
    if beta == 0:
        return LogConcaveFunction(scalar_right_mul(f.u, alpha))
    if alpha == 0:
        return LogConcaveFunction(scalar_right_mul(g.u, beta))
    return LogConcaveFunction(dual_route([f.u, g.u], [alpha, beta], result_grid, dual_grid))


def support_function(f: LogConcaveFunction, dual_grid: Optional[GridSpec] = None) -> ConvexFunction:
    """``h_f = u*`` for ``f = exp(-u)``."""
    return conjugate(f.u, dual_grid)


def biconjugation_error(u: GridFunction, dual_grid: Optional[GridSpec] = None) -> dict:
    """Max ``|u** - u|`` over interior finite nodes, with the bound ``2 h Lip(u)``."""
    dual = dual_grid or suggest_dual_grid(u)
    ustar = conjugate(u, dual)
    g, _ = _grid_conjugate(ustar, u.grid)
    inner = u.grid.interior_mask(1) & u.finite
    err = float(np.max(np.abs(g[inner] - u.node_values[inner]))) if inner.any() else 0.0
    lip = 0.0
    for k, h in enumerate(u.grid.spacing):
        d = np.abs(np.diff(np.where(u.finite, u.node_values, np.nan), axis=k)) / h
        if np.isfinite(d).any():
            lip = max(lip, float(np.nanmax(d)))
    return {"max_error": err, "lipschitz": lip, "h": u.grid.h, "bound": 2 * u.grid.h * lip}


def gradient_bijection_check(
    u: ConvexFunction,
    sample_points,
    dual_grid: Optional[GridSpec] = None,
) -> dict:
    """Residuals of ``grad u* o grad u = id`` and of the Fenchel equality."""
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if u.dim == 1 and pts.shape[-1] != 1:
        pts = pts.reshape(-1, 1)
    grad = u.gradient(pts)
    if grad is None or not np.all(np.isfinite(grad)):
        raise ValueError("gradient unavailable at a sample point")
    ustar = conjugate(u, dual_grid)
    gstar = ustar.gradient(grad)
    if gstar is None or not np.all(np.isfinite(gstar)):
        raise ValueError("conjugate gradient unavailable; enlarge the dual grid")
    r1 = np.linalg.norm(gstar - pts, axis=-1)
    r2 = np.abs(ustar.values(grad) + u.values(pts) - np.sum(pts * grad, axis=-1))
    return {
        "max_inverse_residual": float(r1.max()),
        "max_fenchel_residual": float(r2.max()),
        "inverse_residuals": r1,
        "fenchel_residuals": r2,
        "warnings": getattr(ustar, "warnings", ()),
    }


# -- lemma checks on u_t = u [] (v t) ---------------------------------------


def asplund_monotonicity_check(u, v, points, ts=(0.25, 0.5, 0.75, 1.0), result_grid=None, dual_grid=None) -> dict:
    """Count violations of ``t -> u_t(x)`` nonincreasing (needs ``v(0) = 0``)."""
    pts = np.asarray(points, dtype=float)
    vals = [np.asarray(u.values(pts))]
    for t in sorted(ts):
        ut = asplund_potential(u, v, t, result_grid, dual_grid)
        vals.append(np.asarray(ut.values(pts)))
    vals = np.array(vals)
    tol = 1e-9 * (1 + np.abs(vals[np.isfinite(vals)]).max())
    du = np.diff(vals, axis=0)
    u_viol = int(np.sum(du > tol))
    f = np.exp(-vals)
    f_viol = int(np.sum(np.diff(f, axis=0) < -tol))
    return {"u_violations": u_viol, "f_violations": f_viol, "values": vals}


def asplund_limit_check(u, v, points, ts=(0.1, 0.05, 0.025), result_grid=None, dual_grid=None) -> dict:
    """``max |u_t - u|`` at the probe points for decreasing ``t``."""
    pts = np.asarray(points, dtype=float)
    base = np.asarray(u.values(pts))
    errors = []
    for t in ts:
        ut = asplund_potential(u, v, t, result_grid, dual_grid)
        errors.append(float(np.max(np.abs(np.asarray(ut.values(pts)) - base))))
    monotone = all(b <= a for a, b in zip(errors, errors[1:]))
    return {"ts": list(ts), "errors": errors, "monotone_decay": monotone}


def asplund_derivative_check(u: ConvexFunction, v: ConvexFunction, t: float, x, dt: float = 1e-3) -> float:
    """``|d/dt u_t(x) + v*(grad u_t(x))|`` with a central difference in ``t``."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    up = asplund_potential(u, v, t + dt).values(x)
    um = asplund_potential(u, v, t - dt).values(x)
    ut = asplund_potential(u, v, t)
    grad = ut.gradient(x)
    if grad is None or not np.all(np.isfinite(grad)):
        raise ValueError("gradient unavailable")
    psi = conjugate(v).values(grad)
    return float(np.abs((up - um) / (2 * dt) + psi)[0])

