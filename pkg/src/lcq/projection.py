"""Linear subspaces, Haar sampling on the Grassmannian, and the projection
``f|xi(x) = max { f(y) : y in x + xi^perp }`` of log-concave functions.

Projected functions live in the coordinates of the subspace basis: a point
``z`` of ``R^i`` stands for ``B z`` in ``R^n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

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
)
from .grid import GridSpec
from .legendre import asplund_potential, asplund_sum, conjugate

FIBER_WARNING = "fiber minimum on the fiber box boundary: enlarge the fiber grid"


@dataclass(frozen=True, eq=False)
class Subspace:
    """``i``-dimensional linear subspace of ``R^n`` with orthonormal bases of it and of its complement."""

    basis: np.ndarray
    complement: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        C = np.asarray(self.complement, dtype=float)
        if B.ndim != 2 or B.shape[1] < 1:
            raise ValueError("basis must be an n x i matrix with i >= 1")
        C = C.reshape(B.shape[0], -1)
        if B.shape[1] + C.shape[1] != B.shape[0]:
            raise DimensionError("basis and complement must span R^n")
        M = np.hstack([B, C])
        if np.abs(M.T @ M - np.eye(B.shape[0])).max() > 1e-10:
            raise ValueError("basis and complement must be orthonormal")
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "complement", C)

    @classmethod
    def from_basis(cls, basis) -> "Subspace":
        B = np.atleast_2d(np.asarray(basis, dtype=float))
        if B.shape[0] < B.shape[1]:
            B = B.T
        n, i = B.shape
        if np.abs(B.T @ B - np.eye(i)).max() > 1e-10:
            B, _ = np.linalg.qr(B)
        full, _ = np.linalg.qr(np.hstack([B, np.eye(n)]))
        return cls(B, full[:, i:n])

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def sub_dim(self) -> int:
        return self.basis.shape[1]

    def orthonormality_residual(self) -> float:
        M = np.hstack([self.basis, self.complement])
        return float(np.abs(M.T @ M - np.eye(self.ambient_dim)).max())

    def axis_indices(self) -> Optional[list[int]]:
        """Coordinate axes spanned by the basis columns, if each is ``+-e_k``."""
        idx = []
        for col in self.basis.T:
            k = int(np.argmax(np.abs(col)))
            if abs(abs(col[k]) - 1) > 1e-12 or np.abs(np.delete(col, k)).max(initial=0) > 1e-12:
                return None
            idx.append(k)
        return idx

    def embed(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) @ self.basis.T


@dataclass(frozen=True)
class HaarSampler:
    """Reproducible Haar-distributed subspaces: sample ``k`` depends only on ``(seed, k)``."""

    seed: int

    def sample(self, index: int, n: int, i: int, max_retries: int = 8) -> Subspace:
        if not 1 <= i <= n:
            raise ValueError(f"need 1 <= i <= n, got i={i}, n={n}")
        for attempt in range(max_retries):
            rng = np.random.default_rng(np.random.SeedSequence([self.seed & (2**64 - 1), index, attempt]))
            A = rng.standard_normal((n, n))
            q, r = np.linalg.qr(A)
            d = np.diag(r)
            if np.abs(d).min() > 1e-10:
                q = q * np.sign(d)
                return Subspace(q[:, :i], q[:, i:])
        raise np.linalg.LinAlgError("rank-deficient Gaussian draws; giving up")

    def take(self, count: int, n: int, i: int, start: int = 0) -> list[Subspace]:
        return [self.sample(k, n, i) for k in range(start, start + count)]


def haar_sample(sampler: HaarSampler, n: int, i: int, index: int = 0) -> Subspace:
    return sampler.sample(index, n, i)


def axis_subspaces(n: int, i: int) -> list[Subspace]:
    """All ``C(n, i)`` coordinate subspaces."""
    if not 1 <= i <= n:
        raise ValueError(f"need 1 <= i <= n, got i={i}, n={n}")
    eye = np.eye(n)
    out = []
    for axes in itertools.combinations(range(n), i):
        rest = [k for k in range(n) if k not in axes]
        out.append(Subspace(eye[:, list(axes)], eye[:, rest]))
    return out


def _project_closed(u: ConvexFunction, xi: Subspace) -> Optional[ConvexFunction]:
    i = xi.sub_dim
    if isinstance(u, Quadratic):
        B, C = xi.basis, xi.complement
        A = B.T @ u.Q @ B
        b1 = B.T @ u.b
        if C.shape[1] == 0:
            return Quadratic(A, b1, u.c)
        X = B.T @ u.Q @ C
        D = C.T @ u.Q @ C
        b2 = C.T @ u.b
        Dinv_Xt = np.linalg.solve(D, X.T)
        Dinv_b2 = np.linalg.solve(D, b2)
        return Quadratic(A - X @ Dinv_Xt, b1 - X @ Dinv_b2, u.c - 0.5 * b2 @ Dinv_b2)
    if isinstance(u, IndicatorBall):
        return IndicatorBall(u.radius, i)
    if isinstance(u, NormMultiple):
        return NormMultiple(u.a, i)
    axes = xi.axis_indices()
    if axes is not None:
        if isinstance(u, IndicatorBox):
            return IndicatorBox(u.halfwidths[axes])
        if isinstance(u, BoxSupport):
            return BoxSupport(u.weights[axes])
    return None


def project_potential(
    u: ConvexFunction,
    xi: Subspace,
    target_grid: Optional[GridSpec] = None,
    fiber_grid: Optional[GridSpec] = None,
    closed_form: bool = True,
    max_points: int = 1 << 21,
) -> ConvexFunction:
    """``u|xi(z) = min { u(Bz + B_perp y) }`` in subspace coordinates.

    Grid-form inputs (and presets without a closed form) are minimised
    exhaustively over the nodes of ``fiber_grid`` for every node of
    ``target_grid``; evaluation points outside a grid function's box count
    as ``+inf``.
    """
    if u.dim != xi.ambient_dim:
        raise DimensionError(f"function dimension {u.dim} != ambient dimension {xi.ambient_dim}")
    if closed_form:
        closed = _project_closed(u, xi)
        if closed is not None:
            return closed
    if target_grid is None:
        raise ValueError("numerical projection needs a target_grid")
    if target_grid.dim != xi.sub_dim:
        raise DimensionError("target grid must have the subspace dimension")
    k = xi.ambient_dim - xi.sub_dim
    Z = target_grid.nodes().reshape(-1, xi.sub_dim) @ xi.basis.T
    if k == 0:
        vals = np.asarray(u.values(Z)).reshape(target_grid.shape)
        return GridFunction.from_values(target_grid, vals)
    if fiber_grid is None or fiber_grid.dim != k:
        raise DimensionError(f"fiber grid must have dimension {k}")
    Y = fiber_grid.nodes().reshape(-1, k) @ xi.complement.T
    F = len(Y)
    chunk = max(1, max_points // F)
    best = np.empty(len(Z))
    arg = np.empty(len(Z), dtype=np.int64)
    for start in range(0, len(Z), chunk):
        pts = Z[start : start + chunk, None, :] + Y[None, :, :]
        vals = np.asarray(u.values(pts))
        j = np.argmin(vals, axis=1)
        arg[start : start + chunk] = j
        best[start : start + chunk] = vals[np.arange(len(j)), j]
    best = best.reshape(target_grid.shape)
    arg = arg.reshape(target_grid.shape)
    warnings = ()
    inner = target_grid.interior_mask(1) & np.isfinite(best)
    if inner.any():
        multi = np.stack(np.unravel_index(arg[inner], fiber_grid.shape), axis=-1)
        top = np.array(fiber_grid.count) - 1
        if np.any((multi == 0) | (multi == top)):
            warnings = (FIBER_WARNING,)
    return GridFunction.from_values(target_grid, best, warnings)


def project(
    f: LogConcaveFunction,
    xi: Subspace,
    fiber_grid: Optional[GridSpec] = None,
    target_grid: Optional[GridSpec] = None,
    closed_form: bool = True,
) -> LogConcaveFunction:
    """Projection ``f|xi`` as a log-concave function on ``R^i``."""
    return LogConcaveFunction(project_potential(f.u, xi, target_grid, fiber_grid, closed_form))


def project_properties_check(
    f: LogConcaveFunction,
    g: LogConcaveFunction,
    xi: Subspace,
    alpha: float,
    beta: float,
    ambient_grid: GridSpec,
    target_grid: GridSpec,
    fiber_grid: Optional[GridSpec] = None,
    dual_grid: Optional[GridSpec] = None,
    target_dual_grid: Optional[GridSpec] = None,
    level: float = 20.0,
) -> dict:
    """Residual of ``(a f (+) b g)|xi = a f|xi (+) b g|xi`` and order-preservation violations.

    Both sides are computed on grids. The residual is the largest nodewise
    difference of potentials over interior target nodes where the left side
    stays below ``level`` (deeper tails are dominated by box truncation).
    """
    lhs = project_potential(
        asplund_sum(f, g, alpha, beta, ambient_grid, dual_grid).u, xi, target_grid, fiber_grid, closed_form=False
    )
    fp = LogConcaveFunction(project_potential(f.u, xi, target_grid, fiber_grid, closed_form=False))
    gp = LogConcaveFunction(project_potential(g.u, xi, target_grid, fiber_grid, closed_form=False))
    rhs = asplund_sum(fp, gp, alpha, beta, target_grid, target_dual_grid).u
    nodes = target_grid.nodes()
    a = np.asarray(lhs.values(nodes))
    b = np.asarray(rhs.values(nodes))
    sel = target_grid.interior_mask(1) & np.isfinite(a) & np.isfinite(b) & (a < level)
    residual = float(np.max(np.abs(a[sel] - b[sel]))) if sel.any() else 0.0
    amb = ambient_grid.nodes()
    fv, gv = f(amb), g(amb)
    violations = None
    if np.all(fv <= gv + 1e-12):
        fpv, gpv = fp(nodes), gp(nodes)
        violations = int(np.sum(fpv > gpv + 1e-12))
    return {"structure_residual": residual, "h": max(ambient_grid.h, target_grid.h), "order_violations": violations}


def dt_projection_derivative_check(
    u: ConvexFunction,
    v: ConvexFunction,
    xi: Subspace,
    t: float,
    x,
    dt: float = 1e-3,
) -> float:
    """``|d/dt (u_t|xi)(x) + (v*|xi)(grad (u_t|xi)(x))|`` for smooth presets."""
    if not (u.smooth and v.smooth) or isinstance(u, GridFunction) or isinstance(v, GridFunction):
        raise ValueError("gradient unavailable: the derivative check needs smooth presets")
    x = np.asarray(x, dtype=float).reshape(1, xi.sub_dim)
    plus = project_potential(asplund_potential(u, v, t + dt), xi).values(x)
    minus = project_potential(asplund_potential(u, v, t - dt), xi).values(x)
    ut = project_potential(asplund_potential(u, v, t), xi)
    grad = ut.gradient(x)
    psi = conjugate(v).values(xi.embed(grad))
    return float(np.abs((plus - minus) / (2 * dt) + psi)[0])
