"""Convex functions ``u`` and log-concave functions ``f = exp(-u)``.

A convex function is either an analytic preset or a grid-sampled function.
Grid samples keep ``+inf`` out of the arithmetic: every node carries an
explicit ``finite`` bit and masked nodes are never read as numbers.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .grid import GridSpec, interpolate


class DimensionError(ValueError):
    pass


class ConvexityError(ValueError):
    """Sampled values fail the discrete convexity check."""


def _points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 and dim == 1:
        x = x.reshape(1)
    if x.shape[-1] != dim:
        if dim == 1:
            x = x[..., None]
        else:
            raise DimensionError(f"expected points of dimension {dim}, got shape {x.shape}")
    return x


class ConvexFunction:
    """Base class. Subclasses implement ``values`` and optionally ``gradient``."""

    kind: str = ""
    smooth: bool = False  # twice differentiable with positive definite Hessian

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def values(self, x) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x) -> Optional[np.ndarray]:
        return None

    def __call__(self, x):
        return self.values(x)

    def to_spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Quadratic(ConvexFunction):
    """``u(x) = x'Qx/2 + b'x + c`` with ``Q`` positive definite."""

    Q: np.ndarray
    b: Optional[np.ndarray] = None
    c: float = 0.0
    kind = "quadratic"
    smooth = True

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise DimensionError("Q must be square")
        Q = 0.5 * (Q + Q.T)
        if np.linalg.eigvalsh(Q).min() <= 0:
            raise ValueError("Q must be positive definite")
        b = np.zeros(Q.shape[0]) if self.b is None else np.asarray(self.b, dtype=float).reshape(-1)
        if b.shape != (Q.shape[0],):
            raise DimensionError("b must match Q")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    @classmethod
    def isotropic(cls, dim: int, scale: float = 1.0, c: float = 0.0) -> "Quadratic":
        return cls(scale * np.eye(dim), None, c)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    @property
    def minimizer(self) -> np.ndarray:
        return -np.linalg.solve(self.Q, self.b)

    @property
    def min_value(self) -> float:
        return float(self.c - 0.5 * self.b @ np.linalg.solve(self.Q, self.b))

    def values(self, x):
        x = _points(x, self.dim)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.Q, x) + x @ self.b + self.c

    def gradient(self, x):
        x = _points(x, self.dim)
        return x @ self.Q + self.b

    def to_spec(self):
        return {"kind": self.kind, "Q": self.Q.tolist(), "b": self.b.tolist(), "c": self.c}


@dataclass(frozen=True, eq=False)
class IndicatorBall(ConvexFunction):
    """Indicator of the centred ball of given radius; radius 0 is ``I_{0}``."""

    radius: float
    n: int
    kind = "indicator_ball"

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.n

    def values(self, x):
        x = _points(x, self.n)
        r = np.linalg.norm(x, axis=-1)
        return np.where(r <= self.radius * (1 + 1e-12) + 1e-300, 0.0, np.inf)

    def to_spec(self):
        return {"kind": self.kind, "radius": self.radius, "dim": self.n}


def point_indicator(dim: int) -> IndicatorBall:
    """``I_{0}``, the neutral element of infimal convolution."""
    return IndicatorBall(0.0, dim)


@dataclass(frozen=True, eq=False)
class IndicatorBox(ConvexFunction):
    """Indicator of ``prod_k [-a_k, a_k]``."""

    halfwidths: np.ndarray
    kind = "indicator_box"

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.halfwidths, dtype=float))
        if np.any(a < 0):
            raise ValueError("halfwidths must be nonnegative")
        object.__setattr__(self, "halfwidths", a)

    @property
    def dim(self):
        return self.halfwidths.size

    def values(self, x):
        x = _points(x, self.dim)
        a = self.halfwidths
        inside = np.all(np.abs(x) <= a * (1 + 1e-12) + 1e-300, axis=-1)
        return np.where(inside, 0.0, np.inf)

    def to_spec(self):
        return {"kind": self.kind, "halfwidths": self.halfwidths.tolist()}


@dataclass(frozen=True, eq=False)
class NormMultiple(ConvexFunction):
    """``u(x) = a ||x||`` (Euclidean); the support function of the ball of radius ``a``."""

    a: float
    n: int
    kind = "norm_multiple"

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("a must be nonnegative")
        object.__setattr__(self, "a", float(self.a))

    @property
    def dim(self):
        return self.n

    def values(self, x):
        x = _points(x, self.n)
        return self.a * np.linalg.norm(x, axis=-1)

    def to_spec(self):
        return {"kind": self.kind, "a": self.a, "dim": self.n}


@dataclass(frozen=True, eq=False)
class BoxSupport(ConvexFunction):
    """``u(y) = sum_k w_k |y_k|``, the support function of a centred box."""

    weights: np.ndarray
    kind = "box_support"

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return self.weights.size

    def values(self, x):
        x = _points(x, self.dim)
        return np.abs(x) @ self.weights

    def to_spec(self):
        return {"kind": self.kind, "weights": self.weights.tolist()}


@dataclass(frozen=True, eq=False)
class GridFunction(ConvexFunction):
    """Node samples on a :class:`GridSpec` with an explicit finiteness mask.

    Between nodes the function is the multilinear interpolant; a point whose
    cell touches a masked node (with nonzero weight) evaluates to ``+inf``,
    and so does any point outside the grid box.
    """

    grid: GridSpec
    node_values: np.ndarray
    finite: np.ndarray
    warnings: tuple = field(default=())
    kind = "grid"
    smooth = True

    def __post_init__(self):
        vals = np.asarray(self.node_values, dtype=float).reshape(self.grid.shape)
        fin = np.asarray(self.finite, dtype=bool).reshape(self.grid.shape)
        if np.any(np.isnan(vals[fin])) or np.any(np.isinf(vals[fin])):
            raise ValueError("finite nodes must carry finite values")
        vals = np.where(fin, vals, np.inf)
        vals.flags.writeable = False
        fin = fin.copy()
        fin.flags.writeable = False
        object.__setattr__(self, "node_values", vals)
        object.__setattr__(self, "finite", fin)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @classmethod
    def from_values(cls, grid: GridSpec, values, warnings=()) -> "GridFunction":
        values = np.asarray(values, dtype=float)
        fin = np.isfinite(values)
        if np.any(values[~fin] < 0):
            raise ValueError("-inf is not a valid value of a proper convex function")
        return cls(grid, np.where(fin, values, 0.0), fin, warnings)

    @property
    def dim(self):
        return self.grid.dim

    def values(self, x):
        x = _points(x, self.dim)
        return interpolate(self.grid, self.node_values, self.finite, x)

    def gradient(self, x):
        """Central differences with the grid spacing; ``nan`` where unavailable."""
        x = _points(x, self.dim)
        out = np.empty(x.shape)
        for k, h in enumerate(self.grid.spacing):
            step = np.zeros(self.dim)
            step[k] = h
            fwd = self.values(x + step)
            bwd = self.values(x - step)
            out[..., k] = (fwd - bwd) / (2 * h)
        bad = ~np.all(np.isfinite(out), axis=-1) | ~np.isfinite(self.values(x))
        out[bad] = np.nan
        return out

    def with_warnings(self, *messages: str) -> "GridFunction":
        return GridFunction(self.grid, self.node_values, self.finite, self.warnings + tuple(messages))

    def to_spec(self):
        return {"kind": self.kind, "grid": self.grid.to_dict()}


PRESETS = (Quadratic, IndicatorBall, IndicatorBox, NormMultiple, BoxSupport)


@dataclass(frozen=True, eq=False)
class LogConcaveFunction:
    """``f = exp(-u)``, extended by zero where ``u = +inf``."""

    u: ConvexFunction

    @property
    def dim(self) -> int:
        return self.u.dim

    def __call__(self, x) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(-self.u.values(x))

    @classmethod
    def gaussian(cls, dim: int, scale: float = 1.0) -> "LogConcaveFunction":
        """``exp(-scale ||x||^2 / 2)``."""
        return cls(Quadratic.isotropic(dim, scale))

    @classmethod
    def characteristic_ball(cls, dim: int, radius: float = 1.0) -> "LogConcaveFunction":
        return cls(IndicatorBall(radius, dim))

    @classmethod
    def characteristic_box(cls, halfwidths) -> "LogConcaveFunction":
        return cls(IndicatorBox(halfwidths))


class EvalResult(NamedTuple):
    value: float
    gradient: Optional[np.ndarray]


def evaluate(u: ConvexFunction, x) -> EvalResult:
    """Value and (when available) gradient of ``u`` at a single point."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != u.dim:
        raise DimensionError(f"point has dimension {x.size}, function has {u.dim}")
    if isinstance(u, GridFunction) and not u.grid.contains(x):
        raise ValueError("point lies outside the grid box")
    value = float(u.values(x))
    grad = u.gradient(x) if math.isfinite(value) else None
    if grad is not None:
        grad = np.asarray(grad, dtype=float).reshape(-1)
        if not np.all(np.isfinite(grad)):
            grad = None
    return EvalResult(value, grad)


def discretely_convex(values: np.ndarray, finite: np.ndarray, rtol: float = 1e-10) -> bool:
    """Every 1-D lattice line has a contiguous finite run with nondecreasing differences."""
    values = np.asarray(values, dtype=float)
    finite = np.asarray(finite, dtype=bool)
    if not finite.any():
        return True
    tol = rtol * (1.0 + np.abs(values[finite]).max())
    for axis in range(values.ndim):
        v = np.moveaxis(np.where(finite, values, 0.0), axis, -1).reshape(-1, values.shape[axis])
        m = np.moveaxis(finite, axis, -1).reshape(-1, values.shape[axis])
        # finite nodes form one contiguous run per line
        starts = np.diff(m.astype(np.int8), axis=1) == 1
        if np.any(starts.sum(axis=1) + m[:, 0] > 1):
            return False
        if v.shape[1] < 3:
            continue
        d2 = v[:, 2:] - 2 * v[:, 1:-1] + v[:, :-2]
        ok = m[:, 2:] & m[:, 1:-1] & m[:, :-2]
        if np.any(d2[ok] < -tol):
            return False
    return True


def sample_to_grid(u: ConvexFunction, grid: GridSpec, check: bool = True) -> GridFunction:
    """Sample ``u`` at the nodes of ``grid``; ``+inf`` becomes a masked node."""
    if grid.dim != u.dim:
        raise DimensionError(f"grid dimension {grid.dim} != function dimension {u.dim}")
    vals = np.asarray(u.values(grid.nodes()), dtype=float)
    out = GridFunction.from_values(grid, vals)
    if check and not discretely_convex(out.node_values, out.finite):
        raise ConvexityError("sampled values are not discretely convex; refine the grid")
    return out


def _shell_fit(u: GridFunction):
    vals, fin = u.node_values, u.finite
    g = u.grid
    nodes = g.nodes()
    outer = ~g.interior_mask(1)
    second = g.interior_mask(1) & ~g.interior_mask(2)
    sel = (outer | second) & fin
    if not np.any(outer & fin):
        # the finite set sits strictly inside the box: bounded domain
        return math.inf, float(vals[fin].min()) if fin.any() else math.nan
    r = np.linalg.norm(nodes[sel], axis=-1)
    y = vals[sel]
    A = np.stack([r, np.ones_like(r)], axis=1)
    (a, _), *_ = np.linalg.lstsq(A, y, rcond=None)
    rr = np.linalg.norm(nodes[fin], axis=-1)
    b = float(np.min(vals[fin] - a * rr))
    return float(a), b


def validate_class(u: ConvexFunction) -> dict:
    """Diagnostic flags for membership in the classes ``L`` and ``L'``.

    ``superlinear`` is ``None`` for grid samples: growth beyond the box cannot
    be decided from finitely many nodes.
    """
    report = {"kind": u.kind, "proper": True, "convex": True, "coercive": True,
              "superlinear": None, "coercive_fit": None}
    if isinstance(u, Quadratic):
        report["superlinear"] = True
    elif isinstance(u, (IndicatorBall, IndicatorBox)):
        report["superlinear"] = True
    elif isinstance(u, NormMultiple):
        report["coercive"] = u.a > 0
        report["superlinear"] = False
    elif isinstance(u, BoxSupport):
        report["coercive"] = bool(np.all(u.weights > 0))
        report["superlinear"] = False
    elif isinstance(u, GridFunction):
        report["proper"] = bool(u.finite.any())
        report["convex"] = discretely_convex(u.node_values, u.finite)
        if report["proper"]:
            a, b = _shell_fit(u)
            report["coercive_fit"] = {"a": a, "b": b}
            report["coercive"] = a > 0
        else:
            report["coercive"] = False
    return report


def suggest_box(u: ConvexFunction, tail_tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """A box outside of which ``exp(-u)`` carries negligible mass.

    Gaussians get ``6 sigma`` per axis around the mode; bodies get their
    bounding box with a 10% margin.
    """
    n = u.dim
    if isinstance(u, Quadratic):
        sigma = np.sqrt(np.diag(np.linalg.inv(u.Q)))
        center = u.minimizer
        return center - 6 * sigma, center + 6 * sigma
    if isinstance(u, IndicatorBall):
        r = 1.1 * max(u.radius, 1e-3)
        return -r * np.ones(n), r * np.ones(n)
    if isinstance(u, IndicatorBox):
        a = 1.1 * np.maximum(u.halfwidths, 1e-3)
        return -a, a
    if isinstance(u, NormMultiple) and u.a > 0:
        r = (math.log(1 / tail_tol) + n * math.log(n + 1)) / u.a
        return -r * np.ones(n), r * np.ones(n)
    if isinstance(u, BoxSupport) and np.all(u.weights > 0):
        r = (math.log(1 / tail_tol) + n) / u.weights
        return -r, r
    if isinstance(u, GridFunction):
        return np.array(u.grid.lo), np.array(u.grid.hi)
    raise ValueError(f"no integrable box for {u.kind}")


# -- function-spec files ----------------------------------------------------


def write_grid_csv(u: GridFunction, path) -> None:
    path = Path(path)
    g = u.grid
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([g.dim])
        for a, b, c in zip(g.lo, g.hi, g.count):
            w.writerow([repr(a), repr(b), c])
        flat = u.node_values.reshape(-1, g.count[-1])
        fin = u.finite.reshape(-1, g.count[-1])
        for row, frow in zip(flat, fin):
            w.writerow([repr(float(v)) if ok else "inf" for v, ok in zip(row, frow)])


def read_grid_csv(path) -> GridFunction:
    with Path(path).open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    dim = int(rows[0][0])
    axes = [(float(r[0]), float(r[1]), int(r[2])) for r in rows[1 : 1 + dim]]
    g = GridSpec(*zip(*axes))
    tokens = [t.strip() for r in rows[1 + dim :] for t in r]
    if len(tokens) != g.size:
        raise ValueError(f"grid CSV holds {len(tokens)} values, expected {g.size}")
    fin = np.array([t.lower() not in ("inf", "+inf") for t in tokens])
    vals = np.array([float(t) if ok else 0.0 for t, ok in zip(tokens, fin)])
    return GridFunction(g, vals.reshape(g.shape), fin.reshape(g.shape))


def from_spec(spec: dict, dim: Optional[int] = None, base_dir=None) -> ConvexFunction:
    kind = spec.get("kind")
    n = spec.get("dim", dim)
    if kind == "quadratic":
        if "Q" in spec:
            Q = np.atleast_2d(np.asarray(spec["Q"], dtype=float))
        else:
            if n is None:
                raise ValueError("quadratic spec needs Q or dim")
            Q = float(spec.get("scale", 1.0)) * np.eye(n)
        return Quadratic(Q, spec.get("b"), spec.get("c", 0.0))
    if kind == "indicator_ball":
        if n is None:
            raise ValueError("indicator_ball spec needs dim")
        return IndicatorBall(spec.get("radius", 1.0), int(n))
    if kind == "indicator_box":
        return IndicatorBox(spec["halfwidths"])
    if kind == "norm_multiple":
        if n is None:
            raise ValueError("norm_multiple spec needs dim")
        return NormMultiple(spec.get("a", 1.0), int(n))
    if kind == "box_support":
        return BoxSupport(spec["weights"])
    if kind == "grid":
        path = Path(spec["csv"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return read_grid_csv(path)
    raise ValueError(f"unknown function kind {kind!r}")


def load_spec(path, dim: Optional[int] = None) -> ConvexFunction:
    path = Path(path)
    spec = json.loads(path.read_text())
    u = from_spec(spec, dim, base_dir=path.parent)
    if dim is not None and u.dim != dim:
        raise DimensionError(f"{path} describes a {u.dim}-dimensional function, expected {dim}")
    return u
