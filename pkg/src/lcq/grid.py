"""Cartesian evaluation lattices, multilinear interpolation and trapezoidal
quadrature."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np
from scipy import integrate


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned lattice ``prod_k linspace(lo[k], hi[k], count[k])``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    count: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        count = tuple(int(v) for v in np.atleast_1d(self.count))
        if not (len(lo) == len(hi) == len(count)) or len(lo) == 0:
            raise ValueError("lo, hi and count must have the same positive length")
        for a, b, c in zip(lo, hi, count):
            if not a < b:
                raise ValueError(f"grid axis needs lo < hi, got [{a}, {b}]")
            if c < 2:
                raise ValueError(f"grid axis needs at least 2 nodes, got {c}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "count", count)

    @classmethod
    def cube(cls, dim: int, half_width: float, count: int) -> "GridSpec":
        return cls((-half_width,) * dim, (half_width,) * dim, (count,) * dim)

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float], count) -> "GridSpec":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        count = np.broadcast_to(np.atleast_1d(count), lo.shape)
        return cls(tuple(lo), tuple(np.atleast_1d(hi)), tuple(count))

    @property
    def dim(self) -> int:
        return len(self.count)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.count

    @property
    def size(self) -> int:
        return int(np.prod(self.count))

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / (np.array(self.count) - 1)

    @property
    def h(self) -> float:
        """Largest cell spacing."""
        return float(self.spacing.max())

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, c) for a, b, c in zip(self.lo, self.hi, self.count)]

    def nodes(self) -> np.ndarray:
        """All nodes, shape ``count + (dim,)``, row-major."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def contains(self, x, atol: float = 1e-12) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = np.array(self.lo), np.array(self.hi)
        span = hi - lo
        return np.all((x >= lo - atol * span) & (x <= hi + atol * span), axis=-1)

    def interior_mask(self, width: int = 1) -> np.ndarray:
        mask = np.zeros(self.count, dtype=bool)
        mask[tuple(slice(width, c - width) for c in self.count)] = True
        return mask

    def scaled(self, alpha: float) -> "GridSpec":
        return GridSpec(tuple(alpha * v for v in self.lo), tuple(alpha * v for v in self.hi), self.count)

    def shifted(self, offset) -> "GridSpec":
        offset = np.broadcast_to(np.asarray(offset, dtype=float), (self.dim,))
        return GridSpec(tuple(np.array(self.lo) + offset), tuple(np.array(self.hi) + offset), self.count)

    def refined(self) -> "GridSpec":
        """Halve the spacing on every axis."""
        return GridSpec(self.lo, self.hi, tuple(2 * c - 1 for c in self.count))

    def has_node_at_origin(self) -> bool:
        for a, h, c in zip(self.lo, self.spacing, self.count):
            k = -a / h
            if not (0 <= round(k) < c and abs(k - round(k)) < 1e-9):
                return False
        return True

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "count": list(self.count)}


@numba.njit(cache=True, nogil=True)
def _multilinear(values, finite, lo, step, count, pts):
    n = count.shape[0]
    m = pts.shape[0]
    out = np.empty(m)
    strides = np.empty(n, dtype=np.int64)
    s = 1
    for k in range(n - 1, -1, -1):
        strides[k] = s
        s *= count[k]
    base = np.empty(n, dtype=np.int64)
    frac = np.empty(n)
    for p in range(m):
        inside = True
        for k in range(n):
            t = (pts[p, k] - lo[k]) / step[k]
            if t < -1e-9 or t > count[k] - 1 + 1e-9:
                inside = False
                break
            i0 = int(np.floor(t))
            if i0 < 0:
                i0 = 0
            if i0 > count[k] - 2:
                i0 = count[k] - 2
            w = t - i0
            if w < 0.0:
                w = 0.0
            elif w > 1.0:
                w = 1.0
            base[k] = i0
            frac[k] = w
        if not inside:
            out[p] = np.inf
            continue
        acc = 0.0
        for corner in range(1 << n):
            w = 1.0
            idx = 0
            for k in range(n):
                if (corner >> k) & 1:
                    w *= frac[k]
                    idx += (base[k] + 1) * strides[k]
                else:
                    w *= 1.0 - frac[k]
                    idx += base[k] * strides[k]
            if w == 0.0:
                continue
            if not finite[idx]:
                acc = np.inf
                break
            acc += w * values[idx]
        out[p] = acc
    return out


def interpolate(grid: GridSpec, values: np.ndarray, finite: np.ndarray, points) -> np.ndarray:
    """Multilinear interpolation; ``+inf`` outside the box or next to a masked node.

    Corners carrying zero weight are ignored, so interpolation is exact at nodes.
    """
    pts = np.asarray(points, dtype=float)
    lead = pts.shape[:-1]
    pts = np.ascontiguousarray(pts.reshape(-1, grid.dim))
    vals = np.where(finite, values, 0.0).astype(float).ravel()
    out = _multilinear(
        vals,
        np.ascontiguousarray(finite.ravel()),
        np.array(grid.lo),
        grid.spacing,
        np.array(grid.count, dtype=np.int64),
        pts,
    )
    return out.reshape(lead)


def trapezoid(values: np.ndarray, grid: GridSpec) -> float:
    """Tensor-product trapezoidal rule over the whole grid box."""
    out = np.asarray(values, dtype=float)
    for h in grid.spacing:
        out = integrate.trapezoid(out, dx=h, axis=0)
    return float(out)


@dataclass(frozen=True)
class GridPlan:
    """Cube lattices used by the Grassmannian pipelines.

    Ambient, target (subspace) and fiber grids all span ``[-half_width,
    half_width]`` per axis with ``count`` nodes; the dual grid defaults to a
    slope-range suggestion unless ``dual_half_width`` is given.
    """

    half_width: float
    count: int
    dual_half_width: float | None = None
    dual_count: int | None = None
    fiber_count: int | None = None

    def ambient(self, n: int) -> GridSpec:
        return GridSpec.cube(n, self.half_width, self.count)

    def target(self, i: int) -> GridSpec:
        return GridSpec.cube(i, self.half_width, self.count)

    def fiber(self, k: int) -> GridSpec | None:
        if k == 0:
            return None
        return GridSpec.cube(k, self.half_width, self.fiber_count or self.count)

    def dual(self, n: int) -> GridSpec | None:
        if self.dual_half_width is None:
            return None
        return GridSpec.cube(n, self.dual_half_width, self.dual_count or self.count)

    def to_dict(self) -> dict:
        return {
            "half_width": self.half_width,
            "count": self.count,
            "dual_half_width": self.dual_half_width,
            "dual_count": self.dual_count,
            "fiber_count": self.fiber_count,
        }
