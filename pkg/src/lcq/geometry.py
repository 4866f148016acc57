"""Closed-form reference values for convex bodies and Gaussians.

Quermassintegrals follow the normalisation ``W_j(B_R) = omega_n R^(n-j)``,
which fixes the Steiner expansion as
``vol(K + eps B) = sum_j C(n, j) W_j(K) eps^j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.special import gamma


def omega(k: int) -> float:
    """Volume of the unit ball in ``R^k``."""
    if k < 0:
        raise ValueError("dimension must be nonnegative")
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def omega_table(n_max: int) -> np.ndarray:
    k = np.arange(n_max + 1)
    return np.pi ** (k / 2) / gamma(k / 2 + 1)


@dataclass(frozen=True)
class BodySpec:
    kind: str  # "ball" | "box" | "scaled_sum"
    dim: int
    radius: float = 0.0
    halfwidths: Optional[tuple] = None
    parts: Optional[tuple] = None  # (K, L) for scaled_sum
    t: float = 0.0

    def __post_init__(self):
        if self.kind == "ball" and self.radius <= 0:
            raise ValueError("ball radius must be positive")
        if self.kind == "box":
            if self.halfwidths is None or len(self.halfwidths) != self.dim or min(self.halfwidths) <= 0:
                raise ValueError("box halfwidths must be positive, one per axis")
        if self.kind == "scaled_sum" and (self.parts is None or self.t < 0):
            raise ValueError("scaled_sum needs (K, L) and t >= 0")


def ball(dim: int, radius: float = 1.0) -> BodySpec:
    return BodySpec("ball", dim, radius=float(radius))


def box(halfwidths) -> BodySpec:
    hw = tuple(float(a) for a in np.atleast_1d(halfwidths))
    return BodySpec("box", len(hw), halfwidths=hw)


def scaled_sum(K: BodySpec, L: BodySpec, t: float) -> BodySpec:
    """The Minkowski combination ``K + t L``."""
    if K.dim != L.dim:
        raise ValueError("bodies must share the ambient dimension")
    return BodySpec("scaled_sum", K.dim, parts=(K, L), t=float(t))


def _box_intrinsic(halfwidths, m: int) -> float:
    sides = 2 * np.asarray(halfwidths, dtype=float)
    return float(sum(np.prod(c) for c in combinations(sides, m))) if m else 1.0


def _simplify(body: BodySpec) -> BodySpec:
    if body.kind != "scaled_sum":
        return body
    K, L = (_simplify(p) for p in body.parts)
    t = body.t
    if t == 0:
        return K
    if K.kind == "ball" and L.kind == "ball":
        return ball(K.dim, K.radius + t * L.radius)
    if K.kind == "box" and L.kind == "box":
        return box(np.add(K.halfwidths, np.multiply(t, L.halfwidths)))
    return BodySpec("scaled_sum", K.dim, parts=(K, L), t=t)


def body_quermass(body: BodySpec, j: int) -> float:
    """``W_j(body)`` for ``0 <= j <= n``."""
    n = body.dim
    if not 0 <= j <= n:
        raise ValueError(f"need 0 <= j <= {n}")
    if j == n:
        return omega(n)
    body = _simplify(body)
    if body.kind == "ball":
        return omega(n) * body.radius ** (n - j)
    if body.kind == "box":
        return omega(j) * _box_intrinsic(body.halfwidths, n - j) / math.comb(n, j)
    K, L = body.parts
    t = body.t
    if K.kind == "box" and L.kind == "ball":
        # W_j(K + rB) = sum_k C(n-j, k) W_{j+k}(K) r^k
        r = t * L.radius
        return sum(math.comb(n - j, k) * body_quermass(K, j + k) * r**k for k in range(n - j + 1))
    if K.kind == "ball" and L.kind == "box":
        # R B + t L = t (L + (R/t) B)
        return t ** (n - j) * body_quermass(scaled_sum(L, ball(n, K.radius / t), 1.0), j)
    raise ValueError(f"unsupported body combination {K.kind} + t {L.kind}")


def steiner_coefficients(body: BodySpec) -> np.ndarray:
    """Coefficients of ``vol(body + eps B)`` in powers of ``eps``."""
    n = body.dim
    return np.array([math.comb(n, j) * body_quermass(body, j) for j in range(n + 1)])


def body_volume(body: BodySpec) -> float:
    return body_quermass(body, 0)


def gaussian_moments(n: int, k: int) -> float:
    """``int ||x||^k exp(-||x||^2/2) dx`` over ``R^n`` for ``k`` in ``{0, 2}``."""
    if k == 0:
        return (2 * math.pi) ** (n / 2)
    if k == 2:
        return n * (2 * math.pi) ** (n / 2)
    raise ValueError("only k = 0 and k = 2 are tabulated")
