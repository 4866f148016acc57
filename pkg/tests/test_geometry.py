import math

import numpy as np
import pytest
from scipy import integrate

from lcq.geometry import (
    ball,
    body_quermass,
    body_volume,
    box,
    gaussian_moments,
    omega,
    omega_table,
    scaled_sum,
    steiner_coefficients,
)


def test_omega_values():
    np.testing.assert_allclose([omega(k) for k in range(4)], [1.0, 2.0, math.pi, 4 * math.pi / 3], atol=1e-12)
    np.testing.assert_allclose(omega_table(6), [omega(k) for k in range(7)], rtol=1e-14)


def test_ball_quermass():
    assert body_quermass(ball(3), 1) == pytest.approx(4 * math.pi / 3, abs=1e-12)
    for j in range(3):
        assert body_quermass(ball(3, 2.0), j) == pytest.approx(omega(3) * 2.0 ** (3 - j))


def test_box_values():
    K = box([1.0, 1.0])
    assert body_volume(K) == 4.0
    np.testing.assert_allclose(steiner_coefficients(K), [4.0, 8.0, math.pi], atol=1e-12)
    # ball convention: the same expansion reproduces (R + eps)^n omega_n
    np.testing.assert_allclose(steiner_coefficients(ball(2, 1.0)), [math.pi, 2 * math.pi, math.pi], atol=1e-12)


def test_box_parallel_volume_by_counting():
    # area of [-1,1]^2 + eps B, counted on a fine lattice
    eps, h = 0.5, 2e-3
    x = np.arange(-1.5, 1.5 + h / 2, h)
    X, Y = np.meshgrid(x, x, indexing="ij")
    dx = np.maximum(np.abs(X) - 1, 0)
    dy = np.maximum(np.abs(Y) - 1, 0)
    area = np.count_nonzero(dx**2 + dy**2 <= eps**2) * h * h
    poly = np.polyval(steiner_coefficients(box([1.0, 1.0]))[::-1], eps)
    assert area == pytest.approx(poly, rel=5e-3)


def test_box_3d_intrinsic():
    # W_1 of a box in R^3 is a third of its surface area
    K = box([1.0, 2.0, 0.5])
    assert body_quermass(K, 1) == pytest.approx(2 * (2 * 4 + 2 * 1 + 4 * 1) / 3)


def test_scaled_sums():
    assert body_quermass(scaled_sum(ball(3), ball(3, 2.0), 0.5), 0) == pytest.approx(omega(3) * 8)
    s = scaled_sum(box([1.0, 1.0]), ball(2), 0.5)
    assert body_volume(s) == pytest.approx(4 + 8 * 0.5 + math.pi * 0.25)
    with pytest.raises(ValueError):
        box([1.0, -1.0])


def test_gaussian_moments_by_radial_quadrature():
    for n in (1, 2, 3):
        area = n * omega(n)  # surface of the unit sphere
        for k in (0, 2):
            val, _ = integrate.quad(lambda r: r ** (k + n - 1) * math.exp(-r * r / 2), 0, np.inf)
            assert gaussian_moments(n, k) == pytest.approx(area * val, rel=1e-10)
    assert gaussian_moments(2, 2) == pytest.approx(4 * math.pi)
    with pytest.raises(ValueError):
        gaussian_moments(2, 1)
