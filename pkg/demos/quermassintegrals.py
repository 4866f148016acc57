"""
Functional Quermassintegrals
============================

``W_j(f)`` averages the total mass of projections of ``f`` over random
``(n - j)``-dimensional subspaces. On characteristic functions it
reproduces the classical values of convex bodies.
"""

import numpy as np

import lcq
from lcq.convex import LogConcaveFunction, Quadratic
from lcq.geometry import ball, body_quermass, box, steiner_coefficients
from lcq.grid import GridPlan

# the unit ball: every W_j equals the volume of the ball
B = LogConcaveFunction.characteristic_ball(3)
plan = GridPlan(1.25, 129)
for j in range(3):
    r = lcq.quermassintegral(B, j, mode="axis", plan=plan)
    print(f"W_{j}(ball) = {r.value:.4f}  (exact {body_quermass(ball(3), j):.4f})")

# the square [-1,1]^2: Steiner polynomial 4 + 8 eps + pi eps^2
print("Steiner coefficients of the square:", steiner_coefficients(box([1.0, 1.0])))
S = LogConcaveFunction.characteristic_box([1.0, 1.0])
r = lcq.quermassintegral(S, 1, mode="mc", samples=256, seed=0, plan=GridPlan(1.6, 257))
print(f"W_1(square) by Monte Carlo: {r.value:.4f} +- {r.stderr:.4f}  (exact {body_quermass(box([1, 1]), 1):.4f})")

# an anisotropic Gaussian: projections differ, so the average has a spread
f = LogConcaveFunction(Quadratic(np.diag([0.5, 1.0, 4.0])))
r = lcq.quermassintegral(f, 1, mode="mc", samples=256, seed=1)
print(f"W_1(gaussian) = {r.value:.4f} +- {r.stderr:.4f}")

# monotone under f <= g
g = LogConcaveFunction(Quadratic(np.diag([0.4, 0.9, 3.0])))
print("W_1(f) <= W_1(g):", r.value <= lcq.quermassintegral(g, 1, samples=256, seed=1).value)
