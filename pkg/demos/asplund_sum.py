"""
Asplund sums of log-concave functions
=====================================

``f (+) t.g = exp(-(u [] (v t)))`` interpolates between functions the way
the Minkowski sum interpolates between bodies.
"""

import numpy as np

import lcq
from lcq.convex import LogConcaveFunction, Quadratic
from lcq.grid import GridSpec

# Gaussians stay Gaussian: the inverse covariances add
f = LogConcaveFunction.gaussian(1)
for t in (0.0, 0.5, 1.0, 2.0):
    s = lcq.asplund_sum(f, f, 1.0, t)
    print(f"t = {t}: potential x^2 / (2 * {1 / s.u.Q[0, 0]:.2f})")

# characteristic functions give Minkowski sums
K = LogConcaveFunction.characteristic_box([1.0, 2.0])
L = LogConcaveFunction.characteristic_ball(2, 0.5)
print("box + box:", lcq.asplund_sum(K, K, 1.0, 0.5).u.halfwidths)

# a disk and a Gaussian need the grid route
g = GridSpec.cube(2, 6.0, 129)
mix = lcq.asplund_sum(L, LogConcaveFunction.gaussian(2), 1.0, 1.0, g, GridSpec.cube(2, 12.0, 129))
print("mass of disk (+) gaussian:", lcq.total_mass(mix, g).value)

# support functions are additive
rng = np.random.default_rng(0)
fa = LogConcaveFunction(Quadratic(np.diag([1.0, 3.0])))
fb = LogConcaveFunction(Quadratic(np.diag([2.0, 0.5])))
y = rng.normal(size=(5, 2))
h = lcq.support_function(lcq.asplund_sum(fa, fb, 1.0, 1.0)).values(y)
print("h_{f+g} - h_f - h_g:", np.abs(h - lcq.support_function(fa).values(y) - lcq.support_function(fb).values(y)).max())

# the functional Brunn-Minkowski inequality
for lam in (0.25, 0.5, 0.75):
    J = lcq.total_mass(lcq.asplund_sum(fa, fb, lam, 1 - lam)).value
    rhs = lcq.total_mass(fa).value ** lam * lcq.total_mass(fb).value ** (1 - lam)
    print(f"lambda = {lam}: J = {J:.4f} >= {rhs:.4f}")
