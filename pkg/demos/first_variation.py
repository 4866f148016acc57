"""
Mixed Quermassintegrals two ways
================================

``W_j(f, g)`` is the first variation of ``W_j`` along ``f (+) t.g``. It is
estimated by extrapolated finite differences in ``t`` and, independently,
as the integral of the support function of ``g`` against the gradient
image of ``f`` on random subspaces.
"""

import math

import numpy as np

import lcq
from lcq.convex import LogConcaveFunction, Quadratic
from lcq.grid import GridPlan

f = LogConcaveFunction.gaussian(2)
plan = GridPlan(6.0, 129)

fd = lcq.mixed_quermass_fd(f, f, 0, plan=plan)
rep = lcq.mixed_quermass_representation(f, f, 0, plan=plan)
print(f"finite differences: {fd.value:.6f}")
print(f"representation:     {rep.value:.6f}")
print(f"pi:                 {math.pi:.6f}")
print("one-sided slopes:", np.round(fd.details["one_sided"], 5))

# a less symmetric pair in three dimensions
f3 = LogConcaveFunction(Quadratic(np.diag([0.8, 1.0, 2.0])))
g3 = LogConcaveFunction(Quadratic(np.diag([1.5, 1.0, 0.7])))
kw = dict(samples=64, seed=3)
a = lcq.mixed_quermass_fd(f3, g3, 1, **kw)
b = lcq.mixed_quermass_representation(f3, g3, 1, plan=GridPlan(6.0, 65), **kw)
print(f"n = 3, j = 1: fd {a.value:.4f} +- {a.stderr:.4f}, representation {b.value:.4f} +- {b.stderr:.4f}")

# sharing subspaces across t cancels most of the Monte Carlo noise
ind = lcq.mixed_quermass_fd(f3, g3, 1, common_samples=False, **kw)
print(f"stderr with shared subspaces {a.stderr:.2e}, with fresh subspaces {ind.stderr:.2e}")
