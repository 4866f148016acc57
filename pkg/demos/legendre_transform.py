"""
Discrete Legendre transforms
============================

The Fenchel conjugate of a sampled convex function, computed axis by axis
with a lower-hull sweep, then used for infimal convolution.
"""

import time

import numpy as np

import lcq
from lcq.convex import IndicatorBox, Quadratic, sample_to_grid
from lcq.grid import GridSpec

# a half square sampled on [-4, 4]; its conjugate is again a half square
g = GridSpec.cube(1, 4.0, 257)
u = sample_to_grid(Quadratic.isotropic(1), g)
dual = GridSpec.cube(1, 3.0, 257)
c = lcq.conjugate(u, dual)
y = dual.axes()[0]
print("max |u* - y^2/2| on 257 nodes:", np.abs(c.node_values - 0.5 * y**2).max())

# the brute-force maximum over all primal nodes agrees to rounding
b = lcq.conjugate_bruteforce(u, dual)
print("fast vs brute force:", np.abs(c.node_values - b.node_values).max())

# the sweep is linear in the node count
for N in (1 << 19, 1 << 20, 1 << 21):
    gN = GridSpec.cube(1, 4.0, N)
    uN = sample_to_grid(Quadratic.isotropic(1), gN, check=False)
    dN = GridSpec.cube(1, 3.0, N)
    lcq.conjugate(uN, dN)
    t = time.perf_counter()
    lcq.conjugate(uN, dN)
    print(f"N = {N:8d}: {time.perf_counter() - t:.3f} s")

# the indicator of the square has the l1 norm as conjugate
box = sample_to_grid(IndicatorBox(np.ones(2)), GridSpec.cube(2, 2.0, 129))
d2 = GridSpec.cube(2, 3.0, 129)
err = np.abs(lcq.conjugate(box, d2).node_values - np.abs(d2.nodes()).sum(axis=-1)).max()
print("square indicator vs l1 norm:", err)

# infimal convolution through the dual route: conjugates add
w = lcq.inf_convolution(u, u, g)
x = g.axes()[0]
inner = np.abs(x) <= 3
print("u [] u vs x^2/4:", np.abs(w.node_values[inner] - 0.25 * x[inner] ** 2).max())

# domains add as well: [-1,1] [] [-1,1] lives on [-2,2]
seg = sample_to_grid(IndicatorBox(np.ones(1)), GridSpec.cube(1, 3.0, 61))
s = lcq.inf_convolution(seg, seg, GridSpec.cube(1, 3.0, 61), GridSpec.cube(1, 4.0, 81))
xs = s.grid.axes()[0][s.finite]
print("domain of the sum:", xs.min(), xs.max())
