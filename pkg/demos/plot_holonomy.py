"""
Holonomy is bounded by curvature times length squared
=====================================================

For a connection on the unit square the holonomy around a small loop is
close to the identity, with distance at most ``||F|| l^2 / (4 pi)``.  A
constant curvature connection attains the bound for round circles.
"""

import numpy as np

from invaction.holonomy import circle, constant_curvature_chart, holonomy_bound_scaling, random_smooth_chart

radii = (0.5, 0.25, 0.1)
res = holonomy_bound_scaling(constant_curvature_chart(0.5), [circle((0, 0), r, 256) for r in radii])
for r, q in zip(radii, res["ratios"]):
    print(f"r = {r:<5} d(1,h)/(|F| l^2) = {q:.12f}   1/(4 pi) = {1 / (4 * np.pi):.12f}")

# A random smooth SU(2) connection: the distance shrinks like l^2.
radii = (0.2, 0.1, 0.05, 0.025)
res = holonomy_bound_scaling(random_smooth_chart(seed=0), [circle((0, 0), r, 256) for r in radii])
print("distances:", np.array2string(np.asarray(res["distances"]), precision=3))
print(f"log-log slope {res['slope']:.4f}, largest ratio {max(res['ratios']):.4f}")
