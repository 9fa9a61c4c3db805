"""
A radial vortex on the cylinder
===============================

The equivariant ansatz ``u = rho(s) exp(2 pi i k t)`` reduces the vortex
equations to an ODE whose solutions tending to ``rho = 1`` form the stable
manifold of a saddle.  We compute it, embed it on a grid, and check that
the energy of a segment equals the drop in invariant action.
"""

import numpy as np

from invaction.lie_geom import TorusAction
from invaction.vortex import embed_radial, energy_action_check, solve_radial, vortex_residual

act = TorusAction.standard()
prof = solve_radial(k_deg=1, lam0=1.0, s_max=6.0, rho0=0.1)
print(f"psi(0) = {prof.psi[0]:.10f}  (shooting: {prof.info['psi0_shooting']:.10f})")
print(f"rho(1) = {prof.rho[1000]:.8f}, rho(3) = {prof.rho[3000]:.12f}")

# On a 256 x 256 grid over [1, 3] the equations hold to discretisation error.
fields = embed_radial(prof, Nt=256, s_nodes=np.linspace(1.0, 3.0, 256))
res = vortex_residual(fields, act)
print(f"residuals: {res['max_holomorphic']:.1e}, {res['max_curvature']:.1e}")

# Energy on [1, 3] against the drop of the invariant action of the slices.
chk = energy_action_check(fields, 1.0, 3.0, act)
print(f"E = {chk['E']:.10e}   A(1) - A(3) = {chk['action_drop']:.10e}   "
      f"relative error {chk['relative_error']:.1e}")
