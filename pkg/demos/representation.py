"""Reconstruct a manufactured flow from its boundary data.

A pulsating source inside the unit sphere gives an exact Oseen flow.  Its
velocity trace and traction on a triangulated sphere are fed to the linear
representation formulas and the result is compared with the exact field at
a few far points, for increasing mesh refinement.
"""
import numpy as np

from oseen_tp import scenarios as S
from oseen_tp.core import KernelParams
from oseen_tp.potentials import represent_pressure_linear, represent_velocity_linear

params = KernelParams(zeta=(1.0, 0.0, 0.0), nu=1.0, period=1.0, n_modes=2)
sc = S.pulsating_source(params)
x = np.array([[6.0, 0, 0], [-6, 0, 0], [0, 8, 0], [5, 5, 3]])
v_ex, p_ex = S.velocity_modes(sc, x), S.pressure_modes(sc, x)

for rule in ("centroid", "7point"):
    for level in (1, 2, 3):
        mesh = sc.mesh(level, rule)
        bd = S.boundary_data(sc, mesh)
        v = represent_velocity_linear(mesh, bd, None, x, params)
        p = represent_pressure_linear(mesh, bd, None, x, params)
        ev = np.abs(v.coeffs - v_ex.coeffs).max() / np.abs(v_ex.coeffs).max()
        ep = np.abs(p.coeffs - p_ex.coeffs).max() / np.abs(p_ex.coeffs).max()
        print(f"{rule:8s} level {level}  {mesh.n_nodes:6d} nodes  velocity {ev:.2e}  pressure {ep:.2e}")
