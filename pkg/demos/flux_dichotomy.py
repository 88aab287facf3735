"""Far-field decay of the oscillating flow for a time-dependent versus a
constant boundary flux.

Both scenarios share the same oseenlets; only the source strength differs.
The boundary integrals are evaluated from the boundary data alone and the
decay exponent of the purely periodic part is fitted along a few rays.
"""
import numpy as np

from oseen_tp import asymptotics as As
from oseen_tp import scenarios as S
from oseen_tp.core import KernelParams, Ray
from oseen_tp.potentials import represent_pressure_linear, represent_velocity_linear

params = KernelParams(zeta=(1.0, 0.0, 0.0), nu=1.0, period=1.0, n_modes=8)
rays = [Ray.geometric(d, 8, 64, label=l) for d, l in (((0, 1, 0), "transverse"), ((1, 1, 0), "diagonal"))]

for sc in S.make_flux_pair(params):
    mesh = sc.mesh(3, "7point")
    bd = S.boundary_data(sc, mesh)
    phi = As.flux_Phi(mesh, bd.v_b)
    print(f"{sc.label}: periodic part of the flux {np.abs(phi.purely_periodic().coeffs).max():.3g}")
    for ray in rays:
        v = As.remainder_samples(lambda x: represent_velocity_linear(mesh, bd, None, x, params), None, ray)
        p = As.remainder_samples(lambda x: represent_pressure_linear(mesh, bd, None, x, params), None, ray)
        print(f"  {ray.label:10s} velocity {As.fit_table(v).exponent:+.2f}   pressure {As.fit_table(p).exponent:+.2f}")
