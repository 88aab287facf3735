"""The steady and time-periodic Oseen kernels along a few rays.

The steady kernel decays like 1/|x| in the wake and like 1/|x|^2 across it;
the purely periodic kernel decays like |x|^-3 in every direction.
"""
import numpy as np

from oseen_tp import asymptotics as As
from oseen_tp.core import KernelParams, Ray
from oseen_tp.fundsol import oseen_steady, periodic_velocity_modes

params = KernelParams(zeta=(1.0, 0.0, 0.0), nu=1.0, period=1.0, n_modes=4)

print("ray          steady   periodic (L2 in time)")
for label, d in (("wake", (-1, 0, 0)), ("upstream", (1, 0, 0)), ("transverse", (0, 1, 0))):
    ray = Ray.geometric(d, 4, 64)
    steady = As.fit_decay(ray.radii, np.linalg.norm(oseen_steady(ray.points, params), axis=(1, 2)), drop=0)
    per = As.remainder_samples(lambda x: periodic_velocity_modes(x, params), None, ray, norm="l2")
    print(f"{label:10s}  {steady.exponent:+.2f}    {As.fit_table(per, drop=0).exponent:+.2f}")
