"""Time-periodic Oseen fundamental solutions, layer potentials and far-field asymptotics."""
from .core import (KernelParams, FourierSeries, SurfaceMesh, Ray, wake_weight, log_plus,
                   fourier_convolve, fourier_product, fourier_time_derivative, sphere_mesh, load_mesh)

__all__ = ["KernelParams", "FourierSeries", "SurfaceMesh", "Ray", "wake_weight", "log_plus",
           "fourier_convolve", "fourier_product", "fourier_time_derivative", "sphere_mesh", "load_mesh"]
