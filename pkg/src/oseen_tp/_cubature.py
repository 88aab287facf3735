"""
Volume cubature for exterior domains with a weakly singular kernel.

A target point ``x`` gets a two-centre rule: a smooth bump around ``x`` is
integrated in spherical coordinates centred at ``x`` (the r^2 Jacobian absorbs
a 1/|x-y| or 1/|x-y|^2 singularity), and the complementary part is integrated
on an origin-centred shell grid with geometric radial panels.
"""
from __future__ import annotations

import math

import numpy as np


def _gl(n, a, b):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w


def _frame(axis):
    a = np.asarray(axis, float)
    a = a / np.linalg.norm(a)
    e1 = np.cross(a, [0.0, 0.0, 1.0])
    if np.linalg.norm(e1) < 1e-8:
        e1 = np.cross(a, [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(a, e1), a


def sphere_directions(n_theta, n_phi, axis=(0.0, 0.0, 1.0)):
    """Product Gauss(theta) x trapezoid(phi) directions and solid-angle weights.

    Gauss nodes in theta (with the sin Jacobian) cluster toward the poles,
    which sit on ``+-axis``.
    """
    th, wth = _gl(n_theta, 0.0, math.pi)
    ph = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    e1, e2, e3 = _frame(axis)
    st, ct = np.sin(th), np.cos(th)
    d = (st[:, None, None] * (np.cos(ph)[None, :, None] * e1 + np.sin(ph)[None, :, None] * e2)
         + ct[:, None, None] * e3)
    w = (wth * st)[:, None] * np.full(n_phi, 2.0 * math.pi / n_phi)[None, :]
    return d.reshape(-1, 3), w.ravel()


def ball_rule(center, radius, n_r=16, n_theta=16, n_phi=24, axis=(0.0, 0.0, 1.0)):
    r, wr = _gl(n_r, 0.0, radius)
    d, wd = sphere_directions(n_theta, n_phi, axis)
    nodes = np.asarray(center, float) + (r[:, None, None] * d[None]).reshape(-1, 3)
    w = ((wr * r ** 2)[:, None] * wd[None]).ravel()
    return nodes, w


def radial_panels(r_in, r_out, ratio=2.0, n_per=8):
    """Gauss nodes on geometric panels ``[r_in, r_in*ratio, ...]`` up to ``r_out``."""
    edges = [r_in] if r_in > 0 else [0.0, min(0.5, r_out)]
    while edges[-1] < r_out:
        edges.append(min(edges[-1] * ratio, r_out))
    rs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        r, w = _gl(n_per, a, b)
        rs.append(r)
        ws.append(w)
    return np.concatenate(rs), np.concatenate(ws)


def shell_rule(r_in, r_out, n_theta=32, n_phi=48, axis=(0.0, 0.0, 1.0), ratio=2.0, n_per=8):
    r, wr = radial_panels(r_in, r_out, ratio, n_per)
    d, wd = sphere_directions(n_theta, n_phi, axis)
    nodes = (r[:, None, None] * d[None]).reshape(-1, 3)
    w = ((wr * r ** 2)[:, None] * wd[None]).ravel()
    return nodes, w


def bump(t):
    """Smooth cutoff: 1 on [0, 1/2], 0 on [1, inf), C-infinity in between."""
    t = np.asarray(t, float)
    u = np.clip(2.0 * t - 1.0, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return 1.0 - a / (a + b)


def two_center_rule(x, r_inner, r_outer, axis=(1.0, 0.0, 0.0), local_axis=None, r_excl=0.0,
                    n_local=(16, 16, 24), n_shell=(32, 48), ratio=2.0, n_per=8):
    """Nodes/weights for ``int_{r_inner < |y| < r_outer} F(y) dy`` with F singular at x.

    ``r_inner = 0`` integrates over the full ball.  ``r_excl > 0`` removes the
    ball ``|y - x| < r_excl``.  The local ball radius is half the distance from
    ``x`` to the inner sphere (at least ``2 r_excl``).
    """
    x = np.asarray(x, float)
    rx = np.linalg.norm(x)
    rho = 0.5 * min(rx - r_inner, r_outer - rx, rx)
    if r_inner == 0:
        rho = 0.5 * min(rx, r_outer - rx)
    rho = max(rho, 2.0 * r_excl)
    if rho <= 0 or rx + rho > r_outer or (r_inner > 0 and rx - rho < r_inner):
        raise ValueError("target must lie strictly inside the integration shell")
    la = local_axis if local_axis is not None else axis
    nr, nt, nph = n_local
    r, wr = _gl(nr, r_excl, rho)
    d, wd = sphere_directions(nt, nph, la)
    nb = x + (r[:, None, None] * d[None]).reshape(-1, 3)
    wb = ((wr * r ** 2)[:, None] * wd[None]).ravel()
    wb = wb * bump(np.linalg.norm(nb - x, axis=1) / rho)
    ns, ws = shell_rule(r_inner, r_outer, *n_shell, axis=axis, ratio=ratio, n_per=n_per)
    ws = ws * (1.0 - bump(np.linalg.norm(ns - x, axis=1) / rho))
    keep = ws > 0
    return np.concatenate([nb, ns[keep]]), np.concatenate([wb, ws[keep]])
