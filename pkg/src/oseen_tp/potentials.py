"""
Layer and volume potentials of the time-periodic Oseen kernel and the
representation formulas assembled from them.

All potentials are evaluated mode by mode: a time convolution with the
kernel becomes a product of the kernel mode with the density mode.  Mode 0
uses the steady Oseen kernel, modes ``k != 0`` the periodic mode kernels, and
negative modes reuse the conjugate kernel of ``|k|``.

Boundary densities are ``FourierSeries`` with coefficient shape
``(2N+1, Q, ...)`` where ``Q`` is the number of mesh quadrature nodes.
The normal ``n`` entering the formulas points out of the fluid domain,
i.e. ``n = -mesh.normals``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import (FourierSeries, KernelParams, SurfaceMesh, compensated_sum, fourier_product,
                   fourier_time_derivative)
from .fundsol import grad_P, laplace_E, mode_kernel, pressure_P
from . import _cubature

_PAIR_BUDGET = 60000


class ProximityError(ValueError):
    """Evaluation point too close to the boundary or inside a forcing support."""


@dataclass(frozen=True)
class BoundaryData:
    """Boundary trace ``v_b`` and traction ``T(v,p) n`` at the mesh nodes.

    Both are ``FourierSeries`` of shape ``(2N+1, Q, 3)``; the traction uses
    the fluid-domain normal ``n = -mesh.normals``.
    """
    v_b: FourierSeries
    traction: FourierSeries | None = None

    def check(self, mesh: SurfaceMesh):
        q = mesh.n_nodes
        if self.v_b.value_shape != (q, 3):
            raise ValueError(f"v_b must have shape (2N+1, {q}, 3)")
        if self.traction is not None and self.traction.value_shape != (q, 3):
            raise ValueError(f"traction must have shape (2N+1, {q}, 3)")

    def require_traction(self):
        if self.traction is None:
            raise ValueError("traction required by this formula but not provided")
        return self.traction


@dataclass(frozen=True)
class VolumeForcing:
    """Force density sampled on volume quadrature nodes inside ``B_R``."""
    nodes: np.ndarray
    weights: np.ndarray
    f: FourierSeries
    support_radius: float

    def __post_init__(self):
        if np.any(np.asarray(self.weights) <= 0):
            raise ValueError("forcing weights must be positive")
        if np.any(np.linalg.norm(self.nodes, axis=1) > self.support_radius * (1 + 1e-12)):
            raise ValueError("forcing nodes outside the declared support ball")

    @classmethod
    def point(cls, y0, amplitude: FourierSeries):
        """Single node of unit weight: a concentrated force."""
        y0 = np.atleast_2d(np.asarray(y0, float))
        c = amplitude.coeffs.reshape(amplitude.coeffs.shape[0], 1, 3)
        return cls(y0, np.ones(1), FourierSeries(c, amplitude.period), float(np.linalg.norm(y0)))


# ---------------------------------------------------------------------------
# kernel tables over (target, source) pairs
# ---------------------------------------------------------------------------

def _check_targets(mesh, x):
    x = np.atleast_2d(np.asarray(x, float))
    d = mesh.distance_to(x)
    if np.any(d < 2.0 * mesh.max_diameter):
        raise ProximityError("evaluation point within two element diameters of the boundary")
    return x


def _modes_needed(*series):
    ks = set()
    for s in series:
        if s is not None:
            ks.update(abs(k) for k in s.active_modes())
    return sorted(ks)


def _chunks(n_targets, n_sources):
    step = max(1, _PAIR_BUDGET // max(n_sources, 1))
    for s in range(0, n_targets, step):
        yield slice(s, min(s + step, n_targets))


def _kernel_pairs(x, y, params, k, grad):
    d = x[:, None, :] - y[None, :, :]
    return mode_kernel(d, params, k, grad)


def _apply_modes(x, y, params, n_modes, ks, grad, contract):
    """Sum over sources of ``contract(k, G_k(x-y) [, dG_k])`` for each mode.

    ``contract(k, G, dG)`` receives kernel tables for one target chunk and
    returns per-pair contributions with the source axis at position 1.
    """
    out = None
    for k in ks:
        for sl in _chunks(len(x), len(y)):
            tabs = _kernel_pairs(x[sl], y, params, k, grad)
            G, dG = tabs if grad else (tabs, None)
            for kk in ((k, -k) if k else (0,)):
                if kk < 0:
                    Gk = np.conj(G)
                    dGk = np.conj(dG) if grad else None
                else:
                    Gk, dGk = G, dG
                val = compensated_sum(contract(kk, Gk, dGk), axis=1)
                if out is None:
                    out = np.zeros((2 * n_modes + 1, len(x)) + val.shape[1:], complex)
                out[kk + n_modes, sl] = val
    return out


def single_layer_velocity(mesh: SurfaceMesh, density: FourierSeries, x, params: KernelParams):
    """``int_S G(., x-y) * g(., y) dS(y)`` for a vector density ``g``."""
    x = _check_targets(mesh, x)
    n = density.n_modes
    ks = _modes_needed(density)
    if not ks:
        return FourierSeries.zeros(n, (len(x), 3), density.period)
    w = mesh.weights
    c = density.coeffs

    def contract(k, G, dG):
        return np.einsum("pqij,qj->pqi", G, c[k + n] * w[:, None])

    return FourierSeries(_apply_modes(x, mesh.nodes, params, n, ks, False, contract), density.period)


def stress_couple_layer(mesh: SurfaceMesh, v_b: FourierSeries, x, params: KernelParams):
    """Component ``i``: ``int_S v_b(y) . [2 nu D(G e_i)(x-y) n(y)] dS(y)``.

    ``D`` is the symmetric gradient with respect to the kernel argument and
    ``n = -mesh.normals``.
    """
    x = _check_targets(mesh, x)
    n = v_b.n_modes
    ks = _modes_needed(v_b)
    if not ks:
        return FourierSeries.zeros(n, (len(x), 3), v_b.period)
    w = mesh.weights
    nrm = mesh.fluid_normals
    nu = params.nu
    c = v_b.coeffs

    def contract(k, G, dG):
        # dG[p, q, m, l, i] = d_m G_li ; (grad (G e_i))_{jl} = d_j G_li
        vw = c[k + n] * w[:, None]
        t1 = np.einsum("qj,pqjli,ql->pqi", vw, dG, nrm)
        t2 = np.einsum("qj,pqlji,ql->pqi", vw, dG, nrm)
        return nu * (t1 + t2)

    return FourierSeries(_apply_modes(x, mesh.nodes, params, n, ks, True, contract), v_b.period)


def pressure_monopole_layer(mesh: SurfaceMesh, density: FourierSeries, x, kernel="P"):
    """Same-time layer of a pressure-type kernel.

    kernel ``"P"``: ``int P(x-y) g(y) dS`` for scalar ``g`` (vector result);
    ``"E"``: ``int E(x-y) g(y) dS`` (scalar result);
    ``"gradP"``: ``int g(y) . gradP(x-y) n(y) dS`` for vector ``g`` (scalar).
    """
    x = _check_targets(mesh, x)
    y, w = mesh.nodes, mesh.weights
    c = density.coeffs
    outs = []
    for sl in _chunks(len(x), len(y)):
        d = x[sl, None, :] - y[None]
        if kernel == "P":
            kern = pressure_P(d) * w[:, None]
            vals = np.einsum("qz,pqi->zpqi", c.reshape(c.shape[0], -1).T.reshape(len(y), -1), kern)
        elif kernel == "E":
            kern = laplace_E(d) * w
            vals = np.einsum("qz,pq->zpq", c.T.reshape(len(y), -1), kern)
        elif kernel == "gradP":
            kern = np.einsum("pqij,qj->pqi", grad_P(d), mesh.fluid_normals) * w[:, None]
            vals = np.einsum("zqi,pqi->zpq", c, kern)
        else:
            raise ValueError(f"unknown kernel {kernel!r}")
        outs.append(compensated_sum(vals, axis=2))
    return FourierSeries(np.concatenate(outs, axis=1), density.period)


def volume_potential(forcing: VolumeForcing, x, params: KernelParams):
    """``int G(., x-y) * f(., y) dy`` over the forcing quadrature."""
    x = np.atleast_2d(np.asarray(x, float))
    if np.any(np.linalg.norm(x, axis=1) <= forcing.support_radius):
        raise ProximityError("evaluation point inside the forcing support ball")
    return _volume_apply(forcing.nodes, forcing.weights, forcing.f, x, params)


def _volume_apply(nodes, weights, f: FourierSeries, x, params):
    n = f.n_modes
    ks = _modes_needed(f)
    if not ks:
        return FourierSeries.zeros(n, (len(x), 3), f.period)
    c = f.coeffs

    def contract(k, G, dG):
        return np.einsum("pqij,qj->pqi", G, c[k + n] * weights[:, None])

    return FourierSeries(_apply_modes(x, nodes, params, n, ks, False, contract), f.period)


# ---------------------------------------------------------------------------
# representation formulas
# ---------------------------------------------------------------------------

def _normal_flux(mesh, v_b):
    return v_b.map(lambda c: np.einsum("zqi,qi->zq", c, mesh.fluid_normals))


def represent_velocity_linear(mesh: SurfaceMesh, bdata: BoundaryData, forcing: VolumeForcing | None,
                              x, params: KernelParams, return_terms=False):
    """Velocity of a linear time-periodic Oseen flow from its boundary data.

    ``v = G*f + int G*[T n + (zeta.n) v_b] + int v_b . [2 nu D(G e_i) n]
    - int (v_b.n) P``.
    """
    bdata.check(mesh)
    x = _check_targets(mesh, np.atleast_2d(x))
    v_b, tr = bdata.v_b, bdata.require_traction()
    nrm = mesh.fluid_normals
    zn = nrm @ params.zeta_vec
    dens = tr + v_b.map(lambda c: c * zn[None, :, None])
    terms = {
        "single_layer": single_layer_velocity(mesh, dens, x, params),
        "stress_couple": stress_couple_layer(mesh, v_b, x, params),
        "flux": -pressure_monopole_layer(mesh, _normal_flux(mesh, v_b), x, "P"),
    }
    if forcing is not None:
        terms["volume"] = volume_potential(forcing, x, params)
    total = sum(terms.values(), FourierSeries.zeros(v_b.n_modes, (len(x), 3), v_b.period))
    return (total, terms) if return_terms else total


def represent_pressure_linear(mesh: SurfaceMesh, bdata: BoundaryData, forcing: VolumeForcing | None,
                              x, params: KernelParams, signs="derived", return_terms=False):
    """Pressure of a linear time-periodic Oseen flow (``p_inf = 0``).

    ``signs="derived"``: the drift-flux and time-derivative flux terms enter
    as ``-int (zeta.P)(v_b.n)`` and ``-int E d_t(v_b.n)``, as obtained from the
    divergence of the extended velocity.  ``signs="printed"`` flips both
    terms; it is kept for comparison and does not reproduce exact solutions.
    """
    if signs not in ("derived", "printed"):
        raise ValueError("signs must be 'derived' or 'printed'")
    bdata.check(mesh)
    x = _check_targets(mesh, np.atleast_2d(x))
    v_b, tr = bdata.v_b, bdata.require_traction()
    nrm = mesh.fluid_normals
    zeta = params.zeta_vec
    zn = nrm @ zeta
    flux = _normal_flux(mesh, v_b)
    s = 1.0 if signs == "printed" else -1.0
    # P . [T n + (zeta.n) v_b]
    dens = tr + v_b.map(lambda c: c * zn[None, :, None])
    terms = {
        "traction": _dot_layer(mesh, dens, x),
        "drift_flux": pressure_monopole_layer(mesh, flux, x, "P").map(lambda c: s * (c @ zeta)),
        "stress_couple": pressure_monopole_layer(mesh, v_b, x, "gradP").scaled(2.0 * params.nu),
        "flux_rate": pressure_monopole_layer(mesh, fourier_time_derivative(flux), x, "E").scaled(s),
    }
    if forcing is not None:
        if np.any(np.linalg.norm(x, axis=1) <= forcing.support_radius):
            raise ProximityError("evaluation point inside the forcing support ball")
        d = x[:, None, :] - forcing.nodes[None]
        kern = pressure_P(d) * forcing.weights[:, None]
        terms["volume"] = FourierSeries(np.einsum("pqi,zqi->zp", kern, forcing.f.coeffs), v_b.period)
    total = sum(terms.values(), FourierSeries.zeros(v_b.n_modes, (len(x),), v_b.period))
    return (total, terms) if return_terms else total


def _dot_layer(mesh, dens, x):
    """``int P(x-y) . g(y) dS`` for a vector density ``g``."""
    y, w = mesh.nodes, mesh.weights
    outs = []
    for sl in _chunks(len(x), len(y)):
        kern = pressure_P(x[sl, None, :] - y[None]) * w[:, None]
        outs.append(compensated_sum(np.einsum("pqi,zqi->zpq", kern, dens.coeffs), axis=2))
    return FourierSeries(np.concatenate(outs, axis=1), dens.period)


@dataclass(frozen=True)
class NonlinearRepresentation:
    convective: FourierSeries     # volume term G * (f - v.grad v)
    divergence: FourierSeries     # volume terms G * f - grad G : v (x) v, plus the extra boundary term
    tail_estimate: float


def represent_velocity_nonlinear(mesh: SurfaceMesh, bdata: BoundaryData, forcing: VolumeForcing | None,
                                 vfield, x, params: KernelParams, r_inner=None, r_trunc=None,
                                 forcing_field=None, rule=None):
    """Both nonlinear representation variants for a user-supplied field.

    ``vfield(points)`` must return ``(v, grad_v)`` as ``FourierSeries`` with
    shapes ``(2N+1, n, 3)`` and ``(2N+1, n, 3, 3)``, ``grad_v[..., i, j] =
    d_i v_j``.  ``forcing_field(points)``, if given, returns ``f`` sampled on
    the same volume nodes (used in place of ``forcing``).

    The volume integrals run over ``r_inner < |y| < r_trunc`` with a
    two-centre cubature per target.  Variant ``convective`` uses
    ``G * (f - v.grad v)``; variant ``divergence`` uses
    ``G * f - grad G : (v (x) v) - int_S G (v_b.n) v_b``.
    """
    x = _check_targets(mesh, np.atleast_2d(x))
    n = params.n_modes
    period = params.period
    r_inner = mesh.circumradius if r_inner is None else r_inner
    r_trunc = 32.0 * r_inner if r_trunc is None else r_trunc
    rule = rule or {}
    lin = represent_velocity_linear(mesh, bdata, None, x, params)
    conv = np.zeros((2 * n + 1, len(x), 3), complex)
    div = np.zeros_like(conv)
    tail = 0.0
    for p, xp in enumerate(x):
        nodes, w = _cubature.two_center_rule(xp, r_inner, r_trunc, axis=params.zeta_vec, **rule)
        v, gv = vfield(nodes)
        adv = fourier_product(v, gv, "qi,qij->qj")
        vv = fourier_product(v, v, "qi,qj->qij")
        f = forcing_field(nodes) if forcing_field is not None else None
        g_conv = -adv if f is None else f - adv
        ks = sorted(set(abs(k) for k in g_conv.active_modes()) | set(abs(k) for k in vv.active_modes()))
        d = xp[None, :] - nodes
        for k in ks:
            G, dG = mode_kernel(d, params, k, True)
            for kk in ((k, -k) if k else (0,)):
                Gk, dGk = (np.conj(G), np.conj(dG)) if kk < 0 else (G, dG)
                c1 = np.einsum("qij,qj,q->i", Gk, g_conv.mode(kk), w)
                # grad_y G(x-y) = -dG ; integrate by parts: G*(v.grad v) = -int d_{y_j}G_il v_j v_l
                # = int dG[j, l, i] v_j v_l with the kernel argument x-y
                c2 = -np.einsum("qjli,qjl,q->i", dGk, vv.mode(kk), w)
                if f is not None:
                    c2 = c2 + np.einsum("qij,qj,q->i", Gk, f.mode(kk), w)
                conv[kk + n, p] = c1
                div[kk + n, p] = c2
        # tail proxy: size of the integrand on the outer sphere times its area
        outer = np.linalg.norm(nodes, axis=1) > 0.9 * r_trunc
        if np.any(outer):
            mag = np.abs(vv.coeffs[:, outer]).max() / r_trunc
            tail = max(tail, float(mag * 4.0 * np.pi * r_trunc ** 2 / r_trunc))
    # extra boundary term: - int_S G(., x-y) (v_b.n) v_b dS
    flux = _normal_flux(mesh, bdata.v_b)
    fv = fourier_product(flux, bdata.v_b, "q,qi->qi")
    extra = single_layer_velocity(mesh, fv, x, params)
    conv_total = lin + FourierSeries(conv, period)
    div_total = lin + FourierSeries(div, period) - extra
    if tail > 1e-6 * max(np.abs(conv_total.coeffs).max(), 1e-300):
        warnings.warn(f"volume truncation at R={r_trunc:g} may be too small (tail ~ {tail:.2e})")
    return NonlinearRepresentation(conv_total, div_total, tail)
