"""
Flux functionals, far-field expansion coefficients, leading terms,
remainders and decay-exponent fits.

Sign conventions for the leading terms (all functionals use the
fluid-domain normal ``n = -mesh.normals``):

``thm_lin``
    velocity ``G * F - Phi P + Psi . grad P``,
    pressure ``Phi' E + [F + zeta Phi - Psi'] . P``.
``thm_nonlin``
    velocity ``G * F + Phi P - Psi . grad P``,
    pressure ``Phi' E + [F + zeta Phi + Psi'] . P``.
``derived``
    velocity as ``thm_lin``; pressure ``-Phi' E + [F - zeta Phi - Psi'] . P``,
    the expansion of the linear pressure representation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (FourierSeries, KernelParams, Ray, SurfaceMesh, fourier_product,
                   fourier_time_derivative, log_plus, wake_weight)
from .fundsol import (grad_P, laplace_E, mode_kernel, oseen_steady, oseen_steady_grad,
                      periodic_velocity_modes, pressure_P)
from .potentials import BoundaryData, VolumeForcing
from . import _cubature

CONVENTIONS = ("thm_lin", "thm_nonlin", "derived")


class FitError(ValueError):
    pass


# ---------------------------------------------------------------------------
# flux functionals and expansion coefficients
# ---------------------------------------------------------------------------

def _fluxdens(mesh, v_b):
    return np.einsum("zqi,qi->zq", v_b.coeffs, mesh.fluid_normals)


def flux_Phi(mesh: SurfaceMesh, v_b: FourierSeries) -> FourierSeries:
    """Total flux ``int_S v_b . n dS``."""
    return FourierSeries(mesh.integrate(_fluxdens(mesh, v_b), axis=1), v_b.period)


def moment_Psi(mesh: SurfaceMesh, v_b: FourierSeries) -> FourierSeries:
    """First flux moment ``int_S (v_b . n) y dS``."""
    dens = _fluxdens(mesh, v_b)[..., None] * mesh.nodes[None]
    return FourierSeries(mesh.integrate(dens, axis=1), v_b.period)


def coeff_F(mesh: SurfaceMesh, bdata: BoundaryData, forcing: VolumeForcing | None, params: KernelParams,
            variant="lin") -> FourierSeries:
    """Force moment ``int f + int_S [T n + (zeta.n) v_b]`` (``lin``), minus
    ``int_S (v_b.n) v_b`` for ``full``."""
    if variant not in ("lin", "full"):
        raise ValueError("variant must be 'lin' or 'full'")
    tr = bdata.require_traction()
    zn = mesh.fluid_normals @ params.zeta_vec
    dens = tr.coeffs + bdata.v_b.coeffs * zn[None, :, None]
    F = mesh.integrate(dens, axis=1)
    if forcing is not None:
        F = F + np.einsum("zqi,q->zi", forcing.f.coeffs, forcing.weights)
    F = FourierSeries(F, tr.period)
    if variant == "full":
        flux = FourierSeries(_fluxdens(mesh, bdata.v_b), tr.period)
        fv = fourier_product(flux, bdata.v_b, "q,qi->qi")
        F = F - FourierSeries(mesh.integrate(fv.coeffs, axis=1), tr.period)
    return F


@dataclass(frozen=True)
class ExpansionCoefficients:
    Phi: FourierSeries
    Psi: FourierSeries
    F_lin: FourierSeries
    F_full: FourierSeries

    @property
    def n_modes(self):
        return self.Phi.n_modes

    @classmethod
    def zeros(cls, n_modes, period=1.0):
        z = FourierSeries.zeros(n_modes, (), period)
        v = FourierSeries.zeros(n_modes, (3,), period)
        return cls(z, v, v, v)

    def without_psi(self):
        return ExpansionCoefficients(self.Phi, self.Psi.scaled(0.0), self.F_lin, self.F_full)


def expansion_coefficients(mesh, bdata, forcing, params) -> ExpansionCoefficients:
    return ExpansionCoefficients(flux_Phi(mesh, bdata.v_b), moment_Psi(mesh, bdata.v_b),
                                 coeff_F(mesh, bdata, forcing, params, "lin"),
                                 coeff_F(mesh, bdata, forcing, params, "full"))


def generic_moments(values, weights, nodes, period=1.0):
    """Zeroth and first moments ``(Lambda, Xi)`` of a density sampled on a rule."""
    values = np.asarray(values)
    lam = np.einsum("zq...,q->z...", values, weights)
    xi = np.einsum("zq,q,qi->zi", values, weights, nodes) if values.ndim == 2 else \
        np.einsum("zq...,q,qi->z...i", values, weights, nodes)
    return FourierSeries(lam, period), FourierSeries(xi, period)


# ---------------------------------------------------------------------------
# leading terms
# ---------------------------------------------------------------------------

def _signs(convention):
    if convention not in CONVENTIONS:
        raise ValueError(f"sign convention must be one of {CONVENTIONS}")
    return (-1.0, 1.0) if convention in ("thm_lin", "derived") else (1.0, -1.0)


def _select_modes(coeffs, part):
    n = coeffs.shape[0] // 2
    if part == "full":
        return coeffs
    out = np.zeros_like(coeffs)
    if part == "steady":
        out[n] = coeffs[n]
    elif part == "periodic":
        out[:] = coeffs
        out[n] = 0
    else:
        raise ValueError("part must be 'full', 'steady' or 'periodic'")
    return out


def leading_velocity_modes(coeffs: ExpansionCoefficients, x, params: KernelParams, convention="thm_lin",
                           expansion="lin", part="full", include_psi=True, absorb_psi0=False):
    """Mode coefficients of the leading velocity term at points ``x``.

    ``expansion`` selects the force moment (``lin``: ``F_lin``; ``nonlin``:
    ``F_full``).  ``absorb_psi0`` drops the steady ``Psi_0 . grad P`` term,
    which is of remainder order for the steady part.
    """
    s_phi, s_psi = _signs(convention)
    x = np.atleast_2d(np.asarray(x, float))
    n = coeffs.n_modes
    F = (coeffs.F_lin if expansion == "lin" else coeffs.F_full).coeffs
    Phi, Psi = coeffs.Phi.coeffs, coeffs.Psi.coeffs.copy()
    if not include_psi:
        Psi[:] = 0
    if absorb_psi0:
        Psi[n] = 0
    P = pressure_P(x)
    gP = grad_P(x)
    out = np.zeros((2 * n + 1, len(x), 3), complex)
    for k in range(-n, n + 1):
        if part == "steady" and k != 0 or part == "periodic" and k == 0:
            continue
        idx = k + n
        if np.any(F[idx] != 0):
            G = mode_kernel(x, params, k)
            out[idx] += G @ F[idx]
        out[idx] += s_phi * Phi[idx] * P + s_psi * np.einsum("i,pij->pj", Psi[idx], gP)
    return FourierSeries(out, params.period)


def leading_velocity(coeffs, t, x, params, sign_convention="thm_lin", **kw):
    return leading_velocity_modes(coeffs, x, params, sign_convention, **kw).evaluate(t)


def leading_pressure_modes(coeffs: ExpansionCoefficients, x, params: KernelParams, convention="thm_lin",
                           expansion="lin", part="full"):
    x = np.atleast_2d(np.asarray(x, float))
    if convention not in CONVENTIONS:
        raise ValueError(f"sign convention must be one of {CONVENTIONS}")
    F = (coeffs.F_lin if expansion == "lin" else coeffs.F_full).coeffs
    dPhi = fourier_time_derivative(coeffs.Phi).coeffs
    dPsi = fourier_time_derivative(coeffs.Psi).coeffs
    Phi = coeffs.Phi.coeffs
    zeta = params.zeta_vec
    if convention == "thm_lin":
        s_e, s_z, s_psi = 1.0, 1.0, -1.0
    elif convention == "thm_nonlin":
        s_e, s_z, s_psi = 1.0, 1.0, 1.0
    else:
        s_e, s_z, s_psi = -1.0, -1.0, -1.0
    vec = F + s_z * Phi[:, None] * zeta + s_psi * dPsi
    out = s_e * dPhi[:, None] * laplace_E(x)[None] + np.einsum("zi,pi->zp", vec, pressure_P(x))
    return FourierSeries(_select_modes(out, part), params.period)


def leading_pressure(coeffs, t, x, params, sign_convention="thm_lin", **kw):
    return leading_pressure_modes(coeffs, x, params, sign_convention, **kw).evaluate(t)


# ---------------------------------------------------------------------------
# remainders and fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleTable:
    radii: np.ndarray
    points: np.ndarray
    steady: np.ndarray
    periodic: np.ndarray
    label: str = ""
    ray: str = ""


def time_sup(series: FourierSeries, n_samples=None):
    """Max over a uniform time grid of the Frobenius magnitude per point."""
    vals = series.evaluate(series.time_grid(n_samples))
    axes = tuple(range(2, vals.ndim))
    mag = np.sqrt((vals ** 2).sum(axis=axes)) if axes else np.abs(vals)
    return mag.max(axis=0)


def split_magnitudes(series: FourierSeries, norm="sup"):
    """``(|steady part|, ||purely periodic part||_time)`` per point."""
    n = series.n_modes
    c0 = series.coeffs[n]
    axes = tuple(range(1, c0.ndim))
    steady = np.sqrt((np.abs(c0) ** 2).sum(axis=axes)) if axes else np.abs(c0)
    per = series.purely_periodic()
    if norm == "sup":
        periodic = time_sup(per)
    elif norm == "l2":
        sq = (np.abs(per.coeffs) ** 2).sum(axis=0)
        periodic = np.sqrt(sq.sum(axis=tuple(range(1, sq.ndim)))) if sq.ndim > 1 else np.sqrt(sq)
    else:
        raise ValueError("norm must be 'sup' or 'l2'")
    return steady, periodic


def remainder_samples(field, leading, ray: Ray, norm="sup", label="") -> SampleTable:
    """Remainder ``field - leading`` along a ray, split into steady and
    purely periodic magnitudes.  ``field`` and ``leading`` map points to
    ``FourierSeries``; ``leading`` may be ``None``."""
    pts = ray.points
    diff = field(pts)
    if leading is not None:
        diff = diff - leading(pts)
    st, pe = split_magnitudes(diff, norm)
    return SampleTable(np.asarray(ray.radii), pts, st, pe, label, ray.label)


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    intercept: float
    residual: float
    n_samples: int
    stderr: float
    radii: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    label: str = ""
    ray: str = ""


def fit_decay(radii, values, drop=2, min_samples=5, label="", ray="") -> DecayFit:
    """Least-squares slope of ``log|R|`` against ``log r`` after dropping
    the ``drop`` smallest radii."""
    r = np.asarray(radii, float)
    v = np.abs(np.asarray(values, float))
    order = np.argsort(r)
    r, v = r[order][drop:], v[order][drop:]
    good = v > 0
    if not np.all(good):
        warnings.warn(f"dropping {np.count_nonzero(~good)} nonpositive samples")
        r, v = r[good], v[good]
    if len(r) < min_samples:
        raise FitError(f"need at least {min_samples} samples, have {len(r)}")
    A = np.stack([np.log(r), np.ones_like(r)], axis=1)
    y = np.log(v)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    rss = float(res @ res)
    dof = max(len(r) - 2, 1)
    cov = rss / dof * np.linalg.inv(A.T @ A)
    return DecayFit(float(coef[0]), float(coef[1]), math.sqrt(rss / len(r)), len(r),
                    float(math.sqrt(cov[0, 0])), r, v, label, ray)


def fit_table(table: SampleTable, part="periodic", drop=2, **kw) -> DecayFit:
    vals = table.periodic if part == "periodic" else table.steady
    return fit_decay(table.radii, vals, drop=drop, label=kw.pop("label", table.label + ":" + part),
                     ray=table.ray, **kw)


def fit_decay_anisotropic(points, values, zeta, min_samples=5):
    """Fit ``log|R| = c + p log|x| + q log(1 + s_zeta(x))``; returns ``(p, q, residual)``."""
    pts = np.asarray(points, float)
    v = np.abs(np.asarray(values, float))
    good = v > 0
    pts, v = pts[good], v[good]
    if len(v) < min_samples:
        raise FitError("not enough samples for the anisotropic fit")
    A = np.stack([np.log(np.linalg.norm(pts, axis=1)), np.log1p(wake_weight(zeta, pts)),
                  np.ones(len(v))], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(v), rcond=None)
    res = np.log(v) - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(res @ res / len(v)))


# ---------------------------------------------------------------------------
# convolution-bound verification
# ---------------------------------------------------------------------------

CONV_CASES = {
    # name: (kernel, A, B); the pressure case keeps the sign of grad P so that
    # its zero spherical mean cancels the near field
    "ste1": ("abs_G", 3.0, 1.0),
    "ste2": ("abs_dG", 3.0, 1.0),
    "ste3": ("abs_dG", 2.0, 1.5),
    "ste4": ("abs_dG", 2.0, 0.5),
    "pres": ("dP_signed", 2.0, 2.0),
    "per_grad": ("per_dG_L1", 4.0, 0.0),
}


def _check_hypotheses(case, A, B):
    m = A + min(1.0, B)
    if case == "ste1" and not (A >= 2 and m > 3):
        raise ValueError("case (1) needs A >= 2 and A + min(1,B) > 3")
    if case == "ste2" and not (A >= 2 and m > 3 and A + B >= 3.5):
        raise ValueError("case (2) needs A + min(1,B) > 3 and A + B >= 7/2")
    if case == "ste3" and not (A >= 2 and abs(m - 3) < 1e-12 and A + B >= 3.5):
        raise ValueError("case (3) needs A + min(1,B) = 3 and A + B >= 7/2")
    if case == "ste4" and not (A >= 2 and A + B < 3):
        raise ValueError("case (4) needs A + B < 3")
    if case == "pres" and not (A == 2 and B == 2):
        raise ValueError("pressure case is stated for A = B = 2")
    if case == "per_grad" and not A > 0:
        raise ValueError("periodic case needs A > 0")


def conv_bound(case, x, zeta, A, B, with_log=True):
    """Asserted bound (up to a constant) at points ``x``."""
    r = np.linalg.norm(x, axis=-1)
    s = wake_weight(zeta, x)
    ws = (1 + r) * (1 + s)
    lg = log_plus(r) if with_log else 1.0
    if case == "ste1":
        return 1.0 / ws
    if case == "ste2":
        return ws ** -1.5
    if case == "ste3":
        return ws ** -1.5 * lg
    if case == "ste4":
        return (1 + r) ** (-(A + B) / 2) * (1 + s) ** (-(A + B - 1) / 2)
    if case == "pres":
        return r ** -2 * np.minimum(1.0, (1 + s) ** -2 * lg + lg / r + 1.0 / (1 + s))
    if case == "per_grad":
        return (1 + r) ** -min(A, 4.0)
    raise ValueError(case)


class _PeriodicGradNormTable:
    """``||grad G_per(., z)||_{L1(T)}`` tabulated on ``(log|z|, cos angle to zeta)``.

    The Frobenius norm is invariant under rotations about ``zeta``.
    """

    def __init__(self, params, r_min=0.05, r_max=400.0, n_r=48, n_c=33):
        self.params = params
        zh = params.zeta_vec / params.zeta_norm
        e1 = np.cross(zh, [0.0, 0.0, 1.0])
        if np.linalg.norm(e1) < 1e-8:
            e1 = np.cross(zh, [0.0, 1.0, 0.0])
        e1 /= np.linalg.norm(e1)
        self.zh = zh
        self.lr = np.linspace(math.log(r_min), math.log(r_max), n_r)
        self.c = np.linspace(-1.0, 1.0, n_c)
        R, C = np.meshgrid(np.exp(self.lr), self.c, indexing="ij")
        S = np.sqrt(np.maximum(1 - C ** 2, 0))
        pts = R[..., None] * (C[..., None] * zh + S[..., None] * e1)
        _, dG = periodic_velocity_modes(pts.reshape(-1, 3), params, grad=True)
        vals = dG.evaluate(dG.time_grid())
        mag = np.sqrt((vals ** 2).sum(axis=(2, 3, 4)))
        self.table = np.log(mag.mean(axis=0).reshape(n_r, n_c))

    def __call__(self, z):
        r = np.linalg.norm(z, axis=-1)
        c = np.clip((z @ self.zh) / r, -1, 1)
        lr = np.log(r)
        from scipy.interpolate import RegularGridInterpolator
        f = RegularGridInterpolator((self.lr, self.c), self.table, bounds_error=False, fill_value=None)
        return np.exp(f(np.stack([np.clip(lr, self.lr[0], self.lr[-1]), c], axis=-1)))


@dataclass(frozen=True)
class ConvBoundReport:
    case: str
    A: float
    B: float
    domain_radii: tuple
    sup_ratios: tuple
    variation: float
    points: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    ratios_nolog: np.ndarray | None = field(default=None, repr=False)


def _conv_kernel(kind, params, table=None):
    if kind == "abs_G":
        return lambda z: np.sqrt((oseen_steady(z, params) ** 2).sum(axis=(-1, -2)))
    if kind == "abs_dG":
        return lambda z: np.sqrt((oseen_steady_grad(z, params) ** 2).sum(axis=(-1, -2, -3)))
    if kind == "abs_dP":
        return lambda z: np.sqrt((grad_P(z) ** 2).sum(axis=(-1, -2)))
    if kind == "dP_signed":
        return grad_P
    if kind == "per_dG_L1":
        return table
    raise ValueError(kind)


def conv_value(case, x, params, R, A=None, B=None, rule=None, table=None):
    """Brute-force ``(|kernel| * g)(x)`` over ``|y| < R`` for one target."""
    kind, A0, B0 = CONV_CASES[case]
    A = A0 if A is None else A
    B = B0 if B is None else B
    kern = _conv_kernel(kind, params, table)
    excl = 1.0 if case == "pres" else 0.0
    nodes, w = _cubature.two_center_rule(x, 0.0, R, axis=params.zeta_vec, r_excl=excl, **(rule or {}))
    g = (1 + np.linalg.norm(nodes, axis=1)) ** -A * (1 + wake_weight(params.zeta_vec, nodes)) ** -B
    vals = kern(np.asarray(x) - nodes)
    if vals.ndim > 1:
        # signed tensor kernel: integrate first, then take the Frobenius norm
        return float(np.linalg.norm(np.einsum("q,q...->...", w * g, vals)))
    return float(np.sum(w * g * vals))


def verify_conv_bounds(case, params: KernelParams, A=None, B=None, radii=(2.0, 4.0, 8.0, 16.0, 32.0),
                       directions=None, domains=(64.0, 128.0), rule=None) -> ConvBoundReport:
    """Sup over sample points of ``(|kernel| * g) / bound`` for each domain radius.

    ``variation`` is the ratio of the largest to the smallest sup across
    domains (stability under domain enlargement).
    """
    if case not in CONV_CASES:
        raise ValueError(f"unknown case {case!r}; choose from {sorted(CONV_CASES)}")
    params.require_oseen()
    kind, A0, B0 = CONV_CASES[case]
    A = A0 if A is None else A
    B = B0 if B is None else B
    _check_hypotheses(case, A, B)
    zh = params.zeta_vec / params.zeta_norm
    if directions is None:
        t = np.cross(zh, [0.0, 0.0, 1.0])
        if np.linalg.norm(t) < 1e-8:
            t = np.cross(zh, [0.0, 1.0, 0.0])
        t /= np.linalg.norm(t)
        directions = [zh, -zh, t, (zh + t) / math.sqrt(2), (-zh + t) / math.sqrt(2), (-3 * zh + t) / math.sqrt(10)]
    pts = np.array([r * np.asarray(d) for d in directions for r in radii])
    table = _PeriodicGradNormTable(params) if kind == "per_dG_L1" else None
    ratios = np.zeros((len(domains), len(pts)))
    nolog = np.zeros_like(ratios) if case == "ste3" else None
    for i, R in enumerate(domains):
        for j, x in enumerate(pts):
            val = conv_value(case, x, params, R, A, B, rule, table)
            ratios[i, j] = val / conv_bound(case, x, params.zeta_vec, A, B)
            if nolog is not None:
                nolog[i, j] = val / conv_bound(case, x, params.zeta_vec, A, B, with_log=False)
    sups = ratios.max(axis=1)
    return ConvBoundReport(case, A, B, tuple(domains), tuple(float(s) for s in sups),
                           float(sups.max() / sups.min()), pts, ratios, nolog)
