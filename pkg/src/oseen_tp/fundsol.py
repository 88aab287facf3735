"""
Fundamental-solution kernels of the steady and time-periodic Oseen system.

Conventions: tensor kernels are returned with shape ``(..., 3, 3)``; gradients
of a tensor kernel have shape ``(..., 3, 3, 3)`` with ``grad[..., m, i, j] =
d_m G_ij``; gradients of vector kernels use ``grad[..., i, j] = d_i P_j``.

Mode kernels.  For ``k != 0`` the velocity mode is
``G_k = K I + hess(Phi)``, where ``K`` solves the scalar drift-Helmholtz
equation and ``Phi = (i lam - zeta.grad)^{-1} (E - nu K)``.  The inverse of
the first-order operator is a line integral along ``zeta``; its integrand
extends analytically off the real axis, so the integration contour is rotated
into the half plane where the oscillatory factor decays and evaluated with
composite Gauss-Legendre panels.  With ``zeta = 0`` the inverse is a plain
division by ``i lam``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import KernelParams, FourierSeries

FOUR_PI = 4.0 * math.pi
_EYE = np.eye(3)


class SingularityError(ValueError):
    """Kernel evaluated at its singular point x = 0."""


class ExcludedModeError(ValueError):
    """Mode k = 0 requested from a purely periodic kernel."""


def _as_points(x):
    x = np.asarray(x)
    if x.shape[-1] != 3:
        raise ValueError("points must have a trailing axis of length 3")
    r = np.sqrt(np.einsum("...i,...i->...", x, x).real) if np.iscomplexobj(x) else np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise SingularityError("kernel evaluated at x = 0")
    return x, r


def _params(params):
    if isinstance(params, KernelParams):
        return params
    if isinstance(params, dict):
        return KernelParams.from_dict(params)
    raise TypeError("params must be KernelParams")


# ---------------------------------------------------------------------------
# radial derivative tensors (valid for real or complex arguments)
# ---------------------------------------------------------------------------

def _radial_grad(xh, f1):
    return f1[..., None] * xh


def _radial_hess(xh, r, f1, f2):
    b = f1 / r
    amb = f2 - b
    return amb[..., None, None] * xh[..., :, None] * xh[..., None, :] + b[..., None, None] * _EYE


def _radial_third(xh, r, f1, f2, f3):
    amb = (f2 - f1 / r) / r
    c = f3 - 3.0 * (f2 - f1 / r) / r
    xxx = xh[..., :, None, None] * xh[..., None, :, None] * xh[..., None, None, :]
    sym = (_EYE[:, :, None] * xh[..., None, None, :] + _EYE[:, None, :] * xh[..., None, :, None]
           + _EYE[None, :, :] * xh[..., :, None, None])
    return c[..., None, None, None] * xxx + amb[..., None, None, None] * sym


def _radius(x):
    """|x| for real points, principal sqrt(x.x) for complex points."""
    if np.iscomplexobj(x):
        return np.sqrt(np.einsum("...i,...i->...", x, x))
    return np.linalg.norm(x, axis=-1)


def laplace_E_derivs(x, order=2):
    """Derivatives of E up to ``order`` (0..3) as a list ``[E, dE, d2E, d3E]``."""
    r = _radius(x)
    xh = x / r[..., None]
    f0 = 1.0 / (FOUR_PI * r)
    f1 = -f0 / r
    f2 = 2.0 * f0 / r ** 2
    f3 = -6.0 * f0 / r ** 3
    out = [f0]
    if order >= 1:
        out.append(_radial_grad(xh, f1))
    if order >= 2:
        out.append(_radial_hess(xh, r, f1, f2))
    if order >= 3:
        out.append(_radial_third(xh, r, f1, f2, f3))
    return out


def _mu(params: KernelParams, lam):
    z = params.zeta_norm
    mu = np.sqrt(complex(z * z / (4.0 * params.nu ** 2), lam / params.nu))
    if mu.real < 0:
        mu = -mu
    return mu


def drift_helmholtz_K_derivs(x, params, lam, order=2):
    """``[K, dK, d2K, d3K]`` of the drift-Helmholtz kernel up to ``order``.

    ``x`` may be complex (analytic continuation with the principal branch
    of ``sqrt(x.x)``).
    """
    params = _params(params)
    nu = params.nu
    c = -params.zeta_vec / (2.0 * nu)
    mu = _mu(params, lam)
    r = _radius(x)
    xh = x / r[..., None]
    g = np.exp(x @ c - mu * r) / (FOUR_PI * nu * r)
    u = mu + 1.0 / r
    out = [g]
    if order == 0:
        return out
    # relative radial derivatives g^(n)/g
    d1 = -u
    gi = xh * d1[..., None]
    out.append(g[..., None] * (c + gi))
    if order == 1:
        return out
    d2 = u * u + 1.0 / r ** 2
    gij = _radial_hess(xh, r, d1, d2)
    cc = c[:, None] * c[None, :]
    hess = cc + c[:, None] * gi[..., None, :] + gi[..., :, None] * c[None, :] + gij
    out.append(g[..., None, None] * hess)
    if order == 2:
        return out
    d3 = -(u ** 3 + 3.0 * u / r ** 2 + 2.0 / r ** 3)
    gijk = _radial_third(xh, r, d1, d2, d3)
    ccc = c[:, None, None] * c[None, :, None] * c[None, None, :]
    t = (ccc
         + cc[:, :, None] * gi[..., None, None, :]
         + cc[:, None, :] * gi[..., None, :, None]
         + cc[None, :, :] * gi[..., :, None, None]
         + c[:, None, None] * gij[..., None, :, :]
         + c[None, :, None] * gij[..., :, None, :]
         + c[None, None, :] * gij[..., :, :, None]
         + gijk)
    out.append(g[..., None, None, None] * t)
    return out


# ---------------------------------------------------------------------------
# Laplace / Stokes kernels
# ---------------------------------------------------------------------------

def laplace_E(x):
    """``1 / (4 pi |x|)``."""
    x, r = _as_points(x)
    return 1.0 / (FOUR_PI * r)


def pressure_P(x):
    """Pressure kernel ``P = -grad E = x / (4 pi |x|^3)``."""
    x, r = _as_points(x)
    return x / (FOUR_PI * r[..., None] ** 3)


def grad_P(x):
    """``grad_P[..., i, j] = d_i P_j``."""
    x, r = _as_points(x)
    return -laplace_E_derivs(x, 2)[2]


def hess_P(x):
    """``hess_P[..., i, j, l] = d_i d_j P_l``."""
    x, r = _as_points(x)
    return -laplace_E_derivs(x, 3)[3]


def stokeslet(x, nu=1.0):
    """Steady Stokes velocity kernel ``(I + xh xh) / (8 pi nu |x|)``."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    x, r = _as_points(x)
    xh = x / r[..., None]
    return (_EYE + xh[..., :, None] * xh[..., None, :]) / (8.0 * math.pi * nu * r[..., None, None])


# ---------------------------------------------------------------------------
# steady Oseen kernel
# ---------------------------------------------------------------------------

_SERIES_CUT = 0.5
_N_SERIES = 24
_FACT = np.array([math.factorial(n) for n in range(_N_SERIES + 4)], dtype=float)


def _phi_funcs(sig):
    """phi1 = (1-e^-s)/s, phi2 = (1-e^-s-s e^-s)/s^2 and phi2' (cancellation safe)."""
    sig = np.asarray(sig, dtype=float)
    small = sig < _SERIES_CUT
    s_big = np.where(small, 1.0, sig)
    em = np.exp(-s_big)
    om = -np.expm1(-s_big)
    p1 = om / s_big
    p2 = (om - s_big * em) / s_big ** 2
    dp2 = em / s_big - 2.0 * p2 / s_big
    if np.any(small):
        s = np.where(small, sig, 0.0)
        n = np.arange(_N_SERIES)
        sign = (-1.0) ** n
        pw = s[..., None] ** n
        p1s = (sign / _FACT[n + 1] * pw).sum(-1)
        p2s = (sign * (n + 1) / _FACT[n + 2] * pw).sum(-1)
        m = n[1:]
        dp2s = ((-1.0) ** m * m * (m + 1) / _FACT[m + 2] * s[..., None] ** (m - 1)).sum(-1)
        p1 = np.where(small, p1s, p1)
        p2 = np.where(small, p2s, p2)
        dp2 = np.where(small, dp2s, dp2)
    return p1, p2, dp2


def _oseen_parts(x, params):
    params = _params(params)
    params.require_oseen()
    x, r = _as_points(np.asarray(x, dtype=float))
    nu = params.nu
    zn = params.zeta_norm
    zh = params.zeta_vec / zn
    xh = x / r[..., None]
    w = xh + zh
    s = np.maximum(0.5 * (zn * r + x @ params.zeta_vec), 0.0)
    sig = s / nu
    p1, p2, dp2 = _phi_funcs(sig)
    a = np.exp(-sig) / (FOUR_PI * nu * r)
    b = -p1 / (8.0 * math.pi * nu * r)
    c = zn * p2 / (16.0 * math.pi * nu ** 2)
    return dict(r=r, xh=xh, w=w, a=a, b=b, c=c, p2=p2, dp2=dp2, nu=nu, zn=zn)


def oseen_steady(x, params):
    """Steady Oseen velocity kernel for translation velocity ``zeta``."""
    d = _oseen_parts(x, params)
    xh, w = d["xh"], d["w"]
    xx = xh[..., :, None] * xh[..., None, :]
    ww = w[..., :, None] * w[..., None, :]
    return ((d["a"] + d["b"])[..., None, None] * _EYE - d["b"][..., None, None] * xx
            + d["c"][..., None, None] * ww)


def oseen_steady_grad(x, params):
    """Analytic gradient, ``[..., m, i, j] = d_m G_ij``."""
    d = _oseen_parts(x, params)
    r, xh, w, a, b, c, nu, zn = (d[k] for k in ("r", "xh", "w", "a", "b", "c", "nu", "zn"))
    dsig = (zn / (2.0 * nu)) * w                      # d_m sigma
    a_m = (-a / r)[..., None] * xh - a[..., None] * dsig
    b_m = (-b / r)[..., None] * xh + (d["p2"] / (8.0 * math.pi * nu * r))[..., None] * dsig
    c_m = (zn * d["dp2"] / (16.0 * math.pi * nu ** 2))[..., None] * dsig
    dxh = (_EYE - xh[..., :, None] * xh[..., None, :]) / r[..., None, None]   # [m, i] = d_m xh_i
    xx = xh[..., :, None] * xh[..., None, :]
    ww = w[..., :, None] * w[..., None, :]
    g = (a_m + b_m)[..., :, None, None] * _EYE - b_m[..., :, None, None] * xx[..., None, :, :]
    g = g - b[..., None, None, None] * (dxh[..., :, :, None] * xh[..., None, None, :]
                                        + xh[..., None, :, None] * dxh[..., :, None, :])
    g = g + c_m[..., :, None, None] * ww[..., None, :, :]
    g = g + c[..., None, None, None] * (dxh[..., :, :, None] * w[..., None, None, :]
                                        + w[..., None, :, None] * dxh[..., :, None, :])
    return g


# ---------------------------------------------------------------------------
# drift-Helmholtz kernel and mode kernels
# ---------------------------------------------------------------------------

def drift_helmholtz_K(x, params, lam):
    """Fundamental solution of ``i lam - nu Lap - zeta.grad``."""
    x, _ = _as_points(np.asarray(x, dtype=float))
    return drift_helmholtz_K_derivs(x, params, lam, 0)[0]


_GL_N = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_N)
_THETA = math.pi / 4
_DECAY = 38.0
_CHUNK = 256


def _panel_nodes(x_norm, sgn, zn, lam, mu, nu):
    """Per-point composite Gauss-Legendre nodes ``s`` and weights on the contour.

    Panels start at half the shortest local length scale and double up to
    the oscillation cap.  They stay at the cap until the oscillatory factor
    has decayed by ``exp(-_DECAY)``, then double again until the slower
    drift-Helmholtz part (relevant in the wake) has decayed as well.
    """
    la = abs(lam)
    alpha = zn / (2.0 * nu)
    kappa = zn * abs(mu) + zn * alpha
    ell = np.minimum(x_norm / zn, 1.0 / la)
    if kappa > 0:
        ell = np.minimum(ell, 1.0 / kappa)
    rot = np.exp(-1j * _THETA * np.sign(sgn * lam))
    rho_k = np.where(sgn > 0, 1j * lam + (alpha + mu) * zn, -1j * lam + (mu - alpha) * zn)
    rate_k = np.maximum((rho_k * rot).real, 1e-300)
    s_osc = _DECAY / (la * math.sin(_THETA))
    s_max = np.maximum(s_osc, _DECAY / rate_k)
    cap = 8.0 / la
    h = 0.5 * ell
    lo = np.zeros_like(x_norm)
    edges = [lo]
    while np.any(lo < s_max):
        lo = np.minimum(lo + h, s_max)
        edges.append(lo)
        h = np.where(lo < s_osc, np.minimum(2.0 * h, cap), 2.0 * h)
    edges = np.stack(edges, axis=1)
    lo, hi = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (hi - lo)
    s = (lo + half)[..., None] + half[..., None] * _GL_X
    wt = half[..., None] * _GL_W
    return s.reshape(len(x_norm), -1), wt.reshape(len(x_norm), -1)


def _sym3(v):
    """``d_ij v_k + d_ik v_j + d_jk v_i`` for vectors ``v[..., i]``."""
    return (_EYE[:, :, None] * v[..., None, None, :] + _EYE[:, None, :] * v[..., None, :, None]
            + _EYE[None, :, :] * v[..., :, None, None])


def _phi_hessian_line(x, params, lam, want_third):
    """``hess(Phi)`` (and optionally third derivatives) by the rotated line integral.

    The integrand is a combination of a few tensor shapes built from ``xh``,
    the drift vector ``c`` and the identity, so the radial scalar weights are
    integrated first and the tensors are assembled once per point.
    """
    nu = params.nu
    zeta = params.zeta_vec
    zn = params.zeta_norm
    c = -zeta / (2.0 * nu)
    mu = _mu(params, lam)
    n = len(x)
    H = np.zeros((n, 3, 3), complex)
    T = np.zeros((n, 3, 3, 3), complex) if want_third else None
    for s0 in range(0, n, _CHUNK):
        xc = x[s0:s0 + _CHUNK]
        sgn = np.where(xc @ zeta >= 0, 1.0, -1.0)
        lam_eff = sgn * lam
        rot = np.exp(-1j * _THETA * np.sign(lam_eff))            # d tau / d s
        s, w = _panel_nodes(np.linalg.norm(xc, axis=1), sgn, zn, lam, mu, nu)
        tau = rot[:, None] * s
        X = xc[:, None, :] + (sgn[:, None] * tau)[..., None] * zeta
        osc = -1j * lam_eff[:, None] * tau
        fac = sgn[:, None] * w * rot[:, None]
        r = _radius(X)
        xh = X / r[..., None]
        ir = 1.0 / r
        # -nu K times weights; exponents combined so neither factor overflows
        g = -fac * np.exp(X @ c - mu * r + osc) * ir / FOUR_PI
        fe = fac * np.exp(osc) * ir / FOUR_PI
        u = mu + ir
        d1 = -u
        d2 = u * u + ir * ir
        # hessian: xx, I, (c xh + xh c), cc
        a_xx = fe * 3.0 * ir * ir + g * (d2 - d1 * ir)
        a_id = -fe * ir * ir + g * d1 * ir
        a_cx = g * d1
        a_cc = g.sum(axis=1)
        m_xx = np.einsum("pq,pqi,pqj->pij", a_xx, xh, xh)
        v_cx = np.einsum("pq,pqi->pi", a_cx, xh)
        sl = slice(s0, s0 + _CHUNK)
        H[sl] = (m_xx + a_id.sum(axis=1)[:, None, None] * _EYE
                 + c[:, None] * v_cx[:, None, :] + v_cx[:, :, None] * c[None, :]
                 + a_cc[:, None, None] * (c[:, None] * c[None, :]))
        if want_third:
            d3 = -(u ** 3 + 3.0 * u * ir * ir + 2.0 * ir ** 3)
            # E: f1=-e0/r, f2=2e0/r^2, f3=-6e0/r^3 -> xxx coef -15 e0/r^3, sym coef 3 e0/r^3
            b_xxx = fe * (-15.0) * ir ** 3 + g * (d3 - 3.0 * (d2 - d1 * ir) * ir)
            b_sym = fe * 3.0 * ir ** 3 + g * (d2 - d1 * ir) * ir
            t = np.einsum("pqi,pqj,pqk->pijk", b_xxx[..., None] * xh, xh, xh)
            t += _sym3(np.einsum("pq,pqi->pi", b_sym, xh))
            # c_i (A xh_j xh_k + B d_jk) and permutations, cc xh and ccc terms
            m2 = np.einsum("pq,pqi,pqj->pij", g * (d2 - d1 * ir), xh, xh)
            t += (c[:, None, None] * m2[:, None, :, :] + c[None, :, None] * m2[:, :, None, :]
                  + c[None, None, :] * m2[:, :, :, None])
            t += (g * d1 * ir).sum(axis=1)[:, None, None, None] * _sym3(c)
            u1 = np.einsum("pq,pqi->pi", g * d1, xh)
            cc = c[:, None] * c[None, :]
            t += (cc[:, :, None] * u1[:, None, None, :] + cc[:, None, :] * u1[:, None, :, None]
                  + cc[None, :, :] * u1[:, :, None, None])
            t += a_cc[:, None, None, None] * (cc[:, :, None] * c[None, None, :])
            T[sl] = t
    return H, T


def _mode_parts(x, params, k, want_grad):
    params = _params(params)
    if k == 0:
        raise ExcludedModeError("mode k = 0 is the steady part; use oseen_steady")
    x, _ = _as_points(np.asarray(x, dtype=float))
    shape = x.shape[:-1]
    xf = x.reshape(-1, 3)
    lam = params.frequency(k)
    order = 3 if want_grad else 2
    kd = drift_helmholtz_K_derivs(xf, params, lam, order)
    if params.zeta_norm == 0.0:
        ed = laplace_E_derivs(xf, order)
        H = (ed[2] - params.nu * kd[2]) / (1j * lam)
        T = (ed[3] - params.nu * kd[3]) / (1j * lam) if want_grad else None
    else:
        H, T = _phi_hessian_line(xf, params, lam, want_grad)
    G = kd[0][:, None, None] * _EYE + H
    if not want_grad:
        return G.reshape(shape + (3, 3))
    dG = kd[1][:, :, None, None] * _EYE + T
    return G.reshape(shape + (3, 3)), dG.reshape(shape + (3, 3, 3))


def mode_velocity(x, params, k):
    """Velocity mode ``G_k(x)`` of the time-periodic kernel, ``k != 0``."""
    return _mode_parts(x, params, k, False)


def mode_velocity_grad(x, params, k):
    """``(G_k(x), grad G_k(x))`` with ``grad[..., m, i, j] = d_m (G_k)_ij``."""
    return _mode_parts(x, params, k, True)


def mode_kernel(x, params, k, grad=False):
    """Mode ``k`` of the full kernel: steady Oseen kernel for ``k = 0``."""
    if k == 0:
        if grad:
            return oseen_steady(x, params).astype(complex), oseen_steady_grad(x, params).astype(complex)
        return oseen_steady(x, params).astype(complex)
    if k < 0:
        out = _mode_parts(x, params, -k, grad)
        return tuple(np.conj(o) for o in out) if grad else np.conj(out)
    return _mode_parts(x, params, k, grad)


@dataclass
class ModeKernelCache:
    """Per-mode auxiliary data and memoized mode kernels on fixed point sets.

    ``r_tail(k)`` is the radius beyond which ``|K_{lam_k}| < tol`` off the wake,
    decreasing in ``|k|``.  Kernel tables are keyed by the byte image of the
    point array, so repeated evaluation on the same mesh/target pairs is free.
    """
    params: KernelParams
    tol: float = 1e-10
    _store: dict = field(default_factory=dict, repr=False)

    def mu(self, k):
        return _mu(self.params, self.params.frequency(k))

    def r_tail(self, k):
        mu = self.mu(k)
        a = mu.real - self.params.zeta_norm / (2.0 * self.params.nu)
        if a <= 0:
            return math.inf
        # |K| <= exp(-a r) / (4 pi nu r); solve exp(-a r) = tol 4 pi nu
        return max(-math.log(self.tol * FOUR_PI * self.params.nu) / a, 1e-12)

    def kernel(self, x, k, grad=False):
        x = np.ascontiguousarray(x, dtype=float)
        key = (x.shape, x.tobytes(), k, grad)
        if key not in self._store:
            self._store[key] = mode_kernel(x, self.params, k, grad)
        return self._store[key]


# ---------------------------------------------------------------------------
# assembled time-periodic kernel
# ---------------------------------------------------------------------------

def periodic_velocity_modes(x, params, grad=False):
    """``FourierSeries`` of the purely periodic kernel (mode 0 is zero)."""
    params = _params(params)
    n = params.n_modes
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-1] + (3, 3)
    c = np.zeros((2 * n + 1,) + shape, complex)
    cg = np.zeros((2 * n + 1,) + x.shape[:-1] + (3, 3, 3), complex) if grad else None
    for k in range(1, n + 1):
        if grad:
            g, dg = mode_velocity_grad(x, params, k)
            cg[n + k], cg[n - k] = dg, np.conj(dg)
        else:
            g = mode_velocity(x, params, k)
        c[n + k], c[n - k] = g, np.conj(g)
    fs = FourierSeries(c, params.period)
    return (fs, FourierSeries(cg, params.period)) if grad else fs


def full_velocity_modes(x, params, grad=False):
    params = _params(params)
    out = periodic_velocity_modes(x, params, grad)
    n = params.n_modes
    if grad:
        fs, fg = out
        fs.coeffs[n] = oseen_steady(x, params)
        fg.coeffs[n] = oseen_steady_grad(x, params)
        return fs, fg
    out.coeffs[n] = oseen_steady(x, params)
    return out


def periodic_velocity(t, x, params):
    """Real purely periodic kernel ``sum_{1<=|k|<=N} e^{i lam_k t} G_k(x)``."""
    return periodic_velocity_modes(x, params).evaluate(t)


def periodic_velocity_grad(t, x, params):
    return periodic_velocity_modes(x, params, grad=True)[1].evaluate(t)


def full_velocity(t, x, params):
    """Steady plus purely periodic part."""
    return oseen_steady(x, params) + periodic_velocity(t, x, params)
