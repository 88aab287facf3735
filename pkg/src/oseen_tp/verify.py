"""
Independent oracles for the kernel library.

* ``fft_mode_oracle``: a mode kernel obtained by inverting its Fourier symbol
  on a periodic box with the FFT.
* ``brute_conv_oracle``: direct Cartesian-grid summation of a volume
  convolution with a local correction around the singular point.
* ``pde_residual``: fourth-order finite-difference residual of the mode-k
  Oseen system for a (velocity, pressure) kernel pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import KernelParams
from .fundsol import (SingularityError, mode_kernel, oseen_steady, pressure_P)
from . import _cubature


class OracleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# FFT symbol inversion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FFTGridSpec:
    half_length: float
    n: int
    k: int
    params: KernelParams

    def __post_init__(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise OracleError("grid size must be a power of two")
        if self.half_length < 8:
            raise OracleError("box half-length must be at least 8")
        if self.k == 0:
            raise OracleError("the FFT oracle covers modes k != 0 only")

    @property
    def spacing(self):
        return 2.0 * self.half_length / self.n

    @property
    def guard_radius(self):
        """Largest |x| at which grid values are trusted (aliasing guard)."""
        return self.half_length / 4.0

    def axis(self):
        return self.spacing * (np.arange(self.n) - self.n // 2)


@dataclass(frozen=True)
class FFTField:
    spec: FFTGridSpec
    values: np.ndarray          # (n, n, n, 3, 3), grid-ordered with x = axis()[i]

    def points(self):
        a = self.spec.axis()
        X = np.stack(np.meshgrid(a, a, a, indexing="ij"), axis=-1)
        return X

    def region(self, r_min, r_max):
        """Grid points and values with ``r_min <= |x| <= r_max``."""
        if r_max > self.spec.guard_radius + 1e-12:
            raise OracleError(f"r_max exceeds the aliasing guard radius {self.spec.guard_radius:g}")
        X = self.points()
        r = np.linalg.norm(X, axis=-1)
        sel = (r >= r_min) & (r <= r_max)
        return X[sel], self.values[sel]


def _projector(XI):
    q2 = (XI ** 2).sum(-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        proj = np.eye(3) - XI[..., :, None] * XI[..., None, :] / q2[..., None, None]
    # xi = 0: projector replaced by its angular average (2/3) I
    proj[q2 == 0] = (2.0 / 3.0) * np.eye(3)
    return proj, q2


def brinkman_kernel(x, nu, beta):
    """Closed-form inverse of ``(I - xi xi^T/|xi|^2) / (nu |xi|^2 + beta)``
    for real ``beta > 0``: ``Y I + grad grad (E - nu Y) / beta`` with
    ``Y = exp(-kappa r) / (4 pi nu r)``, ``kappa = sqrt(beta/nu)``."""
    x = np.atleast_2d(np.asarray(x, float))
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise SingularityError("Brinkman kernel evaluated at the origin")
    xh = x / r[..., None]
    kap = math.sqrt(beta / nu)
    e = np.exp(-kap * r)
    # f = E - nu Y = (1 - e^{-kappa r}) / (4 pi r)
    f1 = (-(1.0 - e) / r ** 2 + kap * e / r) / (4.0 * math.pi)
    f2 = (2.0 * (1.0 - e) / r ** 3 - 2.0 * kap * e / r ** 2 - kap ** 2 * e / r) / (4.0 * math.pi)
    xx = xh[..., :, None] * xh[..., None, :]
    hess = f2[..., None, None] * xx + (f1 / r)[..., None, None] * (np.eye(3) - xx)
    y = e / (4.0 * math.pi * nu * r)
    return y[..., None, None] * np.eye(3) + hess / beta


def fft_mode_oracle(spec: FFTGridSpec, subtract_singular=True) -> FFTField:
    """Mode-k velocity kernel from the discrete inverse of its symbol
    ``(I - xi xi^T/|xi|^2) / (nu |xi|^2 + i (lam_k - zeta.xi))``.

    With ``subtract_singular`` the Brinkman symbol with ``beta = |lam_k|``
    is removed before the inversion and its closed form added back on the
    grid.  The remainder decays one power of ``|xi|`` faster, which turns the
    first-order cutoff error of the plain inversion into a second-order one.
    The grid value at ``x = 0`` is then undefined (NaN).
    """
    p = spec.params
    n, L = spec.n, spec.half_length
    lam = p.frequency(spec.k)
    xi1 = 2.0 * math.pi * np.fft.fftfreq(n, d=spec.spacing)
    XI = np.stack(np.meshgrid(xi1, xi1, xi1, indexing="ij"), axis=-1)
    beta = abs(lam)

    def symbol(xi):
        proj, q2 = _projector(xi)
        out = proj / (p.nu * q2 + 1j * (lam - xi @ p.zeta_vec))[..., None, None]
        if subtract_singular:
            out = out - proj / (p.nu * q2 + beta)[..., None, None]
        return out

    # the Nyquist frequency -pi/h has no +pi/h partner; averaging over both
    # signs keeps the discrete symbol Hermitian, so modes k and -k stay conjugate
    sym = symbol(XI)
    nyq = np.isclose(np.abs(XI), math.pi / spec.spacing)
    edge = nyq.any(-1)
    xe, ne = XI[edge], nyq[edge]
    acc = np.zeros((len(xe), 3, 3), complex)
    for flips in np.ndindex(2, 2, 2):
        sgn = np.where(np.array(flips) == 1, -1.0, 1.0)
        acc += symbol(np.where(ne, xe * sgn, xe))
    sym[edge] = acc / 8.0
    vals = np.fft.ifftn(sym, axes=(0, 1, 2)) * n ** 3 / (2.0 * L) ** 3
    # move x = 0 to index n/2 so that values[i] sits at axis()[i]
    vals = np.fft.fftshift(vals, axes=(0, 1, 2))
    if subtract_singular:
        a = spec.axis()
        X = np.stack(np.meshgrid(a, a, a, indexing="ij"), axis=-1).reshape(-1, 3)
        c = n // 2
        origin = c * n * n + c * n + c
        X[origin] = 1.0                       # placeholder, overwritten below
        vals = vals + brinkman_kernel(X, p.nu, beta).reshape(vals.shape)
        vals[c, c, c] = np.nan
    return FFTField(spec, vals)


def fft_disagreement(spec: FFTGridSpec, r_min=1.0, r_max=None, field: FFTField | None = None,
                     subtract_singular=True):
    """Mean-subtracted relative l2 disagreement between the FFT oracle and
    ``mode_kernel`` on ``r_min <= |x| <= r_max``."""
    field = field if field is not None else fft_mode_oracle(spec, subtract_singular)
    r_max = spec.guard_radius if r_max is None else r_max
    X, F = field.region(r_min, r_max)
    G = mode_kernel(X, spec.params, spec.k)
    F = F - F.mean(axis=0)
    G = G - G.mean(axis=0)
    return float(np.linalg.norm(F - G) / np.linalg.norm(G))


# ---------------------------------------------------------------------------
# brute-force volume convolution
# ---------------------------------------------------------------------------

def brute_conv_oracle(kernel, density, x, radius, h, center=(0.0, 0.0, 0.0), n_ball=(12, 12, 16)):
    """``int_{|y-c|<radius} kernel(x-y) density(y) dy`` by grid summation.

    ``kernel(z)`` maps ``(m, 3)`` offsets to ``(m, ...)`` values and
    ``density(y)`` maps ``(m, 3)`` points to ``(m,)``.  Grid nodes within
    ``2h`` of a target inside the region are dropped and replaced by the
    local correction ``int_{|z|<2h} kernel(z) density(x-z) dz`` on a
    spherical product rule, whose ``r^2`` Jacobian absorbs the singularity.
    Requires ``h <= dist/4`` with ``dist`` the distance from the target to
    the region boundary.
    """
    c = np.asarray(center, float)
    x = np.atleast_2d(np.asarray(x, float))
    m = int(math.ceil(radius / h))
    a = h * (np.arange(-m, m) + 0.5)
    Y = np.stack(np.meshgrid(a, a, a, indexing="ij"), axis=-1).reshape(-1, 3)
    Y = Y[np.linalg.norm(Y, axis=1) < radius] + c
    rho = np.asarray(density(Y), float)
    cell = h ** 3
    out = []
    r_ex = 2.0 * h
    ball_nodes, ball_w = _cubature.ball_rule((0.0, 0.0, 0.0), r_ex, *n_ball)
    ball_kern = kernel(ball_nodes)
    for xp in x:
        dist = abs(np.linalg.norm(xp - c) - radius)
        if dist == 0 or h > dist / 4.0:
            raise OracleError(f"resolution too coarse: h={h:g} > dist/4={dist / 4:g}")
        d = xp - Y
        keep = np.linalg.norm(d, axis=1) >= r_ex
        vals = kernel(d[keep])
        s = cell * np.einsum("q,q...->...", rho[keep], vals)
        if not np.all(keep):
            # excluded ball: spherical product rule centred on the target
            rho_b = np.asarray(density(xp - ball_nodes), float)
            s = s + np.einsum("q,q...->...", ball_w * rho_b, ball_kern)
        out.append(s)
    return np.array(out)


def radial_bump(r0=1.0):
    """Smooth radial density ``(1 - (r/r0)^2)^3`` on ``r < r0`` and its mass
    function ``M(r)``."""
    def dens(y):
        s = (np.linalg.norm(y, axis=-1) / r0) ** 2
        return np.where(s < 1, (1 - s) ** 3, 0.0)

    def mass(r):
        t = min(float(r) / r0, 1.0)
        # 4 pi r0^3 int_0^t u^2 (1-u^2)^3 du
        poly = t ** 3 / 3 - 3 * t ** 5 / 5 + 3 * t ** 7 / 7 - t ** 9 / 9
        return 4.0 * math.pi * r0 ** 3 * poly
    return dens, mass


def newton_P_potential(x, mass):
    """``(P * rho)(x) = M(|x|) x / (4 pi |x|^3)`` for a radial density."""
    x = np.atleast_2d(np.asarray(x, float))
    r = np.linalg.norm(x, axis=1)
    m = np.array([mass(ri) for ri in r])
    return m[:, None] * x / (4.0 * math.pi * r[:, None] ** 3)


# ---------------------------------------------------------------------------
# finite-difference PDE residual
# ---------------------------------------------------------------------------

_FD1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FD2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFFS = np.arange(-2, 3)


def kernel_pair(params: KernelParams, k=0, corrupt=None):
    """Sampler ``x -> (V, p)`` for the mode-k fundamental pair: column ``j``
    of ``V`` and entry ``j`` of ``p`` solve the system with force ``e_j``.

    ``corrupt`` is a negative control: ``"drop_gradgrad"`` keeps only the
    ``K I`` part of a nonzero mode, ``"drop_wake"`` drops the ``w w`` term of
    the steady kernel, ``"flip_pressure"`` negates the pressure.
    """
    def sample(x):
        x = np.asarray(x, float)
        if k == 0:
            V = oseen_steady(x, params).astype(complex)
            if corrupt == "drop_wake":
                V = V - _wake_part(x, params)
        else:
            V = mode_kernel(x, params, k)
            if corrupt == "drop_gradgrad":
                from .fundsol import drift_helmholtz_K
                V = drift_helmholtz_K(x, params, params.frequency(k))[..., None, None] * np.eye(3)
        P = pressure_P(x).astype(complex)
        if corrupt == "flip_pressure":
            P = -P
        return V, P
    return sample


def _wake_part(x, params):
    from .fundsol import _oseen_parts
    d = _oseen_parts(x, params)
    w = d["w"]
    return d["c"][..., None, None] * w[..., :, None] * w[..., None, :]


def pde_residual(sampler, k, x, params: KernelParams, step=None, singularity=(0.0, 0.0, 0.0)):
    """Relative residual of ``i lam_k V - nu Lap V - (zeta.grad) V + grad p^T``.

    Returns ``(residual, divergence)``: the max-norm of the momentum residual
    over the nine entries divided by the largest individual term, and the
    max-norm of ``div V`` divided by ``|grad V|``.
    """
    x = np.asarray(x, float)
    d = np.linalg.norm(x - np.asarray(singularity, float))
    h = 1e-3 * np.linalg.norm(x) if step is None else step
    if h <= 0 or d < 10.0 * h:
        raise SingularityError("finite-difference stencil too close to the singularity")
    lam = params.frequency(k)
    pts = x + h * _OFFS[None, :, None] * np.eye(3)[:, None, :]       # (axis, offset, 3)
    V, P = sampler(pts.reshape(-1, 3))
    V = V.reshape(3, 5, 3, 3)
    P = P.reshape(3, 5, 3)
    V0 = V[0, 2]
    dV = np.einsum("o,mo...->m...", _FD1, V) / h                      # d_m V_ij
    lap = np.einsum("o,mo...->...", _FD2, V) / h ** 2
    dP = np.einsum("o,mo...->m...", _FD1, P) / h                      # d_m p_j
    terms = [1j * lam * V0, -params.nu * lap, -np.einsum("m,mij->ij", params.zeta_vec, dV), dP]
    res = sum(terms)
    scale = max(np.abs(t).max() for t in terms)
    div = np.einsum("iij->j", dV)
    return float(np.abs(res).max() / scale), float(np.abs(div).max() / np.abs(dV).max())


def random_points(n, r_min, r_max, seed=0):
    """Seeded points with radii uniform in ``[r_min, r_max]``."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * rng.uniform(r_min, r_max, size=(n, 1))
