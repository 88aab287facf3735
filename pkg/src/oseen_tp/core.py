"""
Geometry, wake weight, time-torus Fourier algebra and surface meshes.

A time-periodic quantity is stored as a ``FourierSeries``: an array of complex
coefficients with the mode axis first, index ``k + N`` for ``k`` in
``[-N, N]``, so that ``g(t) = sum_k g_k exp(i 2 pi k t / T)``.  With the
normalized measure on the torus, time convolution is a mode-wise product and
the periodic delta has every coefficient equal to one.

Meshes are flat-triangle closed surfaces.  Normals stored on a mesh point out
of the body; the fluid-domain normal used by the representation formulas is
their negative (see ``SurfaceMesh.fluid_normals``).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class DomainError(ValueError):
    """Argument outside the domain of a scalar function."""


class ShapeError(ValueError):
    """Incompatible Fourier series or array shapes."""


class MeshError(ValueError):
    """Malformed or non-closed surface mesh."""


# ---------------------------------------------------------------------------
# parameters and scalar helpers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelParams:
    """Physical and truncation parameters shared by all kernels.

    zeta : translation velocity of the body (3-vector)
    nu : kinematic viscosity, > 0
    period : time period T, > 0
    n_modes : Fourier truncation N, modes ``-N..N`` are kept
    """
    zeta: tuple = (1.0, 0.0, 0.0)
    nu: float = 1.0
    period: float = 1.0
    n_modes: int = 8

    def __post_init__(self):
        z = tuple(float(c) for c in np.asarray(self.zeta, dtype=float).ravel())
        if len(z) != 3:
            raise ValueError("zeta must be a 3-vector")
        object.__setattr__(self, "zeta", z)
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.period > 0:
            raise ValueError("period must be positive")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ValueError("n_modes must be a positive integer")
        object.__setattr__(self, "n_modes", int(self.n_modes))

    @property
    def zeta_vec(self) -> np.ndarray:
        return np.array(self.zeta)

    @property
    def zeta_norm(self) -> float:
        return float(np.linalg.norm(self.zeta))

    def frequency(self, k) -> float:
        """lambda_k = 2 pi k / T."""
        return 2.0 * math.pi * k / self.period

    def with_(self, **changes) -> "KernelParams":
        d = dict(zeta=self.zeta, nu=self.nu, period=self.period, n_modes=self.n_modes)
        d.update(changes)
        return KernelParams(**d)

    def require_oseen(self):
        if self.zeta_norm == 0.0:
            raise ValueError("operation requires a nonzero translation velocity zeta")

    @classmethod
    def from_dict(cls, d: dict) -> "KernelParams":
        return cls(zeta=tuple(d.get("zeta", (1.0, 0.0, 0.0))), nu=float(d.get("nu", 1.0)),
                   period=float(d.get("period", 1.0)), n_modes=int(d.get("n_modes", 8)))

    def to_dict(self) -> dict:
        return dict(zeta=list(self.zeta), nu=self.nu, period=self.period, n_modes=self.n_modes)


def wake_weight(zeta, x):
    """Anisotropic wake weight ``(|zeta||x| + zeta.x) / 2``.

    Vectorized over the leading axes of ``x``.  Vanishes exactly on the ray
    anti-parallel to ``zeta`` (the wake behind the body).
    """
    zeta = np.asarray(zeta, dtype=float)
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    s = 0.5 * (np.linalg.norm(zeta) * r + x @ zeta)
    # rounding can push the anti-parallel case slightly negative
    return np.maximum(s, 0.0)


def log_plus(r):
    """``max(1, log r)`` for ``r > 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("log_plus requires r > 0")
    out = np.maximum(1.0, np.log(r))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Fourier series on the time torus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierSeries:
    """Complex Fourier coefficients of a T-periodic quantity.

    ``coeffs[k + N]`` holds the coefficient of ``exp(i 2 pi k t / T)``; any
    trailing axes are point/value axes and broadcast in arithmetic.
    """
    coeffs: np.ndarray
    period: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 0 or c.shape[0] % 2 != 1:
            raise ShapeError("mode axis must have odd length 2N+1")
        object.__setattr__(self, "coeffs", c)

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, n_modes, shape=(), period=1.0):
        return cls(np.zeros((2 * n_modes + 1,) + tuple(shape), complex), period)

    @classmethod
    def constant(cls, value, n_modes, period=1.0):
        value = np.asarray(value, dtype=complex)
        c = np.zeros((2 * n_modes + 1,) + value.shape, complex)
        c[n_modes] = value
        return cls(c, period)

    @classmethod
    def delta(cls, n_modes, period=1.0):
        """Periodic Dirac delta: every coefficient equals one."""
        return cls(np.ones(2 * n_modes + 1, complex), period)

    @classmethod
    def from_modes(cls, modes: dict, n_modes, shape=(), period=1.0):
        out = np.zeros((2 * n_modes + 1,) + tuple(shape), complex)
        for k, v in modes.items():
            if abs(k) > n_modes:
                raise ShapeError(f"mode {k} exceeds truncation {n_modes}")
            out[k + n_modes] = v
        return cls(out, period)

    @classmethod
    def from_samples(cls, samples, n_modes, period=1.0):
        """Coefficients from ``M >= 2N+1`` equispaced samples on ``[0, T)``."""
        samples = np.asarray(samples)
        m = samples.shape[0]
        if m < 2 * n_modes + 1:
            raise ShapeError("need at least 2N+1 samples")
        full = np.fft.fft(samples, axis=0) / m
        ks = np.arange(-n_modes, n_modes + 1)
        return cls(full[ks % m], period)

    @classmethod
    def from_function(cls, func, n_modes, period=1.0, n_samples=None):
        m = n_samples or 4 * n_modes + 1
        t = period * np.arange(m) / m
        return cls.from_samples(np.stack([np.asarray(func(ti)) for ti in t]), n_modes, period)

    @classmethod
    def cos_sin(cls, mean=0.0, cos=(), sin=(), n_modes=None, period=1.0):
        """``mean + sum_k cos_k cos(l_k t) + sin_k sin(l_k t)`` as a series."""
        n_needed = max(len(cos), len(sin), 0)
        n = n_modes if n_modes is not None else max(n_needed, 1)
        if n_needed > n:
            raise ShapeError("more harmonics than modes")
        c = np.zeros(2 * n + 1, complex)
        c[n] = mean
        for k, a in enumerate(cos, start=1):
            c[n + k] += a / 2
            c[n - k] += a / 2
        for k, b in enumerate(sin, start=1):
            c[n + k] += b / 2j
            c[n - k] -= b / 2j
        return cls(c, period)

    # basic properties ---------------------------------------------------
    @property
    def n_modes(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def value_shape(self):
        return self.coeffs.shape[1:]

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.n_modes, self.n_modes + 1)

    @property
    def frequencies(self) -> np.ndarray:
        return 2.0 * np.pi * self.ks / self.period

    def mode(self, k) -> np.ndarray:
        if abs(k) > self.n_modes:
            return np.zeros(self.value_shape, complex)
        return self.coeffs[k + self.n_modes]

    def active_modes(self, tol=0.0):
        """Modes whose coefficients are not all (near) zero."""
        mags = np.abs(self.coeffs).reshape(self.coeffs.shape[0], -1)
        mags = mags.max(axis=1) if mags.shape[1] else np.zeros(mags.shape[0])
        return [int(k) for k, m in zip(self.ks, mags) if m > tol]

    def steady(self) -> "FourierSeries":
        """Projection onto the time mean (mode 0 only)."""
        c = np.zeros_like(self.coeffs)
        c[self.n_modes] = self.coeffs[self.n_modes]
        return FourierSeries(c, self.period)

    def purely_periodic(self) -> "FourierSeries":
        c = self.coeffs.copy()
        c[self.n_modes] = 0
        return FourierSeries(c, self.period)

    def is_real(self, rtol=1e-12) -> bool:
        """Conjugate symmetry ``c_{-k} = conj(c_k)``."""
        c = self.coeffs
        scale = max(np.abs(c).max(initial=0.0), 1e-300)
        return bool(np.abs(c[::-1] - np.conj(c)).max(initial=0.0) <= rtol * scale)

    def symmetrized(self) -> "FourierSeries":
        """Nearest conjugate-symmetric series (real part in time)."""
        c = 0.5 * (self.coeffs + np.conj(self.coeffs[::-1]))
        return FourierSeries(c, self.period)

    # evaluation ---------------------------------------------------------
    def evaluate(self, t, real=True):
        """Values at time(s) ``t``; time axis (if any) becomes the first axis."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        phase = np.exp(1j * np.outer(t_arr, self.frequencies))
        vals = np.tensordot(phase, self.coeffs, axes=(1, 0))
        if real:
            vals = vals.real
        return vals[0] if np.ndim(t) == 0 else vals

    def time_grid(self, n_samples=None):
        m = n_samples or 4 * self.n_modes + 1
        return self.period * np.arange(m) / m

    def norm_l2(self, axis=None):
        """L2(T) norm with normalized measure (Parseval), pointwise in space.

        Value axes listed in ``axis`` are included in the norm (Frobenius).
        """
        sq = np.abs(self.coeffs) ** 2
        sq = sq.sum(axis=0)
        if axis is not None:
            sq = sq.sum(axis=axis)
        return np.sqrt(sq)

    def norm_sup(self, axis=None, n_samples=None):
        """Max over a uniform time grid of the (Frobenius) magnitude."""
        vals = self.evaluate(self.time_grid(n_samples))
        mag = np.abs(vals) if axis is None else np.sqrt((vals ** 2).sum(axis=tuple(a + 1 if a >= 0 else a for a in np.atleast_1d(axis))))
        return mag.max(axis=0)

    # algebra ------------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, FourierSeries):
            raise TypeError("expected FourierSeries")
        if other.n_modes != self.n_modes:
            raise ShapeError("mismatched mode truncation")

    def __add__(self, other):
        self._check(other)
        return FourierSeries(self.coeffs + other.coeffs, self.period)

    def __sub__(self, other):
        self._check(other)
        return FourierSeries(self.coeffs - other.coeffs, self.period)

    def __neg__(self):
        return FourierSeries(-self.coeffs, self.period)

    def scaled(self, factor) -> "FourierSeries":
        return FourierSeries(self.coeffs * factor, self.period)

    def map(self, func) -> "FourierSeries":
        """Apply a linear map to every mode (``func`` acts on the mode stack)."""
        return FourierSeries(func(self.coeffs), self.period)

    def truncated(self, n_modes) -> "FourierSeries":
        n = self.n_modes
        if n_modes >= n:
            c = np.zeros((2 * n_modes + 1,) + self.value_shape, complex)
            c[n_modes - n:n_modes + n + 1] = self.coeffs
            return FourierSeries(c, self.period)
        return FourierSeries(self.coeffs[n - n_modes:n + n_modes + 1], self.period)


def fourier_convolve(a: FourierSeries, b: FourierSeries, subscripts=None) -> FourierSeries:
    """Time convolution on the torus with normalized measure.

    Mode-wise product of coefficients.  ``subscripts`` is an optional einsum
    signature acting on the value axes (mode axis excluded), e.g. ``"ij,j->i"``
    for a tensor kernel applied to a vector density.
    """
    if a.n_modes != b.n_modes:
        raise ShapeError("fourier_convolve: mismatched mode truncation")
    if subscripts is None:
        try:
            c = a.coeffs * b.coeffs
        except ValueError as exc:
            raise ShapeError(str(exc)) from None
    else:
        ins, out = subscripts.split("->")
        sa, sb = ins.split(",")
        c = np.einsum(f"z{sa},z{sb}->z{out}", a.coeffs, b.coeffs)
    return FourierSeries(c, a.period)


def fourier_product(a: FourierSeries, b: FourierSeries, subscripts=None, n_modes=None) -> FourierSeries:
    """Pointwise product in time, i.e. convolution of coefficient sequences.

    The result is truncated to ``n_modes`` (default: that of ``a``).
    """
    if a.n_modes != b.n_modes:
        raise ShapeError("fourier_product: mismatched mode truncation")
    n = a.n_modes
    n_out = n if n_modes is None else n_modes
    ca, cb = a.coeffs, b.coeffs
    if subscripts is None:
        shape = np.broadcast_shapes(ca.shape[1:], cb.shape[1:])
        out = np.zeros((2 * n_out + 1,) + shape, complex)
        for k in range(-n_out, n_out + 1):
            lo, hi = max(-n, k - n), min(n, k + n)
            for m in range(lo, hi + 1):
                out[k + n_out] += ca[m + n] * cb[k - m + n]
        return FourierSeries(out, a.period)
    ins, outs = subscripts.split("->")
    sa, sb = ins.split(",")
    acc = None
    for k in range(-n_out, n_out + 1):
        lo, hi = max(-n, k - n), min(n, k + n)
        if lo > hi:
            term = None
        else:
            term = np.einsum(f"z{sa},z{sb}->{outs}", ca[lo + n:hi + n + 1], cb[k - hi + n:k - lo + n + 1][::-1])
        if acc is None:
            acc = np.zeros((2 * n_out + 1,) + term.shape, complex)
        if term is not None:
            acc[k + n_out] = term
    return FourierSeries(acc, a.period)


def fourier_time_derivative(a: FourierSeries) -> FourierSeries:
    """``d/dt``: multiply mode ``k`` by ``i 2 pi k / T``."""
    lam = a.frequencies.reshape((-1,) + (1,) * len(a.value_shape))
    return FourierSeries(1j * lam * a.coeffs, a.period)


# ---------------------------------------------------------------------------
# deterministic compensated reduction
# ---------------------------------------------------------------------------

def _neumaier(total, comp, x):
    t = total + x
    big = np.abs(total) >= np.abs(x)
    comp = comp + np.where(big, (total - t) + x, (x - t) + total)
    return t, comp


def compensated_sum(values, axis=0, block=256):
    """Sum along ``axis`` in index order with Neumaier compensation.

    The axis is cut into ``block`` interleaved lanes; each lane is
    accumulated with a running error term (vectorized over lanes), then
    the lane partials are combined the same way.  Fully deterministic for a
    fixed input layout.
    """
    v = np.moveaxis(np.asarray(values), axis, 0)
    n = v.shape[0]
    if n <= 2:
        return v.sum(axis=0)
    lanes = min(block, n)
    rows = -(-n // lanes)
    pad = rows * lanes - n
    if pad:
        v = np.concatenate([v, np.zeros((pad,) + v.shape[1:], v.dtype)])
    v = v.reshape((rows, lanes) + v.shape[1:])
    total = np.zeros(v.shape[1:], v.dtype)
    comp = np.zeros_like(total)
    for i in range(rows):
        total, comp = _neumaier(total, comp, v[i])
    lane_tot, lane_comp = total, comp
    total = np.zeros(lane_tot.shape[1:], v.dtype)
    comp = lane_comp.sum(axis=0)
    for j in range(lanes):
        total, comp = _neumaier(total, comp, lane_tot[j])
    return total + comp


# ---------------------------------------------------------------------------
# surface meshes
# ---------------------------------------------------------------------------

# barycentric points and weights (weights sum to one) on the reference triangle
_RULES = {
    "centroid": (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])),
    "3point": (np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
               np.full(3, 1 / 3)),
}


def _dunavant6():
    a1, w1 = 0.445948490915965, 0.223381589678011
    a2, w2 = 0.091576213509771, 0.109951743655322
    pts, wts = [], []
    for a, w in ((a1, w1), (a2, w2)):
        b = 1 - 2 * a
        pts += [[a, a, b], [a, b, a], [b, a, a]]
        wts += [w] * 3
    return np.array(pts), np.array(wts)


def _dunavant7():
    pts = [[1 / 3, 1 / 3, 1 / 3]]
    wts = [0.225]
    for a, w in ((0.470142064105115, 0.132394152788506), (0.101286507323456, 0.125939180544827)):
        b = 1 - 2 * a
        pts += [[a, a, b], [a, b, a], [b, a, a]]
        wts += [w] * 3
    return np.array(pts), np.array(wts)


_RULES["6point"] = _dunavant6()
_RULES["7point"] = _dunavant7()
QUADRATURE_RULES = tuple(_RULES)


@dataclass(frozen=True)
class SurfaceMesh:
    """Closed triangulated surface with a per-triangle quadrature rule.

    ``normals`` are unit normals pointing out of the body.  Quadrature nodes
    inherit the flat-face normal of their triangle.
    """
    vertices: np.ndarray
    triangles: np.ndarray
    rule: str = "centroid"
    check_closed: bool = True
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3 or t.ndim != 2 or t.shape[1] != 3:
            raise MeshError("vertices must be (V,3) and triangles (T,3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle index out of range")
        if self.rule not in _RULES:
            raise MeshError(f"unknown quadrature rule {self.rule!r}")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if np.any(self.areas <= 0):
            raise MeshError("degenerate triangle")
        if self.check_closed:
            resid = np.linalg.norm(self.normal_integral)
            if resid > 1e-10 * max(self.total_area, 1.0):
                raise MeshError(f"surface not closed: |int n dS| = {resid:.3e}")

    # per-triangle geometry
    @cached_property
    def _corners(self):
        return self.vertices[self.triangles]

    @cached_property
    def _cross(self):
        a, b, c = self._corners[:, 0], self._corners[:, 1], self._corners[:, 2]
        return np.cross(b - a, c - a)

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    @cached_property
    def face_normals(self) -> np.ndarray:
        n = self._cross / np.linalg.norm(self._cross, axis=1, keepdims=True)
        # orient out of the body using the signed volume
        return n if self.signed_volume >= 0 else -n

    @cached_property
    def signed_volume(self) -> float:
        a, b, c = self._corners[:, 0], self._corners[:, 1], self._corners[:, 2]
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    @cached_property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def normal_integral(self) -> np.ndarray:
        return compensated_sum(self._cross * 0.5, axis=0)

    @cached_property
    def max_diameter(self) -> float:
        c = self._corners
        edges = np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 1], c[:, 0] - c[:, 2]], axis=1)
        return float(np.linalg.norm(edges, axis=2).max())

    @cached_property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @cached_property
    def circumradius(self) -> float:
        """Radius of the smallest origin-centred ball containing the surface."""
        return float(np.linalg.norm(self.vertices, axis=1).max())

    # quadrature
    @cached_property
    def nodes(self) -> np.ndarray:
        bary, _ = _RULES[self.rule]
        pts = np.einsum("qa,tad->tqd", bary, self._corners)
        return pts.reshape(-1, 3)

    @cached_property
    def weights(self) -> np.ndarray:
        _, w = _RULES[self.rule]
        return (self.areas[:, None] * w[None, :]).ravel()

    @cached_property
    def normals(self) -> np.ndarray:
        """Body-outward unit normal at every quadrature node."""
        q = len(_RULES[self.rule][1])
        return np.repeat(self.face_normals, q, axis=0)

    @property
    def fluid_normals(self) -> np.ndarray:
        """Normal pointing out of the fluid domain (into the body)."""
        return -self.normals

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, values, axis=0):
        """Quadrature of node values (node axis ``axis``), compensated."""
        values = np.asarray(values)
        w = self.weights.reshape((-1,) + (1,) * (values.ndim - 1 - axis))
        moved = np.moveaxis(values, axis, 0) if axis else values
        w = self.weights.reshape((-1,) + (1,) * (moved.ndim - 1))
        return compensated_sum(moved * w, axis=0)

    def distance_to(self, x) -> np.ndarray:
        """Lower bound on distance from points to the surface via vertices and nodes."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        pts = np.concatenate([self.vertices, self.nodes])
        d = np.full(len(x), np.inf)
        for s in range(0, len(pts), 4096):
            chunk = pts[s:s + 4096]
            d = np.minimum(d, np.linalg.norm(x[:, None, :] - chunk[None], axis=2).min(axis=1))
        # any surface point is within max_diameter of a vertex
        return d

    def with_rule(self, rule) -> "SurfaceMesh":
        return SurfaceMesh(self.vertices, self.triangles, rule=rule, check_closed=False)

    def to_json(self) -> str:
        return json.dumps({"vertices": self.vertices.tolist(), "triangles": self.triangles.tolist()})


def _icosahedron():
    p = (1 + 5 ** 0.5) / 2
    v = np.array([[-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
                  [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
                  [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1]], dtype=float)
    f = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                  [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                  [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                  [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def sphere_mesh(center=(0.0, 0.0, 0.0), radius=1.0, refinement_level=2, rule="centroid") -> SurfaceMesh:
    """Subdivided icosahedron with vertices on the sphere.

    Level 0 has 20 triangles, each level multiplies the count by 4.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    verts, faces = _icosahedron()
    verts = list(verts)
    for _ in range(int(refinement_level)):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.array(new)
    v = np.asarray(center, float) + radius * np.array(verts)
    return SurfaceMesh(v, faces, rule=rule)


def load_mesh(path_or_dict, rule="centroid") -> SurfaceMesh:
    """Mesh from JSON ``{vertices: [[x,y,z],...], triangles: [[i,j,k],...]}``."""
    if isinstance(path_or_dict, dict):
        d = path_or_dict
    else:
        d = json.loads(Path(path_or_dict).read_text())
    try:
        return SurfaceMesh(np.array(d["vertices"], float), np.array(d["triangles"], int), rule=rule)
    except KeyError as exc:
        raise MeshError(f"mesh JSON missing field {exc}") from None


# ---------------------------------------------------------------------------
# sampling rays
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ray:
    """Points ``r * direction`` for an increasing list of radii."""
    direction: tuple
    radii: tuple
    label: str = ""

    def __post_init__(self):
        d = np.asarray(self.direction, float)
        n = np.linalg.norm(d)
        if d.shape != (3,) or n == 0:
            raise ValueError("direction must be a nonzero 3-vector")
        object.__setattr__(self, "direction", tuple(d / n))
        r = np.asarray(self.radii, float)
        if r.ndim != 1 or len(r) == 0 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        object.__setattr__(self, "radii", tuple(r))

    @property
    def points(self) -> np.ndarray:
        return np.outer(self.radii, self.direction)

    def check_outside(self, mesh: SurfaceMesh):
        if min(self.radii) <= mesh.circumradius:
            raise ValueError("ray starts inside the circumscribed ball of the body")

    @classmethod
    def geometric(cls, direction, r_min, r_max, ratio=math.sqrt(2.0), label=""):
        n = int(math.floor(math.log(r_max / r_min) / math.log(ratio) + 1e-9)) + 1
        return cls(direction, tuple(r_min * ratio ** np.arange(n)), label)


def default_rays(zeta, r_min=4.0, r_max=64.0, ratio=math.sqrt(2.0)):
    """Upstream/wake axis, two transverse and two diagonal directions."""
    z = np.asarray(zeta, float)
    zh = z / np.linalg.norm(z)
    t1 = np.cross(zh, [0.0, 0.0, 1.0])
    if np.linalg.norm(t1) < 1e-8:
        t1 = np.cross(zh, [0.0, 1.0, 0.0])
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(zh, t1)
    dirs = {"upstream": zh, "wake": -zh, "transverse1": t1, "transverse2": t2,
            "diag_up": (zh + t1) / math.sqrt(2), "diag_wake": (-zh + t1) / math.sqrt(2)}
    return [Ray.geometric(d, r_min, r_max, ratio, label=k) for k, d in dirs.items()]
