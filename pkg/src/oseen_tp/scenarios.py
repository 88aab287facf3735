"""
Manufactured exact solutions of the homogeneous time-periodic Oseen system
outside a body, built from singularities placed inside the body.

Kinds of singularity:

steady_oseenlet
    ``v = G_ste(x-y0) a``, ``p = P(x-y0).a`` (mode 0 only).
periodic_oseenlet
    ``v = G_k(x-y0) a e^{i lam_k t} + c.c.``, ``p = P(x-y0).a e^{i lam_k t} + c.c.``
pulsating_source
    ``v = q(t) P(x-y0)``, ``p = q'(t) E(x-y0) + q(t) zeta.P(x-y0)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import FourierSeries, KernelParams, SurfaceMesh, sphere_mesh
from .fundsol import grad_P, laplace_E, mode_kernel, pressure_P
from .potentials import BoundaryData

KINDS = ("steady_oseenlet", "periodic_oseenlet", "pulsating_source")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Singularity:
    """Interior singularity.  ``strength`` is a real 3-vector for oseenlets
    and a real ``FourierSeries`` (scalar) for the pulsating source."""
    kind: str
    location: tuple
    strength: object
    k: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScenarioError(f"unknown singularity kind {self.kind!r}")
        object.__setattr__(self, "location", tuple(float(c) for c in self.location))
        if self.kind == "periodic_oseenlet" and self.k == 0:
            raise ScenarioError("periodic_oseenlet needs k != 0")
        if self.kind == "pulsating_source":
            if not isinstance(self.strength, FourierSeries) or self.strength.value_shape != ():
                raise ScenarioError("pulsating_source strength must be a scalar FourierSeries")
            if not self.strength.is_real():
                raise ScenarioError("source strength must be real in time")
        else:
            a = np.asarray(self.strength, float)
            if a.shape != (3,):
                raise ScenarioError("oseenlet strength must be a real 3-vector")
            object.__setattr__(self, "strength", tuple(a))


@dataclass(frozen=True)
class Scenario:
    singularities: tuple
    params: KernelParams
    body_center: tuple = (0.0, 0.0, 0.0)
    body_radius: float = 1.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "singularities", tuple(self.singularities))
        c = np.asarray(self.body_center, float)
        for s in self.singularities:
            if np.linalg.norm(np.asarray(s.location) - c) >= 0.75 * self.body_radius:
                raise ScenarioError("singularities must lie well inside the body")
            if s.kind == "periodic_oseenlet" and abs(s.k) > self.params.n_modes:
                raise ScenarioError("oseenlet mode exceeds the truncation N")
            if s.kind == "pulsating_source" and s.strength.n_modes != self.params.n_modes:
                raise ScenarioError("source strength must use the scenario truncation N")

    def mesh(self, level=3, rule="centroid") -> SurfaceMesh:
        return sphere_mesh(self.body_center, self.body_radius, level, rule)


def _prep(scenario, x):
    x = np.asarray(x, float)
    for s in scenario.singularities:
        if np.any(np.linalg.norm(x - np.asarray(s.location), axis=-1) == 0):
            raise ScenarioError("evaluation at a singularity")
    return x


def _fields(scenario: Scenario, x, want_grad=True, want_p=True):
    """Mode coefficients of ``v``, ``grad v`` (``[..., i, j] = d_i v_j``) and ``p``."""
    params = scenario.params
    n = params.n_modes
    x = _prep(scenario, np.atleast_2d(x))
    npt = len(x)
    v = np.zeros((2 * n + 1, npt, 3), complex)
    gv = np.zeros((2 * n + 1, npt, 3, 3), complex) if want_grad else None
    p = np.zeros((2 * n + 1, npt), complex) if want_p else None
    for s in scenario.singularities:
        d = x - np.asarray(s.location)
        if s.kind == "pulsating_source":
            q = s.strength.coeffs
            P = pressure_P(d)
            v += q[:, None, None] * P[None]
            if want_grad:
                gv += q[:, None, None, None] * grad_P(d)[None]
            if want_p:
                lam = s.strength.frequencies
                p += (1j * lam * q)[:, None] * laplace_E(d)[None] + q[:, None] * (P @ params.zeta_vec)[None]
            continue
        a = np.asarray(s.strength)
        k = 0 if s.kind == "steady_oseenlet" else abs(s.k)
        # a real amplitude on mode s.k; the conjugate mode keeps the field real
        if want_grad:
            G, dG = mode_kernel(d, params, k, True)
        else:
            G = mode_kernel(d, params, k, False)
        vk = G @ a
        pk = pressure_P(d) @ a
        gk = np.einsum("pmji,i->pmj", dG, a) if want_grad else None
        if k == 0:
            v[n] += vk
            if want_grad:
                gv[n] += gk
            if want_p:
                p[n] += pk
        else:
            sign = 1 if s.k > 0 else -1
            v[n + sign * k] += vk if sign > 0 else np.conj(vk)
            v[n - sign * k] += np.conj(vk) if sign > 0 else vk
            if want_grad:
                gv[n + sign * k] += gk if sign > 0 else np.conj(gk)
                gv[n - sign * k] += np.conj(gk) if sign > 0 else gk
            if want_p:
                p[n + k] += pk
                p[n - k] += pk
    per = params.period
    return (FourierSeries(v, per), FourierSeries(gv, per) if want_grad else None,
            FourierSeries(p, per) if want_p else None)


def velocity_modes(scenario, x) -> FourierSeries:
    return _fields(scenario, x, False, False)[0]


def grad_velocity_modes(scenario, x) -> FourierSeries:
    return _fields(scenario, x, True, False)[1]


def pressure_modes(scenario, x) -> FourierSeries:
    return _fields(scenario, x, False, True)[2]


def eval_velocity(scenario, t, x):
    """Real velocity at time(s) ``t`` and points ``x``."""
    return velocity_modes(scenario, x).evaluate(t)


def eval_pressure(scenario, t, x):
    return pressure_modes(scenario, x).evaluate(t)


def eval_grad_velocity(scenario, t, x):
    return grad_velocity_modes(scenario, x).evaluate(t)


def vfield(scenario):
    """Callable ``points -> (v, grad v)`` for the nonlinear representation."""
    def sample(points):
        v, g, _ = _fields(scenario, points, True, False)
        return v, g
    return sample


def boundary_data(scenario: Scenario, mesh: SurfaceMesh) -> BoundaryData:
    """Trace and traction ``[nu (grad v + grad v^T) - p I] n`` at the mesh nodes,
    with ``n`` the fluid-domain normal."""
    v, gv, p = _fields(scenario, mesh.nodes, True, True)
    n = mesh.fluid_normals
    nu = scenario.params.nu
    sym = gv.coeffs + np.swapaxes(gv.coeffs, -1, -2)
    tr = nu * np.einsum("zqij,qj->zqi", sym, n) - p.coeffs[..., None] * n[None]
    return BoundaryData(v, FourierSeries(tr, scenario.params.period))


# ---------------------------------------------------------------------------
# stock scenarios
# ---------------------------------------------------------------------------

def steady_oseenlet(params, a=(1.0, 0.0, 0.0), y0=(0.1, -0.2, 0.15)):
    return Scenario((Singularity("steady_oseenlet", y0, a),), params, label="steady_oseenlet")


def periodic_oseenlet(params, a=(0.3, 1.0, -0.4), y0=(-0.15, 0.1, 0.2), k=1):
    return Scenario((Singularity("periodic_oseenlet", y0, a, k),), params, label=f"periodic_oseenlet_k{k}")


def pulsating_source(params, q=None, y0=(0.2, 0.1, -0.1)):
    if q is None:
        q = FourierSeries.cos_sin(0.0, [1.0], n_modes=params.n_modes, period=params.period)
    return Scenario((Singularity("pulsating_source", y0, q),), params, label="pulsating_source")


def make_flux_pair(params: KernelParams, q0=1.0, q1=1.0):
    """Scenarios with time-dependent and with constant total flux.

    Both carry a steady and a k=1 periodic oseenlet (nonzero force moments)
    and a source of strength ``q0 + q1 cos(lam_1 t)`` or ``q0``.
    """
    n, per = params.n_modes, params.period
    common = (Singularity("steady_oseenlet", (-0.1, 0.2, 0.0), (0.3, 1.0, 0.2)),
              Singularity("periodic_oseenlet", (0.0, -0.2, 0.1), (0.5, 0.8, -0.3), 1))
    q_t = FourierSeries.cos_sin(q0, [q1], n_modes=n, period=per)
    q_c = FourierSeries.constant(q0, n, per)
    src = (0.2, 0.1, 0.0)
    return (Scenario(common + (Singularity("pulsating_source", src, q_t),), params, label="timedep_flux"),
            Scenario(common + (Singularity("pulsating_source", src, q_c),), params, label="const_flux"))


# ---------------------------------------------------------------------------
# JSON scenario files
# ---------------------------------------------------------------------------

def scenario_from_dict(d: dict) -> Scenario:
    allowed = {"params", "body", "singularities", "label"}
    extra = set(d) - allowed
    if extra:
        raise ScenarioError(f"unknown scenario keys: {sorted(extra)}")
    params = KernelParams.from_dict(d.get("params", {}))
    body = d.get("body", {"type": "sphere", "radius": 1.0, "center": [0, 0, 0]})
    if body.get("type", "sphere") != "sphere":
        raise ScenarioError("only sphere bodies are supported")
    sings = []
    for s in d.get("singularities", []):
        kind = s.get("kind")
        loc = s.get("location", [0.0, 0.0, 0.0])
        if kind == "pulsating_source":
            st = s.get("strength", {})
            q = FourierSeries.cos_sin(st.get("mean", 0.0), st.get("cos", []), st.get("sin", []),
                                      n_modes=params.n_modes, period=params.period)
            sings.append(Singularity(kind, loc, q))
        else:
            sings.append(Singularity(kind, loc, s.get("strength"), int(s.get("k", 0))))
    return Scenario(tuple(sings), params, tuple(body.get("center", (0, 0, 0))),
                    float(body.get("radius", 1.0)), d.get("label", ""))


def scenario_to_dict(sc: Scenario) -> dict:
    sings = []
    for s in sc.singularities:
        if s.kind == "pulsating_source":
            c = s.strength.coeffs
            n = s.strength.n_modes
            cos = [float(2 * c[n + k].real) for k in range(1, n + 1)]
            sin = [float(-2 * c[n + k].imag) for k in range(1, n + 1)]
            sings.append(dict(kind=s.kind, location=list(s.location),
                              strength=dict(mean=float(c[n].real), cos=cos, sin=sin)))
        else:
            e = dict(kind=s.kind, location=list(s.location), strength=list(s.strength))
            if s.kind == "periodic_oseenlet":
                e["k"] = s.k
            sings.append(e)
    return dict(params=sc.params.to_dict(),
                body=dict(type="sphere", radius=sc.body_radius, center=list(sc.body_center)),
                singularities=sings, label=sc.label)


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))
