import warnings

import numpy as np
import pytest

from oseen_tp import scenarios as S
from oseen_tp.core import FourierSeries, KernelParams, fourier_product, sphere_mesh, wake_weight
from oseen_tp.fundsol import full_velocity_modes, oseen_steady, pressure_P
from oseen_tp.potentials import (BoundaryData, ProximityError, VolumeForcing, pressure_monopole_layer,
                                 represent_pressure_linear, represent_velocity_linear,
                                 represent_velocity_nonlinear, single_layer_velocity, stress_couple_layer,
                                 volume_potential)

P2 = KernelParams((1.0, 0.0, 0.0), 1.0, 1.0, 2)
FAR = np.array([[6.0, 0, 0], [-6, 0, 0], [0, 8, 0], [0, 0, -10], [5, 5, 3], [-9, 4, -2], [3, -12, 6],
                [-14, -10, 8]])


@pytest.fixture(scope="module")
def mesh7():
    return sphere_mesh(refinement_level=2, rule="7point")


def nodal_series(mesh, modes, n=2, period=1.0, seed=0, shape=(3,)):
    """Real series with random nodal amplitudes on the given positive modes."""
    rng = np.random.default_rng(seed)
    c = np.zeros((2 * n + 1, mesh.n_nodes) + shape, complex)
    for k in modes:
        a = rng.normal(size=(mesh.n_nodes,) + shape) + 1j * rng.normal(size=(mesh.n_nodes,) + shape)
        if k == 0:
            c[n] = a.real
        else:
            c[n + k], c[n - k] = a, np.conj(a)
    return FourierSeries(c, period)


def test_zero_densities_give_zero(mesh7):
    x = FAR[:3]
    z3 = FourierSeries.zeros(2, (mesh7.n_nodes, 3))
    z1 = FourierSeries.zeros(2, (mesh7.n_nodes,))
    assert np.all(single_layer_velocity(mesh7, z3, x, P2).coeffs == 0)
    assert np.all(stress_couple_layer(mesh7, z3, x, P2).coeffs == 0)
    assert np.all(pressure_monopole_layer(mesh7, z1, x, "P").coeffs == 0)
    assert np.all(pressure_monopole_layer(mesh7, z1, x, "E").coeffs == 0)
    bd = BoundaryData(z3, z3)
    assert np.all(represent_velocity_linear(mesh7, bd, None, x, P2).coeffs == 0)
    assert np.all(represent_pressure_linear(mesh7, bd, None, x, P2).coeffs == 0)
    f = VolumeForcing.point((0.1, 0, 0), FourierSeries.zeros(2, (3,)))
    assert np.all(volume_potential(f, x, P2).coeffs == 0)


def test_exterior_pressure_flux_identity():
    # int_S P(x-y).n(y) dS = 0 for x outside the body
    errs = []
    for level in (1, 2, 3):
        m = sphere_mesh(refinement_level=level, rule="7point")
        vals = [m.integrate(np.einsum("qi,qi->q", pressure_P(x - m.nodes), m.fluid_normals)) for x in FAR]
        errs.append(max(abs(v) for v in vals))
    assert errs[-1] < 1e-10
    assert errs[0] > errs[1] > errs[2]


def time_grid_convolution(mesh, x, dens, params, grad=False):
    """Direct trapezoidal convolution on 4N+1 samples of the truncated kernel."""
    n = params.n_modes
    m = 4 * n + 1
    t = params.period * np.arange(m) / m
    d = x[:, None, :] - mesh.nodes[None]
    if grad:
        Gt = full_velocity_modes(d, params, grad=True)[1].evaluate(t)
    else:
        Gt = full_velocity_modes(d, params).evaluate(t)
    gt = dens.evaluate(t)
    out = []
    for i in range(m):
        lag = (i - np.arange(m)) % m
        out.append(np.mean([contract(Gt[lag[j]], gt[j], mesh, params) if grad else
                            np.einsum("pqij,qj,q->pi", Gt[lag[j]], gt[j], mesh.weights) for j in range(m)],
                           axis=0))
    return t, np.array(out)


def contract(dG, vb, mesh, params):
    nrm = mesh.fluid_normals
    w = mesh.weights
    t1 = np.einsum("qj,pqjli,ql,q->pi", vb, dG, nrm, w)
    t2 = np.einsum("qj,pqlji,ql,q->pi", vb, dG, nrm, w)
    return params.nu * (t1 + t2)


@pytest.mark.parametrize("modes", [(1,), (0, 2)])
def test_single_layer_mode_wise_equals_time_grid(mesh7, modes):
    m = sphere_mesh(refinement_level=1)
    dens = nodal_series(m, modes)
    x = FAR[:3]
    t, direct = time_grid_convolution(m, x, dens, P2)
    mw = single_layer_velocity(m, dens, x, P2)
    assert mw.is_real()
    np.testing.assert_allclose(mw.evaluate(t), direct, rtol=0, atol=1e-10 * np.abs(direct).max())


def test_stress_couple_mode_wise_equals_time_grid():
    m = sphere_mesh(refinement_level=1)
    vb = nodal_series(m, (0, 1), seed=1)
    x = FAR[3:6]
    t, direct = time_grid_convolution(m, x, vb, P2, grad=True)
    mw = stress_couple_layer(m, vb, x, P2)
    assert mw.is_real()
    np.testing.assert_allclose(mw.evaluate(t), direct, rtol=0, atol=1e-10 * np.abs(direct).max())


def test_stress_couple_rigid_data_decay(mesh7):
    vb = FourierSeries.constant(np.tile([1.0, 0.5, 0.0], (mesh7.n_nodes, 1)), 2)
    rs = np.array([8.0, 16, 32, 64])
    for d in ([0, 1, 0], [-1, 0, 0], [1, 0, 0], [-0.6, 0.8, 0]):
        x = rs[:, None] * np.array(d)
        val = np.linalg.norm(stress_couple_layer(mesh7, vb, x, P2).coeffs[2], axis=1)
        ratio = val * (rs * (1 + wake_weight(P2.zeta_vec, x))) ** 1.5
        assert ratio.max() <= 1.01 * ratio[0]


def test_single_layer_steady_far_field_bounded(mesh7):
    dens = nodal_series(mesh7, (0,), seed=3)
    rs = np.array([8.0, 16, 32, 64])
    for d in ([0, 1, 0], [-1, 0, 0], [1, 0, 0]):
        x = rs[:, None] * np.array(d)
        val = np.linalg.norm(single_layer_velocity(mesh7, dens, x, P2).coeffs[2], axis=1)
        ratio = val * rs * (1 + wake_weight(P2.zeta_vec, x))
        assert ratio.max() < 1.5 * ratio.min()


def test_point_forcing_is_kernel_column():
    a = np.array([0.3, -1.0, 0.5])
    y0 = np.array([0.1, 0.2, -0.1])
    f = VolumeForcing.point(y0, FourierSeries.constant(a, 2))
    x = FAR[:4]
    out = volume_potential(f, x, P2)
    np.testing.assert_allclose(out.coeffs[2], oseen_steady(x - y0, P2) @ a, rtol=1e-13)
    with pytest.raises(ProximityError):
        volume_potential(VolumeForcing.point((3.0, 0, 0), FourierSeries.constant(a, 2)), [[1.0, 0, 0]], P2)


def test_volume_potential_moment_decays_faster():
    # ball of forcing nodes; subtracting the monopole gains a power of decay
    rng = np.random.default_rng(4)
    nodes = rng.uniform(-0.5, 0.5, (40, 3))
    w = rng.uniform(0.5, 1.0, 40)
    fc = np.zeros((5, 40, 3), complex)
    fc[2] = rng.normal(size=(40, 3))
    f = VolumeForcing(nodes, w, FourierSeries(fc), 1.0)
    rs = np.array([8.0, 16, 32, 64])
    x = rs[:, None] * np.array([0.0, 1.0, 0.0])
    full = volume_potential(f, x, P2).coeffs[2]
    mono = oseen_steady(x, P2) @ np.einsum("qi,q->i", fc[2].real, w)
    rem = np.linalg.norm(full - mono, axis=1) / np.linalg.norm(mono, axis=1)
    slope = np.polyfit(np.log(rs), np.log(rem), 1)[0]
    assert slope < -0.8


def test_proximity_errors(mesh7):
    dens = nodal_series(mesh7, (1,))
    with pytest.raises(ProximityError):
        single_layer_velocity(mesh7, dens, [[1.05, 0, 0]], P2)
    with pytest.raises(ProximityError):
        pressure_monopole_layer(mesh7, FourierSeries.zeros(2, (mesh7.n_nodes,)), [[0, 1.01, 0]])


SCENARIOS = {
    "steady": lambda p: S.steady_oseenlet(p),
    "periodic": lambda p: S.periodic_oseenlet(p),
    "source": lambda p: S.pulsating_source(p),
}


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_scenario_reproduction_high_order_rule(name):
    sc = SCENARIOS[name](P2)
    m = sc.mesh(2, "7point")
    bd = S.boundary_data(sc, m)
    v = represent_velocity_linear(m, bd, None, FAR, P2)
    p = represent_pressure_linear(m, bd, None, FAR, P2)
    v_ex, p_ex = S.velocity_modes(sc, FAR), S.pressure_modes(sc, FAR)
    assert np.abs(v.coeffs - v_ex.coeffs).max() / np.abs(v_ex.coeffs).max() < 1e-5
    assert np.abs(p.coeffs - p_ex.coeffs).max() / np.abs(p_ex.coeffs).max() < 1e-5
    assert v.is_real() and p.is_real()


def test_printed_pressure_signs_fail_on_source():
    sc = S.pulsating_source(P2)
    m = sc.mesh(2, "7point")
    bd = S.boundary_data(sc, m)
    p_ex = S.pressure_modes(sc, FAR)
    p = represent_pressure_linear(m, bd, None, FAR, P2, signs="printed")
    assert np.abs(p.coeffs - p_ex.coeffs).max() / np.abs(p_ex.coeffs).max() > 0.1


def test_scenario_refinement_convergence():
    sc = S.periodic_oseenlet(P2)
    errs = []
    for level in (1, 2, 3):
        m = sc.mesh(level)
        bd = S.boundary_data(sc, m)
        v = represent_velocity_linear(m, bd, None, FAR, P2)
        ex = S.velocity_modes(sc, FAR)
        errs.append(np.abs(v.coeffs - ex.coeffs).max() / np.abs(ex.coeffs).max())
    assert errs[0] / errs[1] >= 3 and errs[1] / errs[2] >= 3


def test_source_pressure_flux_rate_term_leads():
    # far away the E-layer of d_t(v_b.n) approaches q'(t) E(x - y0)
    sc = S.pulsating_source(P2)
    m = sc.mesh(3, "7point")
    bd = S.boundary_data(sc, m)
    x = np.array([[0.0, 40.0, 0.0], [0.0, 80.0, 0.0]])
    _, terms = represent_pressure_linear(m, bd, None, x, P2, return_terms=True)
    q = sc.singularities[0].strength
    ref = np.einsum("z,p->zp", 1j * q.frequencies * q.coeffs, 1 / (4 * np.pi * np.linalg.norm(x, axis=1)))
    rel = np.abs(terms["flux_rate"].coeffs - ref).max(axis=0) / np.abs(ref).max(axis=0)
    assert rel[0] < 0.02 and rel[1] < rel[0]


def test_nonlinear_zero_field_reduces_to_linear(mesh7):
    sc = S.periodic_oseenlet(P2)
    bd = S.boundary_data(sc, mesh7)
    x = FAR[:2]

    def zero(points):
        n = len(points)
        return FourierSeries.zeros(2, (n, 3)), FourierSeries.zeros(2, (n, 3, 3))

    bd0 = BoundaryData(FourierSeries.zeros(2, (mesh7.n_nodes, 3)), bd.traction)
    res = represent_velocity_nonlinear(mesh7, bd0, None, zero, x, P2, r_trunc=16,
                                       rule=dict(n_local=(4, 4, 6), n_shell=(6, 8), n_per=2))
    lin = represent_velocity_linear(mesh7, bd0, None, x, P2)
    np.testing.assert_allclose(res.convective.coeffs, lin.coeffs, atol=1e-15)
    np.testing.assert_allclose(res.divergence.coeffs, lin.coeffs, atol=1e-15)


def test_nonlinear_variants_agree_on_manufactured_field():
    params = KernelParams((1.0, 0, 0), 1.0, 2 * np.pi, 2)
    sc = S.Scenario((S.Singularity("steady_oseenlet", (0.1, -0.2, 0.15), (1, 0, 0)),
                     S.Singularity("periodic_oseenlet", (0, 0.1, 0), (0.3, 1, 0), 1)), params)
    mesh = sc.mesh(2, "7point")
    bd = S.boundary_data(sc, mesh)
    vf = S.vfield(sc)

    def forcing(nodes):
        v, g = vf(nodes)
        return fourier_product(v, g, "qi,qij->qj")

    x = np.array([[0.0, 6.0, 0.0]])
    ex = S.velocity_modes(sc, x).coeffs
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = represent_velocity_nonlinear(mesh, bd, None, vf, x, params, r_trunc=32, forcing_field=forcing,
                                           rule=dict(n_local=(8, 8, 12), n_shell=(16, 24), n_per=4))
    # v.grad v is supplied as forcing, so the convective variant is the linear representation
    assert np.abs(res.convective.coeffs - ex).max() / np.abs(ex).max() < 1e-5
    # the integration-by-parts variant differs only by volume quadrature and truncation error
    assert np.abs(res.divergence.coeffs - res.convective.coeffs).max() / np.abs(ex).max() < 1e-3


def test_nonlinear_truncation_warning(mesh7):
    sc = S.steady_oseenlet(P2)
    bd = S.boundary_data(sc, mesh7)
    with pytest.warns(UserWarning, match="truncation"):
        represent_velocity_nonlinear(mesh7, bd, None, S.vfield(sc), FAR[:1], P2, r_trunc=12,
                                     rule=dict(n_local=(4, 4, 6), n_shell=(6, 8), n_per=2))
