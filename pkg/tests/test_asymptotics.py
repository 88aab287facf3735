import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oseen_tp import asymptotics as As
from oseen_tp import scenarios as S
from oseen_tp.core import FourierSeries, KernelParams, Ray, wake_weight
from oseen_tp.fundsol import laplace_E, mode_kernel, periodic_velocity_modes
from oseen_tp.potentials import BoundaryData

P2 = KernelParams((1.0, 0.0, 0.0), 1.0, 1.0, 2)
RAYS = [Ray.geometric(d, 8, 64, label=l) for d, l in (((0, 1, 0), "e2"), ((1, 1, 0), "diag"),
                                                       ((-1, 0.2, 0), "wake"))]


@pytest.fixture(scope="module")
def source():
    sc = S.pulsating_source(P2)
    m = sc.mesh(2, "7point")
    bd = S.boundary_data(sc, m)
    return sc, m, bd, As.expansion_coefficients(m, bd, None, P2)


# --- functionals ------------------------------------------------------------

def test_source_flux_and_moment(source):
    sc, m, bd, co = source
    q = sc.singularities[0].strength
    # the normal points out of the fluid, so the flux is -q
    np.testing.assert_allclose(co.Phi.coeffs, -q.coeffs, atol=1e-5)
    assert co.Phi.is_real()


def test_source_moment_on_centered_sphere():
    q = FourierSeries.cos_sin(0.0, [1.0], n_modes=2)
    y0 = (0.3, 0.1, 0.0)
    sc = S.Scenario((S.Singularity("pulsating_source", y0, q),), P2, body_center=y0)
    m = sc.mesh(2, "7point")
    psi = As.moment_Psi(m, S.boundary_data(sc, m).v_b)
    np.testing.assert_allclose(psi.coeffs, -np.einsum("z,i->zi", q.coeffs, y0), atol=1e-7)


@pytest.mark.parametrize("make", [S.steady_oseenlet, S.periodic_oseenlet])
def test_oseenlet_flux_vanishes(make):
    sc = make(P2)
    m = sc.mesh(2, "7point")
    co = As.expansion_coefficients(m, S.boundary_data(sc, m), None, P2)
    assert np.abs(co.Phi.coeffs).max() < 1e-8


def test_moment_of_divergence_free_trace_is_body_integral():
    # int_S (v.n) y dS = -int_body v dy for smooth divergence-free v (n points into the body)
    from oseen_tp.core import sphere_mesh
    m = sphere_mesh(refinement_level=3, rule="7point")
    c = np.array([0.2, -1.0, 0.5])
    rot = np.cross([0.0, 0.0, 1.0], m.nodes)
    vol = m.signed_volume
    for field, body_int in ((np.tile(c, (m.n_nodes, 1)), -vol * c), (rot, np.zeros(3))):
        vb = FourierSeries.constant(field, 2)
        assert abs(As.flux_Phi(m, vb).mode(0)) < 1e-12
        np.testing.assert_allclose(As.moment_Psi(m, vb).mode(0), body_int, atol=1e-12)


def test_coeff_F_variants(source):
    sc, m, bd, co = source
    flux = np.einsum("zqi,qi->zq", bd.v_b.coeffs, m.fluid_normals)
    diff = co.F_full.coeffs - co.F_lin.coeffs
    # -int (v_b.n) v_b as a time product
    n = P2.n_modes
    ref = np.zeros_like(diff)
    for k in range(-n, n + 1):
        for j in range(-n, n + 1):
            if abs(k - j) <= n:
                ref[k + n] -= m.integrate(flux[j + n][:, None] * bd.v_b.coeffs[k - j + n], axis=0)
    np.testing.assert_allclose(diff, ref, atol=1e-14)
    z = FourierSeries.zeros(2, (m.n_nodes, 3))
    assert np.all(As.coeff_F(m, BoundaryData(z, z), None, P2).coeffs == 0)
    with pytest.raises(ValueError):
        As.coeff_F(m, BoundaryData(z), None, P2)


# --- leading terms ----------------------------------------------------------

def test_zero_coefficients_give_zero():
    co = As.ExpansionCoefficients.zeros(2)
    x = np.array([[5.0, 1.0, 0.0]])
    for conv in As.CONVENTIONS:
        assert np.all(As.leading_velocity_modes(co, x, P2, conv).coeffs == 0)
        assert np.all(As.leading_pressure_modes(co, x, P2, conv).coeffs == 0)


def test_split_consistency(source):
    *_, co = source
    x = np.array([[0, 5.0, 1], [-4, 3, 2], [9, -1, 0]])
    for conv in As.CONVENTIONS:
        full = As.leading_velocity_modes(co, x, P2, conv).coeffs
        parts = sum(As.leading_velocity_modes(co, x, P2, conv, part=p).coeffs for p in ("steady", "periodic"))
        np.testing.assert_allclose(full, parts, atol=1e-16)


def test_oseenlet_leading_is_force_convolution():
    sc = S.periodic_oseenlet(P2)
    m = sc.mesh(2, "7point")
    co = As.expansion_coefficients(m, S.boundary_data(sc, m), None, P2)
    # Phi = 0; Psi is the body integral of v and is nonzero, so drop it to isolate the force term
    x = np.array([[0.0, 30.0, 0.0]])
    a = As.leading_velocity_modes(co, x, P2, "thm_lin", include_psi=False).coeffs
    b = As.leading_velocity_modes(co, x, P2, "thm_nonlin", include_psi=False).coeffs
    np.testing.assert_allclose(a, b, atol=1e-6 * np.abs(a).max())
    F = co.F_lin.coeffs
    for k in (-1, 0, 1):
        np.testing.assert_allclose(a[k + 2, 0], mode_kernel(x, P2, k)[0] @ F[k + 2], rtol=1e-6)


def _periodic_exponents(sc, co, conv, include_psi=True):
    out = []
    for ray in RAYS:
        tab = As.remainder_samples(lambda x: S.velocity_modes(sc, x),
                                   lambda x: As.leading_velocity_modes(co, x, P2, conv, include_psi=include_psi), ray)
        out.append(As.fit_table(tab).exponent)
    return np.array(out)


def test_sign_convention_discriminated_on_source(source):
    sc, m, bd, co = source
    lin = _periodic_exponents(sc, co, "thm_lin")
    nonlin = _periodic_exponents(sc, co, "thm_nonlin")
    # exactly one convention removes the flux term from the periodic remainder
    assert np.all(lin < -3.7)
    assert np.all(np.abs(nonlin + 2) < 0.15)


def test_psi_ablation_degrades_periodic_remainder(source):
    sc, m, bd, co = source
    assert np.all(np.abs(_periodic_exponents(sc, co, "thm_lin", include_psi=False) + 3) < 0.15)


def test_source_pressure_leading_term(source):
    sc, m, bd, co = source
    exps = {}
    for conv in As.CONVENTIONS:
        tab = As.remainder_samples(lambda x: S.pressure_modes(sc, x),
                                   lambda x: As.leading_pressure_modes(co, x, P2, conv), RAYS[0])
        exps[conv] = As.fit_table(tab).exponent
    assert exps["derived"] < -2.8
    assert abs(exps["thm_lin"] + 1) < 0.1 and abs(exps["thm_nonlin"] + 1) < 0.1
    # the derived leading term carries q'(t) E(x)
    x = np.array([[0.0, 40.0, 0.0]])
    lead = As.leading_pressure_modes(co, x, P2, "derived", part="periodic").coeffs[:, 0]
    q = sc.singularities[0].strength
    ref = 1j * q.frequencies * q.coeffs * laplace_E(x)[0]
    assert np.abs(lead - ref).max() / np.abs(ref).max() < 0.05


def test_constant_flux_pressure_has_no_E_term():
    td, cf = S.make_flux_pair(P2)
    m = cf.mesh(2, "7point")
    co = As.expansion_coefficients(m, S.boundary_data(cf, m), None, P2)
    assert np.abs(co.Phi.purely_periodic().coeffs).max() < 1e-8
    x = np.array([[0.0, 10.0, 0.0]])
    with_e = As.leading_pressure_modes(co, x, P2, "thm_lin").coeffs
    co_noE = As.ExpansionCoefficients(co.Phi.steady(), co.Psi, co.F_lin, co.F_full)
    np.testing.assert_allclose(with_e, As.leading_pressure_modes(co_noE, x, P2, "thm_lin").coeffs,
                               atol=1e-8 * np.abs(with_e).max())


def test_remainder_of_field_against_itself_is_zero(source):
    sc, *_ = source
    tab = As.remainder_samples(lambda x: S.velocity_modes(sc, x), lambda x: S.velocity_modes(sc, x), RAYS[0])
    assert np.all(tab.steady == 0) and np.all(tab.periodic == 0)


def test_steady_remainder_ratio_bounded():
    sc = S.steady_oseenlet(P2)
    m = sc.mesh(2, "7point")
    co = As.expansion_coefficients(m, S.boundary_data(sc, m), None, P2)
    for ray in RAYS:
        tab = As.remainder_samples(lambda x: S.velocity_modes(sc, x),
                                   lambda x: As.leading_velocity_modes(co, x, P2), ray)
        ratio = tab.steady / (tab.radii * (1 + wake_weight(P2.zeta_vec, tab.points))) ** -1.5
        assert ratio.max() / ratio.min() < 2


# --- fits --------------------------------------------------------------------

def test_fit_exact_power_law():
    r = 4 * 2.0 ** np.arange(7)
    f = As.fit_decay(r, 3.0 * r ** -2.0)
    assert f.exponent == pytest.approx(-2.0, abs=1e-9)
    assert f.intercept == pytest.approx(math.log(3.0), abs=1e-9)
    assert f.n_samples == 5


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_fit_noisy_power_law(seed):
    rng = np.random.default_rng(seed)
    r = 4 * 2.0 ** np.arange(9)
    v = 2.0 * r ** -2.0 * (1 + 0.1 * rng.uniform(-1, 1, r.size))
    assert abs(As.fit_decay(r, v).exponent + 2) < 0.1


def test_fit_drops_nonpositive_and_rejects_short():
    r = 4 * 2.0 ** np.arange(8)
    v = r ** -3.0
    v[5] = 0.0
    with pytest.warns(UserWarning):
        f = As.fit_decay(r, v)
    assert f.n_samples == 5 and f.exponent == pytest.approx(-3.0)
    with pytest.raises(As.FitError):
        As.fit_decay(r[:6], r[:6] ** -1.0)


def test_anisotropic_fit_recovers_two_exponents():
    rng = np.random.default_rng(0)
    d = rng.normal(size=(60, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    x = d * rng.uniform(4, 64, (60, 1))
    v = np.linalg.norm(x, axis=1) ** -1.0 * (1 + wake_weight(P2.zeta_vec, x)) ** -1.0
    p, q, res = As.fit_decay_anisotropic(x, v, P2.zeta_vec)
    assert p == pytest.approx(-1.0, abs=1e-9) and q == pytest.approx(-1.0, abs=1e-9)


def test_periodic_kernel_l2_decay_exponent():
    for d in ((0, 1, 0), (-1, 0, 0), (1, 1, 0), (0.3, -0.5, 0.8)):
        ray = Ray.geometric(d, 4, 64)
        tab = As.remainder_samples(lambda x: periodic_velocity_modes(x, P2.with_(n_modes=4)), None, ray, norm="l2")
        assert abs(As.fit_table(tab, drop=0).exponent + 3) < 0.15


# --- convolution bounds --------------------------------------------------------

def test_conv_hypotheses_enforced():
    with pytest.raises(ValueError):
        As.verify_conv_bounds("ste1", P2, A=2.0, B=0.5)
    with pytest.raises(ValueError):
        As.verify_conv_bounds("ste3", P2, A=3.0, B=1.0)
    with pytest.raises(ValueError):
        As.verify_conv_bounds("pres", P2, A=3.0, B=2.0)
    with pytest.raises(ValueError):
        As.verify_conv_bounds("nope", P2)
    with pytest.raises(ValueError):
        As.verify_conv_bounds("ste1", P2.with_(zeta=(0, 0, 0)))


def test_conv_bound_shapes():
    x = np.array([[10.0, 0, 0], [-10.0, 0, 0], [0, 10.0, 0]])
    b = As.conv_bound("ste1", x, P2.zeta_vec, 3, 1)
    np.testing.assert_allclose(b, 1 / (11 * (1 + wake_weight(P2.zeta_vec, x))))
    assert As.conv_bound("ste3", x, P2.zeta_vec, 2, 1.5)[1] == pytest.approx(11 ** -1.5 * math.log(10))


def test_conv_case1_stable_small_rule():
    rule = dict(n_local=(8, 8, 12), n_shell=(12, 16), n_per=4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = As.verify_conv_bounds("ste1", P2, radii=(4.0, 16.0), domains=(32.0, 64.0), rule=rule)
    assert np.all(np.isfinite(rep.ratios))
    assert rep.variation < 1.5
