import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oseen_tp.core import KernelParams, wake_weight
from oseen_tp.fundsol import (ExcludedModeError, ModeKernelCache, SingularityError, drift_helmholtz_K,
                              full_velocity, full_velocity_modes, grad_P, hess_P, laplace_E, mode_kernel,
                              mode_velocity, mode_velocity_grad, oseen_steady, oseen_steady_grad,
                              periodic_velocity, periodic_velocity_modes, pressure_P, stokeslet)

P1 = KernelParams((1.0, 0.0, 0.0), 1.0, 1.0, 4)
RNG = np.random.default_rng(7)


def rand_points(n, r0=1.0, r1=8.0, seed=0):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * rng.uniform(r0, r1, (n, 1))


def fd_grad(f, x, h=1e-5):
    """Central-difference gradient, ``out[m, ...] = d_m f``."""
    return np.stack([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(3)])


# --- Laplace / Stokes ---------------------------------------------------------

def test_laplace_E_values():
    assert laplace_E(np.array([1.0, 0, 0])) == pytest.approx(1 / (4 * math.pi))
    assert laplace_E(np.array([1.0, 0, 0])) == pytest.approx(0.0795775, abs=5e-8)
    assert laplace_E(np.array([0, 2.0, 0])) == pytest.approx(1 / (8 * math.pi))
    with pytest.raises(SingularityError):
        laplace_E(np.zeros(3))


def test_laplace_E_harmonic():
    h = 1e-3
    for x in rand_points(5, 1, 3):
        lap = sum(laplace_E(x + h * e) + laplace_E(x - h * e) - 2 * laplace_E(x) for e in np.eye(3)) / h ** 2
        assert abs(lap) < 1e-5 * laplace_E(x)


def test_pressure_kernel_and_derivatives():
    np.testing.assert_allclose(pressure_P(np.array([0, 0, 2.0])), [0, 0, 1 / (16 * math.pi)])
    assert pressure_P(np.array([0, 0, 2.0]))[2] == pytest.approx(0.0198944, abs=5e-8)
    for x in rand_points(10, 1, 5, seed=1):
        fd = -fd_grad(laplace_E, x, 1e-6)
        np.testing.assert_allclose(pressure_P(x), fd, rtol=1e-8)
        np.testing.assert_allclose(grad_P(x), fd_grad(pressure_P, x), rtol=1e-7, atol=1e-12)
        np.testing.assert_allclose(hess_P(x), fd_grad(grad_P, x), rtol=1e-6, atol=1e-12)
        assert abs(np.trace(grad_P(x))) < 1e-15
    with pytest.raises(SingularityError):
        pressure_P(np.zeros(3))


def test_stokeslet():
    G = stokeslet(np.array([1.0, 0, 0]), 1.0)
    np.testing.assert_allclose(np.diag(G), [1 / (4 * math.pi), 1 / (8 * math.pi), 1 / (8 * math.pi)])
    assert np.abs(G - np.diag(np.diag(G))).max() == 0
    x = RNG.normal(size=3)
    np.testing.assert_allclose(stokeslet(x), stokeslet(x).T)
    np.testing.assert_allclose(stokeslet(2 * x), stokeslet(x) / 2)


# --- steady Oseen kernel -------------------------------------------------------

def test_oseen_steady_on_wake_axis():
    G = oseen_steady(np.array([-1.0, 0, 0]), P1)
    expected = (np.eye(3) + np.diag([1.0, 0, 0])) / (8 * math.pi)
    np.testing.assert_allclose(G, expected, atol=1e-15)


def test_oseen_steady_upstream_values():
    G = oseen_steady(np.array([1.0, 0, 0]), P1)
    e = math.exp(-1)
    assert G[0, 0] == pytest.approx((1 - e) / (4 * math.pi), rel=1e-13)
    assert G[1, 1] == pytest.approx((3 * e - 1) / (8 * math.pi), rel=1e-13)
    # decimal forms of the two closed-form expressions
    assert G[0, 0] == pytest.approx(0.0503026, abs=5e-8)
    assert G[1, 1] == pytest.approx(0.0041236, abs=5e-8)


def test_oseen_to_stokes_limit():
    p = P1.with_(zeta=(1e-6, 0, 0))
    for x in rand_points(10, 1, 1, seed=2):
        rel = np.abs(oseen_steady(x, p) - stokeslet(x)).max() / np.abs(stokeslet(x)).max()
        assert rel < 1e-5


def test_oseen_continuous_across_series_cut():
    # s/nu crosses the series/closed-form switch near the wake axis
    p = P1
    # s = 0.5 at t = 1.5 on this line
    xs = np.array([[-2.0, t, 0.0] for t in np.linspace(1.48, 1.52, 41)])
    G = oseen_steady(xs, p)
    # a jump at the switch would make one second difference stand out
    d2 = np.abs(np.diff(G, 2, axis=0)).max(axis=(1, 2))
    assert d2.max() < 1.05 * np.median(d2)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-6, 6), min_size=3, max_size=3), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_oseen_symmetry_and_reflection(x, z):
    x, z = np.array(x), np.array(z)
    if np.linalg.norm(x) < 0.5 or np.linalg.norm(z) < 0.1:
        return
    p = KernelParams(tuple(z), 0.8, 1.0, 2)
    G = oseen_steady(x, p)
    np.testing.assert_allclose(G, G.T, atol=1e-15)
    np.testing.assert_allclose(G, oseen_steady(-x, p.with_(zeta=tuple(-z))), rtol=1e-12, atol=1e-16)


def test_oseen_gradient_matches_fd():
    p = KernelParams((0.6, -0.3, 0.8), 0.7, 1.0, 2)
    for x in rand_points(10, 0.5, 6, seed=3):
        np.testing.assert_allclose(oseen_steady_grad(x, p), fd_grad(lambda y: oseen_steady(y, p), x, 1e-5),
                                   rtol=1e-6, atol=1e-11)


def test_oseen_decay_ratio_bounded():
    pts = np.concatenate([r * rand_points(16, 1, 1, seed=4) for r in (2, 8, 32, 64)])
    ratio = np.abs(oseen_steady(pts, P1)).max(axis=(1, 2)) * np.linalg.norm(pts, axis=1) * \
        (1 + wake_weight(P1.zeta_vec, pts))
    assert ratio.max() < 1.0 and ratio.min() > 1e-3


# --- drift-Helmholtz kernel -----------------------------------------------------

def test_K_examples():
    assert drift_helmholtz_K(np.array([-1.0, 0, 0]), P1, 0.0) == pytest.approx(1 / (4 * math.pi))
    p0 = P1.with_(zeta=(0, 0, 0))
    v = drift_helmholtz_K(np.array([1.0, 0, 0]), p0, 2 * math.pi)
    assert abs(v) == pytest.approx(math.exp(-math.sqrt(math.pi)) / (4 * math.pi), rel=1e-12)
    x = RNG.normal(size=3)
    assert drift_helmholtz_K(x, P1, -3.0) == pytest.approx(np.conj(drift_helmholtz_K(x, P1, 3.0)))


def test_K_lambda0_equals_first_oseen_term():
    for x in rand_points(10, 0.5, 8, seed=5):
        s = wake_weight(P1.zeta_vec, x)
        first = math.exp(-s / P1.nu) / (4 * math.pi * P1.nu * np.linalg.norm(x))
        assert drift_helmholtz_K(x, P1, 0.0) == pytest.approx(first, rel=1e-12)


# --- mode kernels -----------------------------------------------------------------

def test_mode_zero_excluded():
    with pytest.raises(ExcludedModeError):
        mode_velocity(np.array([1.0, 0, 0]), P1, 0)
    with pytest.raises(SingularityError):
        mode_velocity(np.zeros(3), P1, 1)


def test_mode_kernel_conjugate_symmetry():
    x = rand_points(6, 1, 5, seed=6)
    for k in (1, 2):
        np.testing.assert_allclose(mode_velocity(x, P1, -k), np.conj(mode_velocity(x, P1, k)), atol=1e-14)
        np.testing.assert_allclose(mode_kernel(x, P1, -k), np.conj(mode_kernel(x, P1, k)))


def test_mode_kernel_symmetric_matrix():
    x = rand_points(6, 1, 5, seed=7)
    G = mode_velocity(x, P1, 1)
    np.testing.assert_allclose(G, np.swapaxes(G, -1, -2), atol=1e-15)


def test_mode_kernel_small_zeta_matches_closed_form():
    # the line-integral path (zeta != 0) against the zeta = 0 closed form
    p0 = P1.with_(zeta=(0, 0, 0))
    p_eps = P1.with_(zeta=(1e-6, 0, 0))
    x = rand_points(10, 1, 4, seed=8)
    G0, G1 = mode_velocity(x, p0, 1), mode_velocity(x, p_eps, 1)
    assert np.abs(G1 - G0).max() / np.abs(G0).max() < 1e-4


def _oracle_cases():
    sys.path.insert(0, str(Path(__file__).parent / "oracles"))
    from mode_kernel_quad import CASES
    return CASES


# Frozen output of tests/oracles/mode_kernel_quad.py (sympy Hessians + QUADPACK
# Fourier-weight integrals along the real half-line, no contour rotation).
QUAD_ORACLE = [
    [[0.005990222975962 - 0.012331884360374j, 0.008405020944819 - 0.006401962179686j,
      -0.0050430127469 + 0.003841177307812j],
     [0.008405020944819 - 0.006401962179686j, -0.002710856753017 - 0.003829985667437j,
      -0.003042196756405 + 0.002059731549119j],
     [-0.0050430127469 + 0.003841177307812j, -0.003042196756405 + 0.002059731549119j,
      -0.005955866623044 - 0.001632938829886j]],
    [[-0.000594807197202 - 0.005620243078975j, -0.001776283361383 + 0.004413735225334j,
      -0.000507509423895 + 0.001261067207238j],
     [-0.001776283361383 + 0.004413735225334j, -0.004200472469539 + 0.000563476328427j,
      0.000194131926625 - 0.000651172903379j],
     [-0.000507509423895 + 0.001261067207238j, 0.000194131926625 - 0.000651172903379j,
      -0.00482446795661 + 0.002656531645445j]],
    [[5.7592822068e-05 + 0.000545306667059j, 6.7855078135e-05 + 0.000178911611409j,
      -3.7320080725e-05 - 9.840143028e-05j],
     [6.7855078135e-05 + 0.000178911611409j, 2.7345769739e-05 - 0.000648938910849j,
      2.7737663705e-05 + 0.000667890954014j],
     [-3.7320080725e-05 - 9.840143028e-05j, 2.7737663705e-05 + 0.000667890954014j,
      6.2522192341e-05 + 0.000198068245051j]],
    [[0.000877431875274 - 0.002830743331689j, 0.000933261846654 - 0.002659822031396j, 0j],
     [0.000933261846654 - 0.002659822031396j, -0.000787443075689 + 0.00077494024439j, 0j],
     [0j, 0j, -0.001192658314913 + 0.002182302919164j]],
    [[-0.000492248901898 - 0.001256590165518j, 0.000122300108962 - 0.000503670208967j,
      0.00034591172654 + 0.000984480397288j],
     [0.000122300108962 - 0.000503670208967j, 0.000301254599241 + 0.001652102605432j,
      -2.8510329839e-05 + 0.000178996657906j],
     [0.00034591172654 + 0.000984480397288j, -2.8510329839e-05 + 0.000178996657906j,
      0.000100461545356 + 0.001386087608369j]],
]


@pytest.mark.parametrize("idx", range(len(QUAD_ORACLE)))
def test_mode_kernel_matches_frozen_quadrature_oracle(idx):
    x, zeta, nu, period, k = _oracle_cases()[idx]
    G = mode_velocity(np.array(x), KernelParams(zeta, nu, period, 4), k)
    ref = np.array(QUAD_ORACLE[idx])
    assert np.abs(G - ref).max() / np.abs(ref).max() < 1e-6


def test_mode_gradient_matches_fd():
    p = KernelParams((0.5, 0.5, 0.0), 0.7, 2.0, 2)
    for x in rand_points(6, 0.8, 5, seed=9):
        G, dG = mode_velocity_grad(x, p, 1)
        fd = fd_grad(lambda y: mode_velocity(y, p, 1), x, 1e-5)
        assert np.abs(dG - fd).max() < 1e-7 * np.abs(dG).max()
        np.testing.assert_allclose(G, mode_velocity(x, p, 1))


def test_mode_kernel_strong_drift_converges():
    # slow wake decay of K: the panel range has to follow the wake rate
    p = KernelParams((3.0, 0.0, 0.0), 0.1, 1.0, 2)
    x = np.array([[-2.0, 0.3, 0.1], [1.0, 0.5, 0.0]])
    from oseen_tp import verify
    for xp in x:
        res, div = verify.pde_residual(verify.kernel_pair(p, 1), 1, xp, p)
        assert res < 1e-4 and div < 1e-4


def test_mode_kernel_cache():
    cache = ModeKernelCache(P1)
    x = rand_points(4, 1, 3, seed=10)
    a = cache.kernel(x, 1)
    assert cache.kernel(x.copy(), 1) is a
    np.testing.assert_allclose(a, mode_kernel(x, P1, 1))
    assert cache.r_tail(1) > cache.r_tail(2) > cache.r_tail(3)


# --- assembled kernel ---------------------------------------------------------------

def test_periodic_velocity_periodicity_and_mean():
    x = np.array([0.3, 2.0, -1.0])
    p = P1.with_(n_modes=1)
    np.testing.assert_allclose(periodic_velocity(0.0, x, p), periodic_velocity(p.period, x, p), atol=1e-15)
    t = p.period * np.arange(16) / 16
    assert np.abs(periodic_velocity(t, x, p).mean(axis=0)).max() < 1e-15
    assert periodic_velocity_modes(x, p).is_real()
    full = full_velocity(t, x, P1)
    np.testing.assert_allclose(full.mean(axis=0), oseen_steady(x, P1), atol=1e-15)


def test_full_velocity_modes_grad_consistent():
    x = rand_points(3, 1, 3, seed=11)
    fs_, fg = full_velocity_modes(x, P1.with_(n_modes=2), grad=True)
    np.testing.assert_allclose(fg.coeffs[2], oseen_steady_grad(x, P1))
    np.testing.assert_allclose(fg.coeffs[3], mode_velocity_grad(x, P1, 1)[1])


def test_mode_truncation_tail_decays_like_one_over_n():
    # G_k ~ grad grad E / (i lam_k) for large k, so the L2(T) tail after N modes is ~ N^{-1/2}
    x = np.array([0.0, 4.0, 0.0])
    changes = []
    for N in (8, 32):
        a = periodic_velocity_modes(x, P1.with_(n_modes=N)).truncated(N + 4)
        b = periodic_velocity_modes(x, P1.with_(n_modes=N + 4))
        changes.append(np.linalg.norm(b.coeffs - a.coeffs) / np.linalg.norm(b.coeffs))
    assert changes[1] < changes[0]
    # k |G_k| tends to a constant
    kg = [k * np.abs(mode_velocity(x, P1, k)).max() for k in (16, 32, 64)]
    assert max(kg) / min(kg) < 1.01


@pytest.mark.xfail(strict=True, reason="mode coefficients decay only like 1/k; pointwise N -> N+4 "
                                       "changes stay at the percent level")
def test_mode_truncation_pointwise_change_below_1e6():
    x = np.array([0.0, 4.0, 0.0])
    a = full_velocity(0.3, x, P1.with_(n_modes=16))
    b = full_velocity(0.3, x, P1.with_(n_modes=20))
    assert np.abs(a - b).max() / np.abs(b).max() < 1e-6
