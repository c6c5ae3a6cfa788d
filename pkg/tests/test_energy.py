import math

import numpy as np
import pytest

from normsol import (
    DegenerateFiberError,
    FiberCoeffs,
    ProblemParams,
    RadialField,
    RegimeMismatchError,
    cell_inner,
    discrete_energy,
    evaluate,
    fiber_coeffs,
    fiber_h,
    fiber_hprime,
    fiber_hsecond,
    find_t0,
    gn_constant_2,
    gradient,
    make_grid,
    norms,
    resample_dilation,
)
from normsol.exponents import ParameterDomainError, derive_exponents

from oracles import gaussian_norms, smooth_bump_field

BENCH = ProblemParams(3, 2.5, 3.0, 1.0)


def test_evaluate_gaussian_values():
    g = make_grid(3, 20.0, 4000)
    u = RadialField(g, math.pi ** -0.75 * np.exp(-g.r ** 2 / 2))
    bd = evaluate(u, BENCH)
    assert bd.kin2 == pytest.approx(0.75, rel=1e-5)
    oracle = gaussian_norms(3, 2.5, 3.0)
    assert bd.kinq == pytest.approx(oracle["gradq"] / 2.5, rel=1e-4)
    assert bd.pot == pytest.approx(oracle["lp"] / 3.0, rel=1e-4)
    assert bd.total == pytest.approx(bd.kin2 + bd.kinq - bd.pot, abs=0)
    # Pohozaev recombination from raw norms
    dx = derive_exponents(BENCH)
    nd = norms(u, BENCH)
    P = nd["grad2"] + (1 + dx.delta_q) * nd["gradq"] - dx.delta_p * nd["lp"]
    assert bd.pohozaev == pytest.approx(P, rel=1e-13)


def test_evaluate_small_amplitude_quadratic_scaling():
    g = make_grid(3, 20.0, 2000)
    base = np.exp(-g.r ** 2 / 2)
    totals = {}
    for eps in (1e-4, 2e-4):
        bd = evaluate(RadialField(g, eps * base), BENCH)
        assert bd.pot < 1e-3 * (bd.kin2 + bd.kinq)
        totals[eps] = bd.total
    # leading order is quadratic; the q-term contributes an eps^(q-2) correction
    assert totals[2e-4] / totals[1e-4] == pytest.approx(4.0, rel=2e-2)


def _fd_directional(u, phi, params, eps_reg, s=1e-5):
    up = RadialField(u.grid, u.values + s * phi)
    um = RadialField(u.grid, u.values - s * phi)
    return (discrete_energy(up, params, eps_reg) - discrete_energy(um, params, eps_reg)) / (2 * s)


@pytest.mark.parametrize("q,p", [(1.8, 2.5), (2.5, 2.5), (2.5, 5.0)])
def test_gradient_matches_finite_differences(q, p):
    params = ProblemParams(3, q, p, 1.0)
    g = make_grid(3, 10.0, 600)
    rng = np.random.default_rng(int(10 * q + p))
    for _ in range(7):
        u = RadialField(g, smooth_bump_field(g, rng))
        phi = smooth_bump_field(g, rng) - smooth_bump_field(g, rng)
        eps = 1e-3 * max(np.max(np.abs(np.diff(u.values))) / g.h, 1.0)
        grad = gradient(u, params, eps)
        exact = cell_inner(g, grad, phi)
        fd = _fd_directional(u, phi, params, eps)
        assert fd == pytest.approx(exact, rel=1e-6)


def test_gradient_qterm_vanishes_on_constant():
    params = ProblemParams(3, 1.8, 2.5, 1.0)
    g = make_grid(3, 8.0, 256)
    u = RadialField(g, np.full(g.M, 1.3))
    grad = gradient(u, params, eps_reg=1e-6).values
    # interior: zero flux, so only the local p-term survives (weight-consistently)
    expected = -(g.w / g.cell_vols) * 1.3 ** (2.5 - 1.0)
    assert grad[1:-1] == pytest.approx(expected[1:-1], rel=1e-12)


def test_gradient_requires_eps_for_small_q():
    params = ProblemParams(3, 1.8, 2.5, 1.0)
    g = make_grid(3, 8.0, 128)
    u = RadialField(g, np.exp(-g.r ** 2))
    with pytest.raises(ParameterDomainError):
        gradient(u, params, eps_reg=0.0)


def test_fiber_identities_at_t_equal_1():
    g = make_grid(3, 16.0, 1500)
    u = RadialField(g, np.exp(-g.r ** 2 / 2))
    bd = evaluate(u, BENCH)
    coeffs = fiber_coeffs(u, BENCH)
    assert fiber_h(1.0, coeffs) == pytest.approx(bd.total, rel=1e-14)
    assert fiber_hprime(1.0, coeffs) == pytest.approx(bd.pohozaev, rel=1e-14)


def test_fiber_h_matches_resampled_energy():
    g = make_grid(3, 24.0, 3000)
    u = RadialField(g, np.exp(-g.r ** 2 / 2))
    coeffs = fiber_coeffs(u, BENCH)
    for t in (0.5, 0.8, 1.5, 2.0):
        resampled = evaluate(resample_dilation(u, t), BENCH).total
        assert fiber_h(t, coeffs) == pytest.approx(resampled, rel=0.01)


def test_fiber_degenerate_limits():
    sup = ProblemParams(3, 2.5, 5.0, 1.0)
    dx = derive_exponents(sup)
    e2 = 2.5 * (1 + dx.delta_q)
    e3 = 5.0 * dx.delta_p
    c_only = FiberCoeffs(A=0, B=0, C=1.0, e1=2, e2=e2, e3=e3, q=2.5, p=5.0)
    t = np.geomspace(0.1, 10, 50)
    h = fiber_h(t, c_only)
    assert np.all(np.diff(h) < 0)           # pure -C t^e3/p is decreasing
    no_c = FiberCoeffs(A=1, B=1, C=0, e1=2, e2=e2, e3=e3, q=2.5, p=5.0)
    assert np.all(np.diff(fiber_h(t, no_c)) > 0)   # positive powers increase
    with pytest.raises(DegenerateFiberError):
        find_t0(c_only, sup)
    with pytest.raises(DegenerateFiberError):
        find_t0(no_c, sup)


def test_fiber_hprime_single_sign_change():
    sup = ProblemParams(3, 2.5, 5.0, 1.0)
    dx = derive_exponents(sup)
    coeffs = FiberCoeffs(A=1, B=1, C=1, e1=2, e2=2.5 * (1 + dx.delta_q),
                         e3=5.0 * dx.delta_p, q=2.5, p=5.0)
    assert coeffs.e2 == pytest.approx(3.25, abs=1e-13)
    assert coeffs.e3 == pytest.approx(4.5, abs=1e-13)
    t = np.geomspace(1e-4, 1e4, 400001)
    signs = np.sign(fiber_hprime(t, coeffs))
    changes = np.count_nonzero(np.diff(signs))
    assert changes == 1
    # two-stage dense argmax oracle: coarse bucket, then a fine local grid
    t0 = find_t0(coeffs, sup)
    t_coarse = t[np.argmax(fiber_h(t, coeffs))]
    t_fine = np.linspace(0.99 * t_coarse, 1.01 * t_coarse, 400001)
    t_dense = t_fine[np.argmax(fiber_h(t_fine, coeffs))]
    assert t0 == pytest.approx(t_dense, rel=1e-6)
    assert fiber_hsecond(t0, coeffs) < 0


def test_find_t0_dichotomy_examples():
    sup = ProblemParams(3, 2.5, 5.0, 1.0)
    g = make_grid(3, 12.0, 1200)
    u = RadialField(g, np.exp(-g.r ** 2 / 2))
    coeffs = fiber_coeffs(u, sup)
    t0 = find_t0(coeffs, sup)
    # project, then the maximizer of the projected field sits at 1
    proj = resample_dilation(u, t0)
    t0_again = find_t0(fiber_coeffs(proj, sup), sup)
    assert t0_again == pytest.approx(1.0, abs=0.01)
    nd = norms(proj, sup)
    P = fiber_hprime(1.0, fiber_coeffs(proj, sup))
    assert abs(P) <= 0.01 * (nd["grad2"] + nd["gradq"])
    # sign dichotomy at the original field
    P_orig = fiber_hprime(1.0, coeffs)
    assert math.copysign(1.0, 1.0 - t0) == math.copysign(1.0, -P_orig)


def test_find_t0_regime_error_on_subcritical_ordering():
    dx = derive_exponents(BENCH)
    coeffs = FiberCoeffs(A=1, B=1, C=1, e1=2, e2=2.5 * (1 + dx.delta_q),
                         e3=3.0 * dx.delta_p, q=2.5, p=3.0)
    with pytest.raises(RegimeMismatchError):
        find_t0(coeffs, BENCH)


def test_fiber_dichotomy_random_battery():
    sup = ProblemParams(3, 2.5, 5.0, 1.0)
    dx = derive_exponents(sup)
    e2, e3 = 2.5 * (1 + dx.delta_q), 5.0 * dx.delta_p
    rng = np.random.default_rng(42)
    for _ in range(100):
        A, B, C = rng.uniform(0.05, 20, 3)
        coeffs = FiberCoeffs(A=A, B=B, C=C, e1=2.0, e2=e2, e3=e3, q=2.5, p=5.0)
        t0 = find_t0(coeffs, sup)
        # stationarity, normalized by the size of the cancelling terms
        scale = max(A * t0 ** 2, (e2 / 2.5) * B * t0 ** e2, (e3 / 5.0) * C * t0 ** e3)
        assert abs(t0 * fiber_hprime(t0, coeffs)) <= 1e-10 * scale
        assert fiber_hsecond(t0, coeffs) < 0
        P = fiber_hprime(1.0, coeffs)
        if P != 0:
            assert math.copysign(1.0, 1.0 - t0) == math.copysign(1.0, -P)


def test_gn_upper_bound_battery(wp_33):
    params = ProblemParams(3, 2.5, 3.0, 1.0)
    C = gn_constant_2(3, 3.0, wp_33.norm_bundle)
    dx = derive_exponents(params)
    g = make_grid(3, 20.0, 2000)
    rng = np.random.default_rng(5)
    for _ in range(50):
        u = RadialField(g, smooth_bump_field(g, rng))
        nd = norms(u, params)
        ratio = nd["lp"] ** (1 / 3.0) / (
            C * nd["grad2"] ** (dx.delta_p / 2) * nd["mass2"] ** ((1 - dx.delta_p) / 2))
        assert ratio <= 1.0 + 1e-2
