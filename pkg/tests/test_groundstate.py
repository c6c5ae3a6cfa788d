import json
import math

import numpy as np
import pytest

from normsol import (
    DependencyError,
    ParameterDomainError,
    ProblemParams,
    ResolutionError,
    TruncationError,
    build_phi1,
    derive_exponents,
    gn_constant_2,
    gn_constant_q,
    make_grid,
    norms,
    solve_wp,
    solve_wpq,
)
from normsol.groundstate import ExtremalProfile

from oracles import rk4_townes_mass2


def _identity_triple(profile, p):
    nd = profile.norms
    return nd["grad2"], nd["mass2"], 2.0 * nd["lp"] / p


@pytest.mark.parametrize("case", ["townes", "wp_33"])
def test_wp_identity_suite(case, request):
    profile = request.getfixturevalue(case)
    p = 4.0 if case == "townes" else 3.0
    a, b, c = _identity_triple(profile, p)
    assert a == pytest.approx(b, rel=0.01)
    assert b == pytest.approx(c, rel=0.01)
    assert a == pytest.approx(c, rel=0.01)
    assert profile.ode_residual <= 1e-4


def test_townes_mass_against_independent_oracle(townes):
    oracle = rk4_townes_mass2()
    assert oracle == pytest.approx(11.70, rel=0.01)        # known critical value
    assert townes.norms["mass2"] == pytest.approx(oracle, rel=1e-3)
    assert townes.norms["mass2"] == pytest.approx(11.70, rel=0.01)


def test_wp_profile_positive_decreasing(townes):
    vals = townes.field.values
    live = vals > 1e-9
    assert np.all(vals[live] > 0)
    core = vals[: np.argmax(~live)] if np.any(~live) else vals
    assert np.all(np.diff(core) <= 1e-12)


def test_wp_gn_near_equality(townes, wp_33):
    for profile, (N, p) in ((townes, (2, 4.0)), (wp_33, (3, 3.0))):
        C = gn_constant_2(N, p, profile.norm_bundle)
        dp = N * (p - 2) / (2 * p)
        nd = profile.norms
        ratio = nd["lp"] ** (1 / p) / (C * nd["grad2"] ** (dp / 2) * nd["mass2"] ** ((1 - dp) / 2))
        assert 0.995 <= ratio <= 1.0001


def test_wp_exponential_tail_slope(townes):
    # slope of log W over the last resolved decade is <= -sqrt(alpha)(1 - 5%)
    vals = townes.field.values
    r = townes.field.grid.r
    live = vals > 1e-9
    top = vals[live].min() * 10.0
    decade = live & (vals <= top)
    slope = np.polyfit(r[decade], np.log(vals[decade]), 1)[0]
    assert slope <= -1.0 * 0.95  # alpha = 1 for the 2-D quartic case


def test_wp_shoot_value_insensitive_to_tolerance():
    g = make_grid(2, 25.0, 1000)
    a = solve_wp(2, 4.0, g, rtol=1e-9)
    b = solve_wp(2, 4.0, g, rtol=5e-10)
    assert a.shoot_value == pytest.approx(b.shoot_value, rel=1e-3)
    assert a.shoot_value == pytest.approx(2.2062, rel=1e-3)


def test_wp_domain_and_truncation_errors():
    g = make_grid(3, 30.0, 1000)
    with pytest.raises(ParameterDomainError):
        solve_wp(3, 6.5, g)   # above 2* = 6
    with pytest.raises(TruncationError):
        solve_wp(3, 3.0, make_grid(3, 2.0, 64))


def test_wpq_residual_and_multiplier(wpq_benchmark):
    prof = wpq_benchmark
    assert prof.ode_residual <= 1e-3
    # zeta equals the norm quadrature by the fixed-point construction
    quad = prof.norms["gradq"] + prof.norms["mass2"]
    assert abs(prof.zeta - quad) / prof.zeta <= 1e-6
    # the zeta normalization forces unit L^p norm
    assert prof.norms["lp"] == pytest.approx(1.0, rel=1e-6)


def test_wpq_gn_q_near_equality(wpq_benchmark):
    K = gn_constant_q(3, 5.0, 2.5, wpq_benchmark.norm_bundle)
    nu = derive_exponents(ProblemParams(3, 2.5, 5.0)).nu_pq
    nd = wpq_benchmark.norms
    ratio = nd["lp"] ** (1 / 5.0) / (
        K * nd["gradq"] ** (nu / 2.5) * nd["mass2"] ** ((1 - nu) / 2))
    assert 0.99 <= ratio <= 1.01


def test_wpq_gaussian_battery_respects_bound(wpq_benchmark):
    params = ProblemParams(3, 2.5, 5.0, 1.0)
    K = gn_constant_q(3, 5.0, 2.5, wpq_benchmark.norm_bundle)
    nu = derive_exponents(params).nu_pq
    g = make_grid(3, 24.0, 2400)
    rng = np.random.default_rng(9)
    from normsol import RadialField
    from oracles import smooth_bump_field
    for _ in range(50):
        u = RadialField(g, smooth_bump_field(g, rng))
        nd = norms(u, params)
        ratio = nd["lp"] ** (1 / 5.0) / (
            K * nd["gradq"] ** (nu / 2.5) * nd["mass2"] ** ((1 - nu) / 2))
        assert ratio <= 1.0 + 1e-2


def test_wpq_low_q_branch():
    # q < 2 exercises the superexponential-decay branch of the flux shooter
    prof = solve_wpq(3, 3.0, 1.8, make_grid(3, 25.0, 1500))
    assert prof.ode_residual <= 1e-3
    assert prof.norms["lp"] == pytest.approx(1.0, rel=1e-5)


def test_wpq_exponent_degeneracy_at_phat():
    # p nu_{p,q} = q exactly at p = phat
    params = ProblemParams(3, 2.5, 2.5 * (1 + 2 / 3))
    dx = derive_exponents(params)
    assert params.p * dx.nu_pq == pytest.approx(2.5, rel=1e-14)


def test_build_phi1_mass_and_asymptotics(townes):
    params = ProblemParams(2, 1.5, 4.0, 3.0)
    grid = make_grid(2, 20.0, 4000)
    for tau in (1.0, 4.0, 16.0):
        phi = build_phi1(tau, 3.0, townes, grid)
        mass2 = norms(phi, params)["mass2"]
        assert mass2 == pytest.approx(9.0, rel=1e-10)
    phi = build_phi1(16.0, 3.0, townes, grid)
    nd = norms(phi, params)
    wn = townes.norms
    pred_grad2 = 16.0 ** 2 * 9.0 * wn["grad2"] / wn["mass2"]
    assert nd["grad2"] / pred_grad2 == pytest.approx(1.0, abs=0.05)
    dq = derive_exponents(params).delta_q
    bound_gradq = 16.0 ** (1.5 * (1 + dq)) * 3.0 ** 1.5 * wn["gradq"] / wn["mass2"] ** 0.75
    assert nd["gradq"] <= bound_gradq * 1.05


def test_build_phi1_errors(townes):
    grid = make_grid(2, 20.0, 512)   # h = 0.039: tau = 16 under-resolves
    with pytest.raises(ResolutionError):
        build_phi1(16.0, 1.0, townes, grid)
    with pytest.raises(ParameterDomainError):
        build_phi1(0.5, 1.0, townes, make_grid(2, 20.0, 4000))
    fake = ExtremalProfile(field=townes.field, norms=townes.norms, shoot_value=1.0,
                           ode_residual=1.0, kind="semilinear_wp")
    with pytest.raises(DependencyError):
        build_phi1(4.0, 1.0, fake, make_grid(2, 20.0, 4000))


def test_norm_summary_export(tmp_path, townes):
    from normsol.groundstate import save_norm_summary
    path = tmp_path / "norms.json"
    save_norm_summary(path, townes)
    data = json.loads(path.read_text())
    assert data["kind"] == "semilinear_wp"
    assert data["mass2"] == pytest.approx(townes.norms["mass2"])
    assert "ode_residual" in data
