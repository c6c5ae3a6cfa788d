import math

import numpy as np
import pytest

from normsol import (
    ParameterDomainError,
    ProblemParams,
    RadialField,
    integrate,
    load_field,
    make_grid,
    norms,
    radial_derivative,
    resample_dilation,
    save_field,
)
from normsol.radial_grid import sphere_constant

from oracles import gaussian_norms


def test_ball_and_disk_volumes():
    g = make_grid(3, 1.0, 1001)
    assert integrate(np.ones(g.M), g) == pytest.approx(4 * math.pi / 3, rel=1e-6)
    g2 = make_grid(2, 2.0, 512)
    assert integrate(np.ones(g2.M), g2) == pytest.approx(4 * math.pi, rel=1e-5)


def test_gaussian_integral():
    g = make_grid(3, 20.0, 2000)
    val = integrate(np.exp(-g.r ** 2), g)
    assert val == pytest.approx(math.pi ** 1.5, rel=1e-6)


def test_integrate_basics():
    g = make_grid(3, 1.0, 101)
    assert integrate(np.zeros(g.M), g) == 0.0
    with pytest.raises(ValueError):
        integrate(np.ones(g.M + 1), g)


def test_weights_nonnegative_origin_zero():
    g = make_grid(3, 5.0, 128)
    assert np.all(g.w >= 0)
    assert g.w[0] == 0.0
    assert np.all(g.cell_vols > 0)
    # cell volumes tile the ball exactly
    assert g.cell_vols.sum() == pytest.approx(sphere_constant(3) * 5.0 ** 3 / 3, rel=1e-12)


def test_grid_parameter_errors():
    with pytest.raises(ParameterDomainError):
        make_grid(1, 1.0, 100)
    with pytest.raises(ParameterDomainError):
        make_grid(3, -1.0, 100)
    with pytest.raises(ParameterDomainError):
        make_grid(3, 1.0, 63)


def test_quadrature_refinement_order():
    # degree-1 polynomial in r times r^(N-1): error shrinks ~4x when halving h
    R = 3.0
    exact = sphere_constant(3) * R ** 4 / 4
    errs = []
    for M in (500, 1000, 2000):
        g = make_grid(3, R, M + 1)
        errs.append(abs(integrate(g.r, g) - exact))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_radial_derivative_cases():
    g = make_grid(3, 4.0, 401)
    const = RadialField(g, np.full(g.M, 2.5))
    assert np.all(radial_derivative(const).values == 0.0)

    quad = RadialField(g, g.r ** 2)
    d = radial_derivative(quad).values
    assert d[1:-1] == pytest.approx(2 * g.r[1:-1], abs=1e-10)

    gauss = RadialField(g, np.exp(-g.r ** 2 / 2))
    d = radial_derivative(gauss).values
    exact = -g.r * np.exp(-g.r ** 2 / 2)
    inner = g.r <= 2.0
    assert np.max(np.abs(d[inner] - exact[inner])) < 2 * g.h ** 2


def test_field_validation():
    g = make_grid(3, 4.0, 128)
    with pytest.raises(ValueError):
        RadialField(g, np.ones(g.M - 1))
    with pytest.raises(ValueError):
        RadialField(g, np.full(g.M, np.nan))


def test_norms_against_quadrature_oracle():
    params = ProblemParams(3, 2.5, 3.0, 1.0)
    g = make_grid(3, 20.0, 4000)
    u = RadialField(g, math.pi ** -0.75 * np.exp(-g.r ** 2 / 2))
    nd = norms(u, params)
    assert nd["mass2"] == pytest.approx(1.0, rel=1e-6)
    assert nd["grad2"] == pytest.approx(1.5, rel=1e-5)
    oracle = gaussian_norms(3, 2.5, 3.0)
    assert nd["gradq"] == pytest.approx(oracle["gradq"], rel=1e-4)
    assert nd["lp"] == pytest.approx(oracle["lp"], rel=1e-5)

    zero = RadialField(g, np.zeros(g.M))
    assert all(v == 0.0 for v in norms(zero, params).values())


def test_resample_dilation_identity_and_mass():
    params = ProblemParams(3, 2.5, 3.0, 1.0)
    g = make_grid(3, 20.0, 2000)
    u = RadialField(g, np.exp(-g.r ** 2 / 2))
    v = resample_dilation(u, 1.0)
    assert v.values == pytest.approx(u.values, abs=1e-14)
    m0 = norms(u, params)["mass2"]
    for t in (0.5, 2.0):
        vt = resample_dilation(u, t)
        assert norms(vt, params)["mass2"] == pytest.approx(m0, rel=1e-13)
    with pytest.raises(ParameterDomainError):
        resample_dilation(u, -1.0)


def test_resample_dilation_scaling_laws():
    params = ProblemParams(3, 2.5, 3.0, 1.0)
    dxp = 3 * (3.0 - 2) / (2 * 3.0)
    dxq = 3 * (2.5 - 2) / (2 * 2.5)
    g = make_grid(3, 24.0, 4800)
    u = RadialField(g, np.exp(-g.r ** 2 / 2))
    n0 = norms(u, params)
    for t in (0.25, 0.5, 2.0, 4.0):
        nt = norms(resample_dilation(u, t), params)
        assert nt["grad2"] / n0["grad2"] == pytest.approx(t ** 2, rel=0.01)
        assert nt["gradq"] / n0["gradq"] == pytest.approx(t ** (2.5 * (1 + dxq)), rel=0.01)
        assert nt["lp"] / n0["lp"] == pytest.approx(t ** (3.0 * dxp), rel=0.01)


def test_field_csv_roundtrip(tmp_path):
    g = make_grid(3, 10.0, 256)
    rng = np.random.default_rng(3)
    u = RadialField(g, rng.uniform(0, 1, g.M))
    path = tmp_path / "field.csv"
    save_field(path, u)
    v = load_field(path, 3)
    assert np.array_equal(v.values, u.values)   # bit-for-bit at 17 digits
    assert np.array_equal(v.grid.r, g.r)
