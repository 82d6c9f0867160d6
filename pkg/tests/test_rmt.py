"""Marchenko-Pastur law, Silverstein solver, LSS constants.

High-precision reference constants were computed once with 40-digit
arithmetic from the closed-form density and are frozen here as literals.
"""

import cmath
import math

import numpy as np
import pytest
from scipy import integrate

from spotspectra import (
    ConfigError,
    DegenerateStatisticError,
    DiscreteH,
    MPLaw,
    NumericalError,
    mp_cdf,
    mp_cdf_grid,
    mp_lss_constants,
    mp_pdf,
    solve_silverstein,
)

# cdf of the unit-scale law, 40-digit quadrature, rounded to 20 significant digits
_CDF_REFS = [
    (1.0, 0.5, 0.57600421510386856202),
    (1.0, 1.0, 0.60899778104422935809),
    (2.0, 1.5, 0.79634814109877927120),
]

# center constant of x - log(x) - 1 under the unit law, same precision
_CENTER_REFS = [
    (0.1, 0.051755359079563288952),
    (0.3, 0.16775846414295778254),
    (0.5, 0.30685281944005469058),
    (0.9, 0.74415721188955047955),
]


def _closed_form_m(z, y):
    # unit-scale quadratic: y*z*m^2 - (1 - y - z)*m + 1 = 0, Herglotz root
    b = -(1.0 - y - z)
    disc = cmath.sqrt(b * b - 4.0 * y * z)
    for sign in (1.0, -1.0):
        m = (-b + sign * disc) / (2.0 * y * z)
        if m.imag > 0.0:
            return m
    raise AssertionError(f"no upper-half-plane root at z={z}, y={y}")


def test_mp_law_support_and_atom():
    law = MPLaw(y=0.5)
    assert law.a == pytest.approx((1 - math.sqrt(0.5)) ** 2, rel=1e-15)
    assert law.b == pytest.approx((1 + math.sqrt(0.5)) ** 2, rel=1e-15)
    assert law.atom == 0.0
    fat = MPLaw(y=1.5, sigma2=2.0)
    assert fat.a == pytest.approx(2.0 * (1 - math.sqrt(1.5)) ** 2, rel=1e-15)
    assert fat.b == pytest.approx(2.0 * (1 + math.sqrt(1.5)) ** 2, rel=1e-15)
    assert fat.atom == pytest.approx(1 - 1 / 1.5, rel=1e-15)
    with pytest.raises(ConfigError):
        MPLaw(y=0.0)
    with pytest.raises(ConfigError):
        MPLaw(y=0.5, sigma2=-1.0)


def _quad_against_density(g, y):
    # integrate g against the bulk density sqrt((b-x)(x-a)) / (2 pi y x) with
    # the substitution x = a + (b-a) sin^2(theta), which removes the
    # square-root edge singularities and makes plain quadrature tight
    a = (1.0 - math.sqrt(y)) ** 2
    b = (1.0 + math.sqrt(y)) ** 2
    w = b - a

    def integrand(theta):
        x = a + w * math.sin(theta) ** 2
        dens = math.sqrt(max((b - x) * (x - a), 0.0)) / (2.0 * math.pi * y * x)
        return g(x) * dens * w * math.sin(2.0 * theta)

    value, err = integrate.quad(
        integrand, 0.0, math.pi / 2.0, epsabs=1e-13, epsrel=1e-12, limit=200
    )
    assert err < 1e-10
    return value


def test_mp_pdf_support_and_mass():
    for y in (0.5, 1.5):
        law = MPLaw(y=y)
        assert mp_pdf(law.a - 1e-9, law) == 0.0
        assert mp_pdf(law.b + 1e-9, law) == 0.0
        xs = np.linspace(law.a, law.b, 101)
        assert np.all(np.asarray(mp_pdf(xs, law)) >= 0.0)
        mass = _quad_against_density(lambda x: 1.0, y)
        assert mass == pytest.approx(min(1.0, 1.0 / y), abs=1e-12)


def test_mp_cdf_reference_values():
    for x, y, ref in _CDF_REFS:
        assert mp_cdf(x, MPLaw(y=y)) == pytest.approx(ref, abs=5e-15)


def test_mp_cdf_shape():
    law = MPLaw(y=1.5)
    assert mp_cdf(-1e-12, law) == 0.0
    assert mp_cdf(0.0, law) == law.atom
    assert mp_cdf(law.a / 2, law) == law.atom
    assert mp_cdf(law.b, law) == 1.0
    assert mp_cdf(law.b + 5.0, law) == 1.0
    thin = MPLaw(y=0.5)
    assert mp_cdf(0.0, thin) == 0.0
    assert mp_cdf(thin.a * 0.99, thin) == 0.0
    xs = np.linspace(-0.5, thin.b + 0.5, 80)
    vals = mp_cdf_grid(thin, xs)
    assert np.all(np.diff(vals) >= 0.0)
    np.testing.assert_array_equal(vals, [mp_cdf(float(x), thin) for x in xs])


def test_mp_cdf_scale_equivariance_is_exact():
    law = MPLaw(y=0.5, sigma2=0.0009)
    unit = MPLaw(y=0.5)
    for x in (0.0005, 0.0009, 0.002, 0.0026):
        assert mp_cdf(x, law) == mp_cdf(x / 0.0009, unit)


def test_solver_matches_closed_form():
    rng = np.random.default_rng(7)
    h = DiscreteH.point_mass(1.0)
    for y in (0.3, 0.5):
        law = MPLaw(y=y)
        for _ in range(20):
            z = complex(rng.uniform(-2.0, law.b + 2.0), rng.uniform(1e-3, 2.0))
            point = solve_silverstein(z, y, h)
            assert abs(point.m - _closed_form_m(z, y)) < 1e-8
            assert point.m.imag > 0.0
            assert point.residual <= 1e-10


def test_solver_scaled_point_mass_consistency():
    # m_tau(z) = m_1(z / tau) / tau
    tau, y = 0.0009, 0.5
    z = complex(0.0012, 0.0003)
    scaled = solve_silverstein(z, y, DiscreteH.point_mass(tau))
    unit = solve_silverstein(z / tau, y, DiscreteH.point_mass(1.0))
    assert abs(scaled.m - unit.m / tau) < 1e-10 / tau


def test_solver_general_h_self_consistency():
    # two-point population: check the defining equations independently
    h = DiscreteH(support=(1.0, 3.0), weights=(0.6, 0.4))
    y = 0.5
    t = np.array(h.support)
    w = np.array(h.weights)
    for z in (complex(1.0, 0.5), complex(3.5, 0.01), complex(-0.5, 0.2)):
        point = solve_silverstein(z, y, h)
        mu, m = point.m_under, point.m
        lhs = z + 1.0 / mu - y * np.sum(w * t / (1.0 + t * mu))
        assert abs(lhs) < 1e-10
        assert abs(m - (mu + (1.0 - y) / z) / y) < 1e-12
        assert m.imag > 0.0


def test_solver_density_reconstruction():
    # pdf(x) = lim Im m(x + i*eps) / pi
    y = 0.5
    law = MPLaw(y=y)
    h = DiscreteH.point_mass(1.0)
    for x in np.linspace(law.a + 0.1, law.b - 0.1, 5):
        point = solve_silverstein(complex(x, 1e-6), y, h)
        assert point.m.imag / math.pi == pytest.approx(float(mp_pdf(x, law)), abs=1e-3)


def test_solver_strip_above_support():
    y = 0.5
    law = MPLaw(y=y)
    h = DiscreteH.point_mass(1.0)
    for x in np.linspace(law.a - 1.0, law.b + 1.0, 21):
        point = solve_silverstein(complex(x, 0.01), y, h)
        assert point.m.imag > 0.0
        assert point.residual <= 1e-10


def test_solver_degenerate_inputs():
    h = DiscreteH.point_mass(1.0)
    with pytest.raises(ConfigError, match="Im z > 0"):
        solve_silverstein(complex(1.0, 0.0), 0.5, h)
    with pytest.raises(ConfigError, match="y must be"):
        solve_silverstein(complex(1.0, 1.0), -0.5, h)
    with pytest.raises(ConfigError, match="mass at zero"):
        solve_silverstein(complex(1.0, 1.0), 0.5, DiscreteH.point_mass(0.0))


def test_solver_fails_honestly_at_the_edge():
    # the fixed-point map loses its contraction exactly at the support edge
    law = MPLaw(y=0.5)
    with pytest.raises(NumericalError):
        solve_silverstein(complex(law.b, 1e-6), 0.5, DiscreteH.point_mass(1.0))


def test_discrete_h_validation():
    DiscreteH(support=(1.0, 2.0), weights=(0.5, 0.5))
    with pytest.raises(ConfigError, match="sum to 1"):
        DiscreteH(support=(1.0, 2.0), weights=(0.5, 0.6))
    with pytest.raises(ConfigError, match="nonnegative"):
        DiscreteH(support=(1.0, 2.0), weights=(1.5, -0.5))
    with pytest.raises(ConfigError, match="finite and nonnegative"):
        DiscreteH(support=(-1.0, 2.0), weights=(0.5, 0.5))
    with pytest.raises(ConfigError, match="equal length"):
        DiscreteH(support=(1.0,), weights=(0.5, 0.5))


def test_lss_constants_reference_values():
    got = mp_lss_constants(0.5)
    assert got.center == pytest.approx(0.30685281944005469058, abs=2e-16)
    assert got.mean_shift == pytest.approx(0.34657359027997264, abs=2e-16)
    assert got.variance == pytest.approx(0.3862943611198906, abs=2e-16)


def test_lss_center_matches_quadrature():
    # independent oracle: integrate (x - log x - 1) against the density
    for z_n, ref in _CENTER_REFS:
        quad_center = _quad_against_density(lambda x: x - math.log(x) - 1.0, z_n)
        got = mp_lss_constants(z_n).center
        assert got == pytest.approx(quad_center, abs=1e-8)
        assert got == pytest.approx(ref, abs=5e-15)


def test_lss_constants_reject_wide_matrices():
    with pytest.raises(DegenerateStatisticError, match="singular with probability one"):
        mp_lss_constants(1.0)
    with pytest.raises(DegenerateStatisticError):
        mp_lss_constants(1.5)
    with pytest.raises(ConfigError):
        mp_lss_constants(0.0)
