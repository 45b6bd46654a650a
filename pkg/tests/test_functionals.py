import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gkdvlab import (
    Grid,
    charge,
    eigen_residual,
    energy,
    gauge_shift,
    h1_distance,
    mkdv,
    orbital_distance,
    polynomial,
    translate,
)
from gkdvlab.functionals import energy_gradient_values, h1_norm, hylenic_ratio, mass, observables
from gkdvlab.solitons import kdv_profile, mkdv_charge, mkdv_profile, mkdv_soliton, mkdv_speed_from_charge
from gkdvlab.spectral import project_band

TWO_PI = Grid(64, 2 * np.pi)


def test_sine_functionals():
    u = TWO_PI.sample(np.sin)
    square = polynomial([1.0])
    assert energy(u, square) == pytest.approx(1.5 * np.pi, rel=1e-14)
    assert charge(u) == pytest.approx(0.5 * np.pi, rel=1e-14)
    assert mass(u) == pytest.approx(np.pi, rel=1e-14)
    assert h1_norm(u) == pytest.approx(math.sqrt(2 * np.pi), rel=1e-14)
    assert h1_distance(u, TWO_PI.zeros()) == pytest.approx(math.sqrt(2 * np.pi), rel=1e-14)
    assert hylenic_ratio(u, square) == pytest.approx(3.0)
    assert math.isnan(hylenic_ratio(TWO_PI.zeros(), square))
    obs = observables(u, square)
    assert obs.hylenic_ratio == pytest.approx(3.0)


def test_eigen_residual_of_sine():
    # -u'' + 2u + c u with u = sin: (3 + c) sin, L2 norm |3 + c| sqrt(pi)
    u = TWO_PI.sample(np.sin)
    square = polynomial([1.0])
    assert eigen_residual(u, square, -3.0) < 1e-12
    ref = quad(lambda x: (3.5 * np.sin(x)) ** 2, 0, 2 * np.pi)[0] ** 0.5
    assert eigen_residual(u, square, 0.5) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_closed_form_solves_profile_ode(k):
    x, c = sp.symbols("x c", positive=True)
    a = ((k + 1) * (k + 2) * c / 2) ** sp.Rational(1, k)
    u = a * sp.sech(k * sp.sqrt(c) * x / 2) ** sp.Rational(2, k)
    resid = sp.diff(u, x, 2) - c * u + u ** (k + 1) / (k + 1)
    f = sp.lambdify((x, c), resid, "mpmath")
    for xv in (0.0, 0.3, 1.7, 4.0):
        for cv in (0.5, 1.0, 2.0):
            assert abs(float(f(xv, cv))) <= 1e-10
    xs = np.linspace(-5, 5, 7)
    np.testing.assert_allclose(
        mkdv_profile(xs, k, 1.3),
        [float(sp.N(u.subs({x: abs(v), c: 1.3}))) for v in xs],
        rtol=1e-13,
    )


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_charge_law_against_quadrature(k, c):
    ref = quad(lambda y: 0.5 * mkdv_profile(y, k, c) ** 2, -np.inf, np.inf, epsabs=1e-13)[0]
    assert mkdv_charge(k, c) == pytest.approx(ref, rel=1e-10)
    assert mkdv_speed_from_charge(k, mkdv_charge(k, c)) == pytest.approx(c, rel=1e-12)


def test_cubic_charge_law():
    for c in (0.5, 1.0, 2.0):
        assert mkdv_charge(1, c) == pytest.approx(12 * c**1.5, rel=1e-14)


def test_zero_field():
    z = Grid(1024, 80.0).zeros()
    assert energy(z, mkdv(1)) == 0.0 and charge(z) == 0.0
    assert eigen_residual(z, mkdv(1), 3.0) == 0.0
    assert h1_distance(z, z) == 0.0


def test_eigen_residual_sine_cubic():
    grid = Grid(1024, 80.0)
    kw = 2 * np.pi / 80
    u = grid.sample(lambda x: np.sin(kw * x))
    ref = quad(lambda x: (kw**2 * np.sin(kw * x) - np.sin(kw * x) ** 2 / 2) ** 2, 0, 80, limit=200)[0] ** 0.5
    assert eigen_residual(u, mkdv(1), 0.0) == pytest.approx(ref, rel=1e-10)


def test_soliton_energy_against_fine_quadrature():
    # unshifted k=1, c=1: E = -36/5, from a fine independent sum
    x = np.linspace(-60, 60, 1_000_001)
    sech, tanh = 1 / np.cosh(x / 2), np.tanh(x / 2)
    u = 3 * sech**2
    ux = -3 * sech**2 * tanh
    dense = np.trapezoid(0.5 * ux**2 - u**3 / 6, x)
    assert dense == pytest.approx(-7.2, abs=1e-8)
    grid = Grid(1024, 80.0)
    assert energy(mkdv_soliton(grid, 1, 1.0), mkdv(1)) == pytest.approx(dense, rel=1e-9)
    assert energy(mkdv_soliton(grid, 1, 1.0), mkdv(1)) == pytest.approx(-7.2, rel=1e-12)


def test_kdv_profile_is_mkdv1_rescaled():
    x = np.linspace(-10, 10, 50)
    np.testing.assert_allclose(6 * kdv_profile(x, 1.0), mkdv_profile(x, 1, 1.0), rtol=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_closed_form_is_traveling_wave_on_grid(k):
    grid = Grid(1024, 80.0)
    model = mkdv(k)
    assert eigen_residual(mkdv_soliton(grid, k, 1.0), model, 1.0) < 1e-9
    shifted = gauge_shift(model)[0]
    # shifted frame: speed c - 2
    assert eigen_residual(mkdv_soliton(grid, k, 1.0), shifted, -1.0) < 1e-9


def _smooth_random(grid, rng, amp=1.0):
    f = grid.field(rng.standard_normal(grid.n))
    f = project_band(f, grid.k_max / 8)
    return f * (amp / max(1e-300, np.max(np.abs(f.values))))


def test_directional_derivative_quadratic_decay():
    grid = Grid(256, 40.0)
    model = gauge_shift(mkdv(1))[0]
    rng = np.random.default_rng(7)
    for _ in range(20):
        u = _smooth_random(grid, rng) + mkdv_soliton(grid, 1, 1.0)
        h = _smooth_random(grid, rng)
        exact = grid.dx * float(np.dot(energy_gradient_values(grid, u.values, model), h.values))
        errs = []
        for step in (1e-2, 5e-3, 2.5e-3):
            fd = (energy(u + step * h, model) - energy(u - step * h, model)) / (2 * step)
            errs.append(abs(fd - exact))
        rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(rates) > 1.8, (errs, rates)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-40, max_value=40), st.floats(min_value=0.3, max_value=2.0))
def test_orbital_distance_recovers_translation(tau, c):
    grid = Grid(512, 80.0)
    u = mkdv_soliton(grid, 2, c)
    v = translate(u, tau)
    d, found = orbital_distance(u, v)
    assert d < 1e-9
    assert (found - tau + 40) % 80 - 40 == pytest.approx(0.0, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_orbital_distance_bounded_by_h1(seed):
    grid = Grid(256, 40.0)
    rng = np.random.default_rng(seed)
    u = _smooth_random(grid, rng)
    v = _smooth_random(grid, rng)
    d, tau = orbital_distance(u, v)
    assert d <= h1_distance(u, v) + 1e-12
    assert h1_distance(translate(u, tau), v) == pytest.approx(d, rel=1e-12)
    d_again, _ = orbital_distance(translate(u, 3.21), v)
    assert d_again == pytest.approx(d, rel=1e-8, abs=1e-12)


def test_orbital_distance_sub_grid():
    grid = Grid(256, 40.0)
    u = grid.sample(lambda x: np.exp(-((x - 20) ** 2)))
    v = translate(u, 0.3 * grid.dx)
    d, tau = orbital_distance(u, v)
    assert tau == pytest.approx(0.3 * grid.dx, abs=1e-9)
    assert d < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.2, max_value=5.0), st.sampled_from([1, 2, 3]))
def test_charge_scaling(lam, k):
    grid = Grid(1024, 80.0)
    u = mkdv_soliton(grid, k, 1.0)
    assert charge(u * lam) == pytest.approx(lam**2 * charge(u), rel=1e-13)


def test_orbital_distance_examples():
    grid = Grid(1024, 80.0)
    v = mkdv_soliton(grid, 1, 1.0)
    assert orbital_distance(v, v) == (0.0, 0.0)
    d, tau = orbital_distance(translate(v, 3.7), v)
    assert d <= 1e-10
    assert tau == pytest.approx(-3.7, abs=1e-9)
    g = grid.sample(lambda x: np.exp(-((x - 30) ** 2)))
    d, _ = orbital_distance(grid.zeros(), g)
    assert d == pytest.approx(h1_distance(grid.zeros(), g), rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_h1_triangle_inequality(seed):
    grid = Grid(256, 40.0)
    rng = np.random.default_rng(seed)
    a, b, c = (_smooth_random(grid, rng) for _ in range(3))
    assert h1_distance(a, c) <= h1_distance(a, b) + h1_distance(b, c) + 1e-12
