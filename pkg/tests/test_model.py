import math
import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gkdvlab import (
    DomainError,
    abs_power,
    check_assumptions,
    eval_w,
    eval_w_prime,
    eval_w_second,
    gauge_shift,
    kdv,
    mkdv,
    polynomial,
)
from gkdvlab.model import ASSUMPTION_NAMES, from_config

s_sym = sp.symbols("s", real=True)


def sympy_w(k):
    return -s_sym ** (k + 2) / ((k + 2) * (k + 1))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_mkdv_derivatives_match_symbolic(k):
    model = mkdv(k)
    w = sympy_w(k)
    s = np.linspace(-3, 3, 41)
    for deriv, method in ((0, model.w), (1, model.w_prime), (2, model.w_second)):
        f = sp.lambdify(s_sym, sp.diff(w, s_sym, deriv), "numpy")
        np.testing.assert_allclose(method(s), f(s) * np.ones_like(s), rtol=1e-13, atol=1e-14)


def test_point_values():
    assert mkdv(1).w(0.0) == 0.0
    assert mkdv(2).w(1.0) == pytest.approx(-1 / 12, rel=1e-15)
    assert abs_power(2).w(-2.0) == -16.0


def test_abs_power_values():
    model = abs_power(1.5)
    s = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    np.testing.assert_allclose(model.w(s), -np.abs(s) ** 3.5)
    np.testing.assert_allclose(model.w_prime(s), -3.5 * np.abs(s) ** 1.5 * s)
    np.testing.assert_allclose(model.w_second(s), -3.5 * 2.5 * np.abs(s) ** 1.5)


def test_polynomial_and_kdv():
    model = polynomial([0.5, 2.0, -1.0])
    s = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(model.w(s), 0.5 * s**2 + 2 * s**3 - s**4)
    np.testing.assert_allclose(model.w_prime(s), s + 6 * s**2 - 4 * s**3)
    np.testing.assert_allclose(model.w_second(s), 1 + 12 * s - 12 * s**2)
    np.testing.assert_allclose(kdv().w_prime(s), -3 * s**2)


def test_non_integer_mkdv_is_odd_continuation():
    model = mkdv(1.5)
    s = np.linspace(0.1, 2, 7)
    np.testing.assert_allclose(model.w(-s), -model.w(s))
    np.testing.assert_allclose(model.w(s), -(s**3.5) / (3.5 * 2.5))


def test_eval_rejects_non_finite():
    for fn in (eval_w, eval_w_prime, eval_w_second):
        with pytest.raises(DomainError):
            fn(mkdv(1), np.array([1.0, np.nan]))
        with pytest.raises(DomainError):
            fn(mkdv(1), np.inf)


def test_factories_reject_bad_exponent():
    with pytest.raises(DomainError):
        mkdv(0)
    with pytest.raises(DomainError):
        abs_power(-1)
    with pytest.raises(DomainError):
        polynomial([])


def test_evenness():
    assert mkdv(2).is_even and not mkdv(1).is_even and not mkdv(3).is_even
    assert abs_power(1.5).is_even
    assert polynomial([1, 0, 1]).is_even and not kdv().is_even


# -- gauge shift -------------------------------------------------------------

def test_gauge_shift_amount_and_speed():
    shifted, speed = gauge_shift(mkdv(1))
    assert speed == 2.0 and shifted.e0 == 1.0 and shifted.shift_speed == 2.0
    assert shifted.w_second(0.0) == 2.0
    # E0 = -3 needs a = 4 to reach W''(0) = 2, so the frame speed is 2a = 8
    shifted, speed = gauge_shift(polynomial([-3.0, -1.0]))
    assert speed == 8.0 and shifted.e0 == 1.0
    assert shifted.w_second(0.0) == 2.0


def test_gauge_shift_leaves_positive_models_alone():
    model = polynomial([0.5, -1.0])
    same, speed = gauge_shift(model)
    assert same is model and speed == 0.0


@given(st.floats(min_value=-10, max_value=0), st.floats(min_value=-3, max_value=3))
def test_gauge_shift_idempotent(e0, c3):
    once, speed = gauge_shift(polynomial([e0, c3]))
    twice, speed2 = gauge_shift(once)
    assert twice == once and speed2 == 0.0
    back = once.unshifted()
    assert back.coeffs == (c3,) and back.shift_speed == 0.0
    assert math.isclose(back.e0, e0, abs_tol=1e-14)


def test_gauge_shift_back_map_solves_original_equation():
    """v solving the shifted equation gives u(t, x) = v(t, x - 2a t) for the original one."""
    t, x, y, a, e0, c = sp.symbols("t x y a e0 c", real=True)
    V, F = sp.Function("V"), sp.Function("F")
    u = V(t, x - c * t)
    original = sp.diff(u, t) + sp.diff(u, x, 3) - sp.diff(2 * e0 * u + F(u), x)
    in_moving_frame = original.subs(x, y + c * t).doit()
    v_t = -sp.diff(V(t, y), y, 3) + sp.diff(2 * (e0 + a) * V(t, y) + F(V(t, y)), y)
    residual = sp.simplify(in_moving_frame.subs(sp.Derivative(V(t, y), t), v_t))
    assert sp.solve(residual, c) == [2 * a]
    _, speed = gauge_shift(polynomial([-0.5, -1.0]))
    assert speed == 2 * (1 - (-0.5))


# -- assumptions -------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3])
def test_shifted_mkdv_passes_everything(k):
    report = check_assumptions(gauge_shift(mkdv(k))[0])
    assert report.all_passed, report.rows()
    assert set(report.results) == set(ASSUMPTION_NAMES)


@pytest.mark.parametrize("k", [0.5, 1.5, 2, 3.5])
def test_shifted_abs_power_passes_everything(k):
    report = check_assumptions(gauge_shift(abs_power(k))[0])
    assert report.all_passed, report.rows()


@pytest.mark.parametrize("k", [4.5, 5])
def test_supercritical_fails_base(k, quiet):
    report = check_assumptions(gauge_shift(abs_power(k))[0])
    assert not report["base"].passed
    assert not report.well_posed
    witness = report["base"].witness
    assert witness["ratio"] == pytest.approx((k + 2) * (k + 1) * abs(witness["s"]) ** (k - 4), rel=1e-9)


def test_unshifted_fails_wb():
    report = check_assumptions(mkdv(1))
    assert not report["Wb"].passed
    assert report["Wa"].passed


def test_w1_fails_for_positive_nonlinearity():
    report = check_assumptions(polynomial([1.0, 0.0, 0.0, 0.0, 1.0]), samples=500)
    assert not report["W1"].passed
    assert report["W1"].witness["N"] >= 0


def test_w0_warns_for_high_growth():
    with pytest.warns(UserWarning, match="W0"):
        check_assumptions(gauge_shift(abs_power(5))[0])


def test_check_assumptions_rejects_bad_sampling():
    with pytest.raises(DomainError):
        check_assumptions(mkdv(1), sample_range=(1.0, 1.0))
    with pytest.raises(DomainError):
        check_assumptions(mkdv(1), samples=10)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.1, max_value=8.0))
def test_base_holds_iff_exponent_below_four(k):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = check_assumptions(gauge_shift(mkdv(k))[0], samples=200)
    assert report["base"].passed == (k < 4)


def test_polynomial_shifted_kdv_well_posed():
    report = check_assumptions(gauge_shift(kdv())[0])
    assert report["base"].passed and report["Wb"].passed and report["W1"].passed


# -- config ------------------------------------------------------------------

def test_from_config_shifts_by_default():
    model = from_config({"family": "mkdv", "k": 2})
    assert model.e0 == 1.0 and model.shift_speed == 2.0
    raw = from_config({"family": "mkdv", "k": 2, "auto_gauge_shift": False})
    assert raw == mkdv(2)


@pytest.mark.parametrize(
    "cfg",
    [
        {"family": "cubic", "k": 1},
        {"family": "mkdv"},
        {"family": "mkdv", "k": 1, "extra": 0},
        {"family": "polynomial"},
    ],
)
def test_from_config_rejects(cfg):
    with pytest.raises(DomainError):
        from_config(cfg)


def test_describe_round_trip():
    model = polynomial([0.25, -1.0, 0.5])
    d = model.describe()
    assert d["coeffs"] == [0.25, -1.0, 0.5]
    assert math.isclose(d["e0"], 0.25)
