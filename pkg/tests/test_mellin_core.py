import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from expsampling import (GridSpec, LogHolder, MellinTransformQuery, TestFunction,
                         get_function, log_modulus_of_continuity, mellin_antiderivative,
                         mellin_derivative, mellin_taylor_eval, mellin_transform, parse_kernel,
                         to_log)
from expsampling.errors import (InvalidGridError, MissingDerivativeError, NumericDomainError,
                                UnsupportedOrderError)
from expsampling.mellin_core import log_antiderivative, log_antiderivative_nodes

from conftest import fd

PROBE = np.exp(np.linspace(-2, 2, 200))


def test_to_log_rejects_nonpositive():
    assert to_log(math.e) == pytest.approx(1.0, abs=1e-15)
    for bad in (0.0, -1.0, [1.0, -2.0]):
        with pytest.raises(NumericDomainError):
            to_log(bad)


def test_grid_spec_points_and_margin():
    g = GridSpec(-1.0, 1.0, 5)
    np.testing.assert_allclose(g.points(), [-1, -0.5, 0, 0.5, 1])
    assert g.spacing == pytest.approx(0.5)
    inner = g.points(margin=0.25)
    assert inner[0] >= -0.75 and inner[-1] <= 0.75
    with pytest.raises(ValueError):
        GridSpec(1.0, -1.0, 5)
    with pytest.raises(ValueError):
        GridSpec(0.0, 1.0, 1)


def test_mellin_derivative_examples():
    assert mellin_derivative(get_function("log"), math.e) == pytest.approx(1.0, abs=1e-14)
    assert mellin_derivative(get_function("sin_log"), 1.0) == pytest.approx(1.0, abs=1e-14)
    x = math.exp(0.3)
    f = get_function("sin_log")
    got = mellin_derivative(f, x, order=2)
    assert got == pytest.approx(-math.sin(0.3), abs=1e-12)
    # nested finite-difference oracle
    nested = mellin_derivative(f, x, order=2, use_analytic=False)
    assert abs(nested - got) < 1e-4


def test_mellin_derivative_errors():
    f = get_function("sin_log")
    with pytest.raises(UnsupportedOrderError):
        mellin_derivative(f, 1.0, order=3)
    nan_f = TestFunction("nan", lambda v: np.full_like(np.asarray(v, float), np.nan))
    with pytest.raises(NumericDomainError):
        mellin_derivative(nan_f, 1.0)


@pytest.mark.parametrize("name", ["const1", "log", "log_windowed", "sin_log", "bump"])
def test_analytic_theta_matches_finite_differences(name):
    f = get_function(name)
    analytic = mellin_derivative(f, PROBE)
    numeric = mellin_derivative(f, PROBE, use_analytic=False)
    assert np.max(np.abs(analytic - numeric)) <= 1e-6


@pytest.mark.parametrize("name", ["log_windowed", "sin_log", "bump"])
def test_analytic_theta2_matches_finite_differences(name):
    f = get_function(name)
    v = np.linspace(-2, 2, 41)
    numeric = fd(f.theta_log, v)
    assert np.max(np.abs(f.theta2_log(v) - numeric)) <= 1e-6


def test_antiderivative_examples():
    assert mellin_antiderivative(get_function("const1"), math.e**2) == pytest.approx(2.0, abs=1e-12)
    assert mellin_antiderivative(get_function("sin_log"), math.exp(math.pi)) == pytest.approx(2.0, abs=1e-10)
    assert mellin_antiderivative(get_function("log"), math.e) == pytest.approx(0.5, abs=1e-12)
    # negative for x below the base point
    assert mellin_antiderivative(get_function("const1"), math.exp(-1.5)) == pytest.approx(-1.5, abs=1e-12)


def test_antiderivative_against_scipy_for_kinked_function():
    f = get_function("holder_half")
    ref, _ = integrate.quad(lambda v: float(f.at_log(v)), 0.0, 1.7, points=[1.0], epsabs=1e-13)
    assert mellin_antiderivative(f, math.exp(1.7)) == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("name", ["sin_log", "holder_half", "log_windowed", "abs_sin_log"])
def test_theta_of_antiderivative_recovers_function(name):
    f = get_function(name)
    # 24 points avoid the kinks at 0 and +-1, where only one-sided limits exist
    v = np.linspace(-2, 2, 24)
    F = TestFunction("F", lambda u: log_antiderivative(f, u, tol=1e-13))
    theta_F = mellin_derivative(F, np.exp(v))
    assert np.max(np.abs(theta_F - f.at_log(v))) <= 1e-8


def test_base_point_only_shifts_antiderivative():
    f = get_function("sin_log")
    v = np.linspace(-2, 2, 9)
    F1 = log_antiderivative(f, v)
    F2 = log_antiderivative(f, v, base_log=0.7)
    shift = F1 - F2
    assert np.ptp(shift) < 1e-10
    assert shift[0] == pytest.approx(1 - math.cos(0.7), abs=1e-10)


def test_antiderivative_nodes_match_pointwise():
    f = get_function("abs_sin_log")
    nodes = np.linspace(-3, 3, 31)
    np.testing.assert_allclose(log_antiderivative_nodes(f, nodes),
                               log_antiderivative(f, nodes), atol=1e-10)


def test_mellin_transform_of_b3():
    b3 = parse_kernel("BSpline(3)")
    r0 = mellin_transform(b3, MellinTransformQuery(0.0))
    assert abs(r0.value - 1.0) < 1e-10 and r0.truncation_sound
    r = mellin_transform(b3, MellinTransformQuery(math.pi))
    assert abs(r.value - (2 / math.pi) ** 3) < 1e-10
    assert abs(mellin_transform(b3, MellinTransformQuery(2 * math.pi)).value) < 1e-10


def test_mellin_transform_flags_unsound_truncation():
    res = mellin_transform(get_function("const1"), MellinTransformQuery(1.0, truncation_radius=5))
    assert not res.truncation_sound
    with pytest.raises(ValueError):
        MellinTransformQuery(1.0, truncation_radius=-1)


def test_mellin_transform_of_gaussian_in_log():
    g = lambda v: np.exp(-v * v / 2)
    res = mellin_transform(g, MellinTransformQuery(1.3, truncation_radius=12))
    assert abs(res.value - math.sqrt(2 * math.pi) * math.exp(-1.3**2 / 2)) < 1e-10


def test_modulus_examples():
    grid = GridSpec(-2.0, 2.0, 401)
    assert log_modulus_of_continuity(get_function("const1"), 0.3, grid) == 0.0
    assert log_modulus_of_continuity(get_function("log"), 0.1, grid) == pytest.approx(0.1, abs=1e-12)
    half = log_modulus_of_continuity(get_function("holder_half"), 0.01, grid)
    assert half == pytest.approx(0.1, abs=1e-9)


def test_modulus_needs_grid_pairs():
    with pytest.raises(InvalidGridError):
        log_modulus_of_continuity(get_function("sin_log"), 1e-4, GridSpec(-1, 1, 11))


@pytest.mark.parametrize("name", ["sin_log", "holder_half", "abs_sin_log", "bump", "log_windowed"])
def test_modulus_monotone_and_vanishing(name):
    f = get_function(name)
    grid = GridSpec(-2.0, 2.0, 4001)
    om = [log_modulus_of_continuity(f, d, grid) for d in (0.1, 0.01, 0.001)]
    assert om[0] > om[1] > om[2] > 0


def test_taylor_examples():
    log = get_function("log")
    assert mellin_taylor_eval(log, 1.0, math.e) == pytest.approx(1.0)
    s = get_function("sin_log")
    assert mellin_taylor_eval(s, 1.0, math.exp(0.1)) == pytest.approx(0.1, abs=1e-15)
    for name in ("sin_log", "bump", "log_windowed"):
        f = get_function(name)
        assert mellin_taylor_eval(f, 1.3, 1.0) == pytest.approx(f(1.3), abs=1e-15)


def test_taylor_remainder_is_second_order():
    s = get_function("sin_log")
    ratios = []
    for h in (0.1, 0.05, 0.025):
        rem = abs(math.sin(h) - mellin_taylor_eval(s, 1.0, math.exp(h)))
        ratios.append(rem / h**2)
    assert max(ratios) < 1.0
    # second-order polynomial leaves a third-order remainder
    x = math.exp(0.4)
    rem2 = abs(math.sin(0.4 + 0.05) - mellin_taylor_eval(s, x, math.exp(0.05), n=2))
    assert rem2 < 0.05**3


def test_taylor_needs_derivatives():
    with pytest.raises(MissingDerivativeError):
        mellin_taylor_eval(get_function("holder_half"), 1.0, 2.0)
    with pytest.raises(UnsupportedOrderError):
        mellin_taylor_eval(get_function("sin_log"), 1.0, 2.0, n=3)


@pytest.mark.parametrize("name", ["holder_half", "abs_sin_log", "sin_log", "log_windowed"])
def test_registered_holder_flags_hold_on_grid(name):
    f = get_function(name)
    h = f.log_holder
    v = np.linspace(-3, 3, 301)
    d = np.abs(v[:, None] - v[None, :])
    diff = np.abs(f.at_log(v)[:, None] - f.at_log(v)[None, :])
    assert np.all(diff <= h.K * d**h.alpha + 1e-12)


def test_test_function_flags():
    assert get_function("holder_half").log_holder == LogHolder(0.5, 1.0)
    assert not get_function("log").bounded
    assert get_function("const1").is_constant
    with pytest.raises(KeyError):
        get_function("nope")


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-1, 1))
def test_taylor_exact_for_affine_log(v, h):
    log = get_function("log")
    assert mellin_taylor_eval(log, math.exp(v), math.exp(h)) == pytest.approx(v + h, abs=1e-12)
