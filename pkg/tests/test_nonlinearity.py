import math

import numpy as np
import pytest

from spde_lab.nonlinearity import (
    EPS_DOM,
    custom,
    eval_f,
    eval_g,
    from_name,
    linear,
    log1p,
    rational,
    sine_plus,
    zero,
)

ALL_NAMES = ("linear", "rational", "sineplus", "log1p", "zero")


def test_linear_f_constant():
    nl = linear(1.0)
    for v in (-5.0, -1e-9, 0.0, 1e-9, 3.0):
        assert eval_f(nl, v) == pytest.approx(1.0, abs=1e-15)


def test_rational_values():
    nl = rational(2.5)
    assert eval_f(nl, 2.0) == pytest.approx(0.5, rel=1e-15)
    assert eval_g(rational(1.0), 1.0) == pytest.approx(0.5, rel=1e-15)


def test_log1p_f_at_zero():
    assert eval_f(log1p(2.5), 0.0) == pytest.approx(2.5, abs=1e-15)


def test_zero_nonlinearity():
    nl = zero()
    v = np.linspace(-3, 3, 11)
    assert np.all(eval_f(nl, v) == 0.0)
    assert np.all(eval_g(nl, v) == 0.0)


def test_g_examples():
    assert eval_g(linear(2.5), 1.0) == 2.5
    assert eval_g(sine_plus(2.5), 0.0) == 0.0


def test_g_vanishes_at_zero_everywhere():
    for name in ALL_NAMES:
        assert abs(float(eval_g(from_name(name, 2.5), 0.0))) <= 1e-14


def test_custom_rejects_nonvanishing_g():
    with pytest.raises(ValueError, match="g\\(0\\)"):
        custom(lambda v: v + 1.0, gprime0=1.0, lipschitz_bound=1.0)


@pytest.mark.parametrize("name", ALL_NAMES)
def test_ratio_consistency(name):
    # v * f(v) = g(v) on a wide grid, relative 1e-12
    nl = from_name(name, 2.5)
    v = np.concatenate(
        [np.linspace(-10, 10, 4001), np.geomspace(1e-9, 1, 100), -np.geomspace(1e-9, 0.99, 100)]
    )
    v = v[np.abs(v) >= 1e-10]
    g = eval_g(nl, v)
    lhs = v * eval_f(nl, v)
    mask = np.abs(g) > 0
    assert np.all(np.abs(lhs[mask] - g[mask]) <= 1e-12 * np.abs(g[mask]))


@pytest.mark.parametrize("name", ALL_NAMES)
def test_gprime0_matches_central_difference(name):
    nl = from_name(name, 2.5)
    h = 1e-6
    fd = float(eval_g(nl, h) - eval_g(nl, -h)) / (2 * h)
    assert nl.gprime0 == pytest.approx(fd, abs=1e-6)


def test_f_continuous_at_zero():
    for name in ALL_NAMES:
        nl = from_name(name, 2.5)
        f0 = float(eval_f(nl, 0.0))
        for v in (1e-9, -1e-9):
            assert abs(float(eval_f(nl, v)) - f0) <= 1e-8


def test_f_bounded_by_lipschitz_constant():
    # |f| <= Lip(g); analytic constants per tag, with the log1p bound on
    # the tangent-extended domain (the raw 1 does not hold below zero
    # where |ln(1+v)/v| > 1)
    v = np.linspace(-10, 10, 100001)
    bounds = {
        "linear": 1.0,
        "rational": 1.0,
        "sineplus": 2.0,
        "log1p": 1.0 / EPS_DOM,
    }
    for name, c in bounds.items():
        nl = from_name(name, 2.5)
        fmax = float(np.max(np.abs(eval_f(nl, v))))
        assert fmax <= 2.5 * c * (1 + 1e-12)
        assert fmax <= nl.lipschitz_bound * (1 + 1e-12)


def test_log1p_positive_side_bound_is_one():
    nl = log1p(2.5)
    v = np.geomspace(1e-8, 10, 10001)
    assert float(np.max(np.abs(eval_f(nl, v)))) <= 2.5 * (1 + 1e-12)


def test_log1p_extension_is_c1_and_total():
    nl = log1p(1.0)
    v_star = -1.0 + EPS_DOM
    h = 1e-9
    # value continuity at the junction: both branches give ln(eps) at v*
    assert float(eval_g(nl, v_star)) == pytest.approx(math.log(EPS_DOM), rel=1e-12)
    # one-sided slopes match the tangent slope 1/eps
    slope_hi = (float(eval_g(nl, v_star + h)) - float(eval_g(nl, v_star))) / h
    slope_lo = (float(eval_g(nl, v_star)) - float(eval_g(nl, v_star - h))) / h
    assert slope_hi == pytest.approx(1.0 / EPS_DOM, rel=1e-2)
    assert slope_lo == pytest.approx(1.0 / EPS_DOM, rel=1e-2)
    # total and finite well below -1
    deep = eval_g(nl, np.array([-1.0, -2.0, -50.0]))
    assert np.all(np.isfinite(deep))
    # agrees with ln(1+v) on the untouched branch
    assert float(eval_g(nl, -0.5)) == pytest.approx(math.log(0.5), rel=1e-14)


def test_from_name_rejects_unknown():
    with pytest.raises(ValueError, match="unknown nonlinearity"):
        from_name("cubic", 1.0)


def test_nan_propagates():
    # the zero map is excluded: g = 0 sends every input to 0 by definition
    for name in ("linear", "rational", "sineplus", "log1p"):
        nl = from_name(name, 2.5)
        assert math.isnan(float(eval_g(nl, float("nan"))))
