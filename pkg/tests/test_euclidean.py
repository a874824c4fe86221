import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracspec.errors import AliasingError, BoxEscapeError, ParameterError
from fracspec.euclidean_multiplier import (LpLqStudy, PeriodizedLine, boundary_share, critical_data,
                                           gaussian_data, lp_norm, run_lplq_study, solve_heat_line)
from fracspec.mittag_leffler import ml_one


@pytest.fixture(scope="module")
def line():
    return PeriodizedLine(50.0, 2 ** 12)


def test_line_validation():
    with pytest.raises(ParameterError):
        PeriodizedLine(10.0, 1000)
    with pytest.raises(ParameterError):
        PeriodizedLine(10.0, 128)
    with pytest.raises(ParameterError):
        PeriodizedLine(-1.0, 256)
    ln = PeriodizedLine(10.0, 256)
    assert ln.dx == pytest.approx(20.0 / 256)
    assert ln.x[0] == -10.0 and ln.x.size == 256


def test_data_must_decay(line):
    with pytest.raises(ParameterError):
        line.check_data(np.ones(line.M))
    with pytest.raises(ParameterError):
        line.check_data(np.ones(17))


# ------------------------------------------------------------ lp norms

def test_lp_norm_indicator():
    dx = 1.0 / 64
    u = np.zeros(1024)
    u[100:164] = 1.0
    for p in (1, 1.5, 2, 4, 10):
        assert lp_norm(u, p, dx) == pytest.approx(1.0, rel=1e-14)
    assert lp_norm(u, math.inf, dx) == 1.0


def test_lp_norm_scaling():
    u = np.sin(np.linspace(0, 3, 300))
    for p in (1, 2, 3.5):
        assert lp_norm(-2.5 * u, p, 0.01) == pytest.approx(2.5 * lp_norm(u, p, 0.01), rel=1e-14)
    with pytest.raises(ParameterError):
        lp_norm(u, 0.5, 0.01)


def test_lp_norm_gaussian(line):
    u = np.exp(-line.x ** 2)
    assert abs(lp_norm(u, 2, line.dx) - (math.pi / 2) ** 0.25) <= 1e-8


# --------------------------------------------------------- the solver

def test_classical_heat_gaussian(line):
    u0 = gaussian_data(line, 1.5)
    for t in (0.1, 1.0, 10.0):
        var = 1.5 ** 2 + 2 * t
        exact = 1.5 / math.sqrt(var) * np.exp(-line.x ** 2 / (2 * var))
        assert np.abs(solve_heat_line(u0, line, 1.0, t) - exact).max() <= 1e-8


def test_time_zero_is_identity(line):
    u0 = gaussian_data(line, 2.0)
    assert np.array_equal(solve_heat_line(u0, line, 0.5, 0.0), u0)


def test_single_frequency_decay():
    ln = PeriodizedLine(64 * math.pi, 2 ** 13)  # xi = 1 is a grid frequency
    u0 = np.sin(ln.x) * np.exp(-(ln.x / 120.0) ** 8)
    centre = np.abs(ln.x) < 20
    for t in (0.5, 3.0, 20.0):
        u = solve_heat_line(u0, ln, 0.5, t)
        E = ml_one(0.5, -math.sqrt(t)).value
        assert np.fft.fft(u)[64] / np.fft.fft(u0)[64] == pytest.approx(E, abs=1e-14)
        assert np.abs(u[centre] - E * u0[centre]).max() <= 1e-6


def test_semigroup_classical(line):
    u0 = gaussian_data(line, 1.0)
    a = solve_heat_line(solve_heat_line(u0, line, 1.0, 0.7), line, 1.0, 1.6)
    b = solve_heat_line(u0, line, 1.0, 2.3)
    assert np.abs(a - b).max() <= 1e-10


def test_aliasing_detected():
    ln = PeriodizedLine(200.0, 256)
    with pytest.raises(AliasingError):
        solve_heat_line(gaussian_data(ln), ln, 1.0, 1e-3)


def test_solver_validation(line):
    u0 = gaussian_data(line)
    with pytest.raises(ParameterError):
        solve_heat_line(u0, line, 1.5, 1.0)
    with pytest.raises(ParameterError):
        solve_heat_line(u0, line, 0.5, -1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.01, 1e4), st.floats(0.5, 5.0))
def test_property_l2_contraction(alpha, t, sigma):
    ln = PeriodizedLine(50.0, 2 ** 12)
    u0 = gaussian_data(ln, sigma)
    u = solve_heat_line(u0, ln, alpha, t)
    assert lp_norm(u, 2, ln.dx) <= lp_norm(u0, 2, ln.dx) * (1 + 1e-12)


# ------------------------------------------------------------- studies

def test_critical_data_profile():
    ln = PeriodizedLine(200.0, 2 ** 14)
    u = critical_data(ln, 4 / 3)
    assert ln.check_data(u) is not None
    far = (np.abs(ln.x) > 20) & (np.abs(ln.x) < 50)
    a = 0.75 + 0.01
    assert np.allclose(u[far] * np.abs(ln.x[far]) ** a, 1.0, rtol=1e-3)
    with pytest.raises(ParameterError):
        critical_data(ln, 1.01, excess=0.5)


def test_study_validation():
    with pytest.raises(ParameterError):
        LpLqStudy(0.5, p=1.0)
    with pytest.raises(ParameterError):
        LpLqStudy(0.5, p=2.5)
    with pytest.raises(ParameterError):
        LpLqStudy(0.5, q=1.5)
    with pytest.raises(ParameterError):
        LpLqStudy(0.5, q=math.inf)
    with pytest.raises(ParameterError):
        LpLqStudy(0.5, times=(10, 20, 30, 40, 50))
    with pytest.raises(ParameterError):
        LpLqStudy(1.2)
    with pytest.raises(ParameterError):
        run_lplq_study(LpLqStudy(0.5, data="lorentzian", M=2 ** 12))
    assert LpLqStudy(0.5).predicted_slope == pytest.approx(-0.125)


def test_box_escape_detected():
    with pytest.raises(BoxEscapeError):
        run_lplq_study(LpLqStudy(1.0, X=30.0, M=2 ** 12, data="gaussian:3"))


def test_boundary_share(line):
    u = gaussian_data(line, 1.0)
    assert boundary_share(u, line, 4) < 1e-300 + 1e-200
    assert boundary_share(np.zeros(line.M), line, 2) == 0.0


def test_l2_to_l2_no_power_decay():
    """p = q = 2 predicts slope 0; broad data shows a flat, non-increasing norm."""
    study = LpLqStudy(0.5, p=2.0, q=2.0, data="gaussian:25")
    r = run_lplq_study(study)
    assert study.predicted_slope == 0.0
    assert np.all(np.diff(r.norms) <= 0)
    assert abs(r.fitted_slope) <= 0.01
    assert r.bound_constant_estimate <= 1.0 + 1e-12
