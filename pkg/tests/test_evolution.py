import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracspec.caputo_oracle import ScalarFODE, TimeGrid, default_grading, solve_scalar_fode
from fracspec.errors import InsufficientSamplesError, ParameterError
from fracspec.evolution import (ESTIMATES, GAPPED, DataNorms, EvolutionProblem, decay_bound,
                                heat_time_derivative, multiterm_mode, solve, solve_heat, solve_multiterm,
                                solve_wave, standard_times, verify_decay, wave_time_derivative)
from fracspec.mittag_leffler import ml_one, ml_two
from fracspec.spectral_operator import (SpectralCoefficients, dirichlet_laplacian, periodic_laplacian,
                                        sobolev_norm)

# frozen 40-digit values (tests/oracles.py)
E_HALF_MINUS_SQRT2 = 0.33620400244634121285   # E_{0.5}(-sqrt 2)
WAVE_VELOCITY_EXAMPLE = 0.33917116354783111815  # 0.7 E_{1.5,2}(-4 * 0.7^1.5)


@pytest.fixture(scope="module")
def dirichlet4():
    return dirichlet_laplacian(math.pi, 4)


def vec(*v):
    return SpectralCoefficients(np.array(v, dtype=float))


def unit(n, k):
    return SpectralCoefficients(np.eye(n)[k])


# ------------------------------------------------------------- heat

def test_heat_classical(dirichlet4):
    s = solve_heat(dirichlet4, unit(4, 0), 1.0, [1.0])[0]
    assert s.coefficients.values[0] == pytest.approx(math.exp(-1), rel=1e-14)


def test_heat_half_order(dirichlet4):
    s = solve_heat(dirichlet4, unit(4, 0), 0.5, [2.0])[0]
    assert abs(s.coefficients.values[0] - E_HALF_MINUS_SQRT2) < 1e-14


def test_heat_constant_mode_invariant():
    op = periodic_laplacian(5)
    w0 = unit(5, 0)
    for beta in (0.2, 0.7, 1.0):
        for s in solve_heat(op, w0, beta, [0.0, 0.3, 17.0, 1e4]):
            assert np.array_equal(s.coefficients.values, w0.values)


def test_heat_initial_snapshot_exact(dirichlet4):
    w0 = vec(0.3, -1.1, 2.0, 0.7)
    s = solve_heat(dirichlet4, w0, 0.4, [0.0], deltas=(1.0,))[0]
    assert np.array_equal(s.coefficients.values, w0.values)
    assert s.sobolev_norms[1.0] == pytest.approx(sobolev_norm(dirichlet4, w0, 1.0), rel=1e-15)
    assert s.l2_norm == pytest.approx(np.linalg.norm(w0.values), rel=1e-15)


def test_heat_parameter_errors(dirichlet4):
    with pytest.raises(ParameterError):
        solve_heat(dirichlet4, unit(4, 0), 1.5, [1.0])
    with pytest.raises(ParameterError):
        solve_heat(dirichlet4, unit(4, 0), 0.5, [-1.0])
    with pytest.raises(ParameterError):
        solve_heat(dirichlet4, unit(3, 0), 0.5, [1.0])


def test_heat_monotone_decay(dirichlet4):
    w0 = vec(1.0, -0.5, 0.25, 2.0)
    t = standard_times()
    for beta in (0.3, 0.7, 1.0):
        norms = np.array([s.l2_norm for s in solve_heat(dirichlet4, w0, beta, t)])
        assert np.all(np.diff(norms) <= 0)


# ------------------------------------------------------------- wave

def test_wave_initial_condition(dirichlet4):
    w0 = vec(1.0, 2.0, 0, -1)
    s = solve_wave(dirichlet4, w0, vec(0, 0, 0, 0), 1.5, [0.0])[0]
    assert np.array_equal(s.coefficients.values, w0.values)


def test_cosine_limit_cross_check():
    for t in (0.2, 1.0, 2.5):
        assert abs(ml_one(2.0, -4 * t * t).value - math.cos(2 * t)) < 1e-12


def test_wave_velocity_example(dirichlet4):
    s = solve_wave(dirichlet4, vec(0, 0, 0, 0), unit(4, 1), 1.5, [0.7])[0]
    assert abs(s.coefficients.values[1] - WAVE_VELOCITY_EXAMPLE) < 1e-14
    g = TimeGrid.graded(0.7, 4096, default_grading(1.5))
    u = solve_scalar_fode(ScalarFODE((1.5,), gamma=4.0, u0=0.0, u1=1.0), g)
    assert abs(u[-1] - WAVE_VELOCITY_EXAMPLE) <= 5e-4


def test_wave_parameter_errors(dirichlet4):
    with pytest.raises(ParameterError):
        solve_wave(dirichlet4, unit(4, 0), unit(4, 0), 0.5, [1.0])
    with pytest.raises(ParameterError):
        solve_wave(dirichlet4, unit(4, 0), None, 1.5, [1.0])


@pytest.mark.parametrize("beta", [1.2, 1.5, 1.8])
def test_wave_velocity_recovery_rate(dirichlet4, beta):
    """One-sided difference quotients converge to w1 like h^(beta - 1)."""
    w0, w1 = vec(1.0, 0.5, 0, -0.4), vec(0.3, -1.0, 0.5, 0.2)
    errs = []
    for h in (1e-2, 1e-3):
        s = solve_wave(dirichlet4, w0, w1, beta, [0.0, h])
        q = (s[1].coefficients.values - s[0].coefficients.values) / h
        errs.append(np.abs(q - w1.values).max())
    rate = math.log10(errs[0] / errs[1])
    assert rate >= min(1.0, beta - 1.0) - 0.05


@pytest.mark.parametrize("beta", [1.2, 1.5, 1.8])
def test_wave_velocity_recovery_without_displacement(dirichlet4, beta):
    w1 = vec(0.3, -1.0, 0.5, 0.2)
    s = solve_wave(dirichlet4, vec(0, 0, 0, 0), w1, beta, [0.0, 1e-3])
    q = s[1].coefficients.values / 1e-3
    assert np.abs(q - w1.values).max() < 1e-2


# ------------------------------------------------------- time derivative

def test_heat_derivative_classical(dirichlet4):
    t = np.array([0.1, 0.5, 2.0])
    snaps = heat_time_derivative(dirichlet4, unit(4, 2), 1.0, t)
    for s, tt in zip(snaps, t):
        assert s.coefficients.values[2] == pytest.approx(-9 * math.exp(-9 * tt), rel=1e-13)


def test_heat_derivative_kernel_mode():
    op = periodic_laplacian(3)
    assert np.all(heat_time_derivative(op, unit(3, 0), 0.6, [0.5, 3.0])[1].coefficients.values == 0.0)


def test_heat_derivative_matches_finite_difference():
    op = dirichlet_laplacian(math.pi / math.sqrt(2), 2)  # first eigenvalue 2
    h = 1e-5
    d = heat_time_derivative(op, unit(2, 0), 0.7, [0.5])[0].coefficients.values[0]
    up, dn = solve_heat(op, unit(2, 0), 0.7, [0.5 + h, 0.5 - h])
    fd = (up.coefficients.values[0] - dn.coefficients.values[0]) / (2 * h)
    assert abs(d - fd) < 1e-5
    with pytest.raises(ParameterError):
        heat_time_derivative(op, unit(2, 0), 0.7, [0.0])


def test_wave_derivative_at_zero_is_velocity(dirichlet4):
    w1 = vec(1.0, 2.0, 3.0, 4.0)
    s = wave_time_derivative(dirichlet4, vec(1, 1, 1, 1), w1, 1.5, [0.0])[0]
    assert np.array_equal(s.coefficients.values, w1.values)


# ------------------------------------------------------------ multi-term

def multi(kind, beta, w0, w1=None, orders=(), weights=(), horizon=10.0):
    return EvolutionProblem(kind, beta, w0, w1, orders, weights, horizon)


def test_multiterm_validation():
    w = unit(4, 0)
    with pytest.raises(ParameterError):
        multi("multiterm_heat", 0.8, w, None, (0.9,), (1.0,))
    with pytest.raises(ParameterError):
        multi("multiterm_heat", 0.8, w, None, (0.3, 0.5), (1.0, 1.0))
    with pytest.raises(ParameterError):
        multi("multiterm_heat", 0.8, w, None, (0.5,), (-1.0,))
    with pytest.raises(ParameterError):
        multi("multiterm_wave", 1.5, w, None, (0.5,), (1.0,))
    with pytest.raises(ParameterError):
        multi("heat", 0.5, w, None, (0.3,), (1.0,))
    with pytest.raises(ParameterError):
        multi("diffusion", 0.5, w)


def test_multiterm_horizon(dirichlet4):
    p = multi("multiterm_heat", 0.9, unit(4, 0), None, (0.5,), (1.0,), horizon=2.0)
    with pytest.raises(ParameterError):
        solve_multiterm(dirichlet4, p, [1.0, 3.0])
    assert np.array_equal(solve_multiterm(dirichlet4, p, [0.0])[0].coefficients.values, p.w0.values)


def test_multiterm_zero_weights_match_heat(dirichlet4):
    w0 = vec(1.0, -0.5, 0.3, 0.2)
    t = np.geomspace(1e-2, 10, 25)
    p = multi("multiterm_heat", 0.6, w0, None, (0.4, 0.2), (0.0, 0.0))
    a = solve(dirichlet4, p, t)
    b = solve_heat(dirichlet4, w0, 0.6, t)
    for x, y in zip(a, b):
        assert np.abs(x.coefficients.values - y.coefficients.values).max() <= 1e-9


def test_multiterm_zero_weights_match_wave(dirichlet4):
    w0, w1 = vec(1.0, -0.5, 0.3, 0.2), vec(0.0, 1.0, -1.0, 0.5)
    t = np.geomspace(1e-2, 10, 25)
    p = multi("multiterm_wave", 1.7, w0, w1, (1.3, 0.6), (0.0, 0.0))
    a = solve(dirichlet4, p, t)
    b = solve_wave(dirichlet4, w0, w1, 1.7, t)
    for x, y in zip(a, b):
        assert np.abs(x.coefficients.values - y.coefficients.values).max() <= 1e-9


def test_multiterm_kernel_mode_example():
    """u' + D^0.5 u = 0, u(0) = 1 on the zero eigenvalue keeps u = 1."""
    op = periodic_laplacian(3)
    p = multi("multiterm_heat", 1.0, unit(3, 0), None, (0.5,), (1.0,))
    v = solve_multiterm(op, p, [1.0])[0].coefficients.values[0]
    assert abs(v - 1.0) < 1e-14
    g = TimeGrid.graded(1.0, 4096, default_grading(1.0))
    u = solve_scalar_fode(ScalarFODE((1.0, 0.5), (1.0, 1.0), 0.0, 1.0), g)
    assert abs(u[-1] - v) <= 5e-4


def test_multiterm_two_order_example():
    p = multi("multiterm_wave", 1.8, vec(1.0), vec(0.0), (1.2, 0.4), (0.5, 0.3), horizon=2.0)
    v = multiterm_mode(p, 1.0, 0.5, 1.0, 0.0)
    g = TimeGrid.graded(0.5, 4096, default_grading(1.8))
    u = solve_scalar_fode(ScalarFODE((1.8, 1.2, 0.4), (1.0, 0.5, 0.3), 1.0, 1.0, 0.0), g)
    assert abs(u[-1] - v) <= 1e-3


def test_multiterm_velocity_against_stepper():
    p = multi("multiterm_wave", 1.6, vec(0.0), vec(1.0), (1.3, 0.5), (0.7, 0.4), horizon=2.0)
    g = TimeGrid.graded(1.0, 2048, default_grading(1.6))
    u = solve_scalar_fode(ScalarFODE((1.6, 1.3, 0.5), (1.0, 0.7, 0.4), 2.0, 0.0, 1.0), g)
    for j in (512, 1024, 2048):
        assert abs(multiterm_mode(p, 2.0, g.nodes[j], 0.0, 1.0) - u[j]) <= 1e-3


# -------------------------------------------------------------- bounds

def norms(beta, op, w0, w1=None, **kw):
    return DataNorms(beta, op, w0, w1, **kw)


def test_bound_examples(dirichlet4):
    w0, w1 = vec(1.0, 2.0, 0, 0), vec(0.5, 0, 0, 1.0)
    dn = norms(0.5, dirichlet4, w0)
    n0 = sobolev_norm(dirichlet4, w0, 1.0)
    assert decay_bound("heat-2", dirichlet4, 1.0, dn, 0.0) == pytest.approx(n0, rel=1e-15)
    for t in (0.0, 1.0, 1e3):
        assert decay_bound("heat-1", dirichlet4, 1.0, dn, t) == pytest.approx(n0, rel=1e-15)
    assert decay_bound("heat-3", dirichlet4, 1.0, dn, 4.0) == pytest.approx(
        1.5 * sobolev_norm(dirichlet4, w0, -1.0), rel=1e-15)
    dn = norms(1.5, dirichlet4, w0, w1)
    expected = sobolev_norm(dirichlet4, w0, 0.0) + 2 * sobolev_norm(dirichlet4, w1, 0.0)
    assert decay_bound("wave-1", dirichlet4, 0.0, dn, 2.0) == pytest.approx(expected, rel=1e-15)
    expected = sobolev_norm(dirichlet4, w0, 2.0) + 3 * sobolev_norm(dirichlet4, w1, 2.0 - 2 / 1.5)
    assert decay_bound("wave-3", dirichlet4, 2.0, dn, 2.0) == pytest.approx(expected, rel=1e-15)


def test_multi_bound_weights(dirichlet4):
    w0 = vec(1.0, 0, 0, 0)
    dn = norms(0.9, dirichlet4, w0, sub_orders=(0.5, 0.2), sub_weights=(2.0, 3.0))
    t = 4.0
    s = 1 + 2 * t ** 0.4 + 3 * t ** 0.7
    assert decay_bound("multi-heat-1", dirichlet4, 0.0, dn, t) == pytest.approx(s, rel=1e-14)
    assert decay_bound("multi-heat-2", dirichlet4, 0.0, dn, t) == pytest.approx(s / (1 + t ** 0.9), rel=1e-14)


def test_bound_errors(dirichlet4):
    dn = norms(0.5, dirichlet4, unit(4, 0))
    with pytest.raises(ParameterError):
        decay_bound("heat-9", dirichlet4, 0.0, dn, 1.0)
    with pytest.raises(ParameterError):
        decay_bound("wave-1", dirichlet4, 0.0, dn, 1.0)
    with pytest.raises(ParameterError):
        decay_bound("heat-2", periodic_laplacian(3), 0.0, norms(0.5, periodic_laplacian(3), unit(3, 0)), 1.0)
    with pytest.raises(ParameterError):
        decay_bound("heat-1", None, 0.0, DataNorms(0.5), 1.0)


def test_gapped_ids():
    assert set(GAPPED) <= set(ESTIMATES)
    assert len(ESTIMATES) == 14


def test_verify_decay_single_mode_slope(dirichlet4):
    t = np.geomspace(10, 1e4, 121)
    for beta in (0.3, 0.6, 0.9):
        snaps = solve_heat(dirichlet4, unit(4, 0), beta, t)
        r = verify_decay(snaps, "heat-2", 0.0, norms(beta, dirichlet4, unit(4, 0)), dirichlet4)
        assert abs(r.fitted_slope + beta) <= 0.05
        tf = t[t >= 100]
        profile = np.polyfit(np.log(tf), -np.log1p(tf ** beta), 1)[0]
        assert r.theorem_bound_slope == pytest.approx(profile, abs=1e-12)
        assert r.slope_stderr >= 0 and math.isfinite(r.bound_constant_estimate)


def test_verify_decay_constant_mode():
    op = periodic_laplacian(5)
    t = standard_times()
    snaps = solve_heat(op, unit(5, 0), 0.5, t)
    r = verify_decay(snaps, "heat-1", 0.0, norms(0.5, op, unit(5, 0)), op)
    assert abs(r.fitted_slope) <= 0.01
    assert r.bound_constant_estimate == pytest.approx(1.0, rel=1e-14)


def test_verify_decay_sample_checks(dirichlet4):
    dn = norms(0.5, dirichlet4, unit(4, 0))
    few = solve_heat(dirichlet4, unit(4, 0), 0.5, [1, 2, 3, 4])
    with pytest.raises(InsufficientSamplesError):
        verify_decay(few, "heat-1", 0.0, dn)
    narrow = solve_heat(dirichlet4, unit(4, 0), 0.5, np.linspace(1, 50, 20))
    with pytest.raises(InsufficientSamplesError):
        verify_decay(narrow, "heat-1", 0.0, dn)


def test_heat2_sup_before_transition(dirichlet4):
    """The ratio to (1 + t^beta)^-1 peaks before t ~ gamma_min^(-1/beta)."""
    w0 = vec(1.0, 0.5, 0.2, 0.1)
    t = standard_times()
    for beta in (0.3, 0.5, 0.8):
        snaps = solve_heat(dirichlet4, w0, beta, t)
        r = verify_decay(snaps, "heat-2", 0.0, norms(beta, dirichlet4, w0), dirichlet4)
        ratio = r.norms / r.bounds
        t_peak = t[np.argmax(ratio)]
        assert t_peak <= dirichlet4.eigenvalues[0] ** (-1 / beta)
        assert r.bound_constant_estimate <= 1.0


@pytest.mark.parametrize("kind", ["wave-1", "wave-2", "wave-3", "wave-4"])
def test_wave_bounds_finite(dirichlet4, kind):
    w0, w1 = vec(1.0, 0.5, 0.2, 0.1), vec(0.2, -0.4, 0.1, 0.3)
    t = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 101)])
    snaps = solve_wave(dirichlet4, w0, w1, 1.5, t, deltas=(0.0, 2.0))
    for delta in (0.0, 2.0):
        r = verify_decay(snaps, kind, delta, norms(1.5, dirichlet4, w0, w1), dirichlet4)
        assert math.isfinite(r.bound_constant_estimate)


# ---------------------------------------------------------- properties

data = arrays(np.float64, 4, elements=st.floats(-5, 5))


@settings(max_examples=25, deadline=None)
@given(data, data, st.floats(0.05, 1.0), st.floats(0.0, 50.0))
def test_property_heat_linear(a, b, beta, t):
    op = dirichlet_laplacian(math.pi, 4)
    x = solve_heat(op, a + b, beta, [t])[0].coefficients.values
    y = solve_heat(op, a, beta, [t])[0].coefficients.values + solve_heat(op, b, beta, [t])[0].coefficients.values
    assert np.abs(x - y).max() <= 1e-12 * max(1.0, np.abs(x).max())


@settings(max_examples=25, deadline=None)
@given(data, data, data, data, st.floats(1.05, 1.95), st.floats(0.0, 50.0))
def test_property_wave_linear(a0, a1, b0, b1, beta, t):
    op = dirichlet_laplacian(math.pi, 4)

    def run(u, v):
        return solve_wave(op, u, v, beta, [t])[0].coefficients.values

    x = run(a0 + b0, a1 + b1)
    y = run(a0, a1) + run(b0, b1)
    assert np.abs(x - y).max() <= 1e-12 * max(1.0, np.abs(x).max(), np.abs(y).max())


@settings(max_examples=25, deadline=None)
@given(data, st.floats(0.05, 1.0), st.floats(0.0, 100.0), st.floats(0.0, 100.0))
def test_property_heat_norm_non_increasing(a, beta, t1, dt):
    op = dirichlet_laplacian(math.pi, 4)
    s1, s2 = solve_heat(op, a, beta, [t1, t1 + dt])
    assert s2.l2_norm <= s1.l2_norm * (1 + 1e-13)
