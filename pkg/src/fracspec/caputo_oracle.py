"""Discrete fractional integrals/derivatives and a direct scalar time stepper.

Everything here works from sampled values on a ``TimeGrid`` and never calls a
Mittag-Leffler routine, so it can be used to check the closed-form solvers.

The Caputo rules are product-integration rules:

* ``caputo_l1``: piecewise-linear reconstruction, order ``beta`` in (0, 1].
* ``caputo_l2``: piecewise-constant second derivative from a quadratic on each
  interval with a carried velocity, order ``beta`` in (1, 2).

``solve_scalar_fode`` steps ``sum_i w_i D^{a_i} u + gamma u = 0`` implicitly
with the same rules (the loop itself lives in ``fracspec.kernels``).
"""

import math
from dataclasses import dataclass

import numpy as np

from fracspec import kernels
from fracspec._kernels_py import hat_weights, pow_diff
from fracspec.errors import GridMismatchError, InstabilityError, ParameterError

INSTABILITY_LIMIT = 1e12


@dataclass(frozen=True)
class TimeGrid:
    nodes: np.ndarray
    grading_exponent: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.nodes, dtype=float)
        if t.ndim != 1 or t.size < 3:
            raise ParameterError("nodes", "need at least 3 time nodes")
        if t[0] != 0.0:
            raise ParameterError("nodes", "first node must be 0")
        if not np.all(np.diff(t) > 0):
            raise ParameterError("nodes", "nodes must be strictly increasing")
        if not self.grading_exponent >= 1.0:
            raise ParameterError("grading_exponent", "must be >= 1")
        t.setflags(write=False)
        object.__setattr__(self, "nodes", t)

    @classmethod
    def graded(cls, T, M, r=1.0):
        """Nodes ``T (j/M)^r`` for j = 0..M."""
        if not T > 0:
            raise ParameterError("T", "horizon must be positive")
        if int(M) < 2:
            raise ParameterError("M", "need at least 2 steps")
        j = np.arange(int(M) + 1) / int(M)
        t = T * j ** float(r)
        t[-1] = T
        return cls(t, float(r))

    @classmethod
    def uniform(cls, T, M):
        return cls.graded(T, M, 1.0)

    @property
    def steps(self):
        return self.nodes.size - 1

    @property
    def horizon(self):
        return float(self.nodes[-1])


def default_grading(beta):
    """Mesh grading used when none is given.

    ``max(1, 2/beta)`` for beta <= 1. Above 1 the velocity carries a
    t^(beta - 1) singularity as well, and 1.5 is the smallest exponent that
    keeps the start-up error below the late-time error across (1, 2).
    """
    if beta > 1.0:
        return max(1.5, 2.0 / beta)
    return max(1.0, 2.0 / beta)


@dataclass(frozen=True)
class ScalarFODE:
    """``D^{orders[0]} u + sum_i weights[i] D^{orders[i]} u + gamma u = 0``."""

    orders: tuple
    weights: tuple = None
    gamma: float = 0.0
    u0: float = 1.0
    u1: float = None

    def __post_init__(self):
        orders = tuple(float(a) for a in np.atleast_1d(self.orders))
        weights = (1.0,) + (0.0,) * (len(orders) - 1) if self.weights is None else \
            tuple(float(w) for w in np.atleast_1d(self.weights))
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "weights", weights)
        if not orders:
            raise ParameterError("orders", "need at least the leading order")
        if len(weights) != len(orders):
            raise ParameterError("weights", "need one weight per order")
        if not 0.0 < orders[0] < 2.0:
            raise ParameterError("orders", f"leading order must lie in (0, 2), got {orders[0]}")
        if any(b <= a for a, b in zip(orders[1:], orders[:-1])) or orders[-1] <= 0.0:
            raise ParameterError("orders", "orders must be positive and strictly decreasing")
        if weights[0] != 1.0:
            raise ParameterError("weights", "leading weight must be 1")
        if any(w < 0 for w in weights):
            raise ParameterError("weights", "weights must be non-negative")
        if not self.gamma >= 0.0:
            raise ParameterError("gamma", "eigenvalue must be non-negative")
        if orders[0] > 1.0 and self.u1 is None:
            raise ParameterError("u1", "initial velocity required when the leading order exceeds 1")


def _check_samples(samples, grid):
    f = np.asarray(samples, dtype=float)
    if f.shape != grid.nodes.shape:
        raise GridMismatchError(f"{f.shape[0] if f.ndim else 0} samples for {grid.nodes.size} nodes")
    return f


def rl_integral(samples, grid, beta):
    """Riemann-Liouville integral of order ``beta`` of the piecewise-linear interpolant.

    The moments of ``(t_n - s)^(beta - 1)`` against the two hat functions on each
    interval are integrated in closed form, so polynomials of degree <= 1 are
    handled exactly.
    """
    beta = float(beta)
    if not beta > 0:
        raise ParameterError("beta", "must be positive")
    f = _check_samples(samples, grid)
    return _hat_integral(f, grid.nodes, beta)


def _hat_integral(f, t, p):
    out = np.zeros_like(t)
    g = math.gamma(p)
    for n in range(1, t.size):
        left, right = hat_weights(t, n, p)
        out[n] = (np.dot(left, f[:n]) + np.dot(right, f[1:n + 1])) / g
    return out


def caputo_l1(samples, grid, beta):
    """L1 Caputo derivative for ``beta`` in (0, 1]; backward differences at ``beta = 1``."""
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise ParameterError("beta", f"must lie in (0, 1], got {beta}")
    f = _check_samples(samples, grid)
    t = grid.nodes
    out = np.zeros_like(t)
    h = np.diff(t)
    slope = np.diff(f) / h
    if beta == 1.0:
        out[1:] = slope
        return out
    p = 1.0 - beta
    g = math.gamma(2.0 - beta)
    for n in range(1, t.size):
        w = pow_diff(t[n] - t[:n], h[:n], p)
        out[n] = np.dot(w, slope[:n]) / g
    return out


def second_derivative_pieces(samples, grid, velocity=None):
    """Constant second derivative on each interval ``(t_{j-1}, t_j]`` (entry j).

    On interval j the reconstruction is the quadratic matching u_{j-1}, u_j and
    the carried velocity v_{j-1}; velocities advance by the trapezoid rule
    ``v_j = 2 (u_j - u_{j-1}) / h_j - v_{j-1}``. Without an initial velocity
    the slope at t_0 of the quadratic through the first three nodes is used.
    Quadratic samples are reproduced exactly. Entry 0 is unused.
    """
    f = _check_samples(samples, grid)
    t = grid.nodes
    h = np.diff(t)
    if velocity is None:
        s1, s2 = (f[1] - f[0]) / h[0], (f[2] - f[1]) / h[1]
        velocity = s1 - h[0] * (s2 - s1) / (h[0] + h[1])
    d2 = np.zeros_like(t)
    v = float(velocity)
    for j in range(1, t.size):
        d2[j] = 2.0 * (f[j] - f[j - 1] - h[j - 1] * v) / h[j - 1] ** 2
        v += h[j - 1] * d2[j]
    return d2


def caputo_l2(samples, grid, beta, velocity=None):
    """Caputo derivative of order ``beta`` in (1, 2); exact for quadratics.

    Product rule for the fractional integral of order 2 - beta applied to the
    piecewise-constant second derivative of ``second_derivative_pieces``.
    """
    beta = float(beta)
    if not 1.0 < beta < 2.0:
        raise ParameterError("beta", f"must lie in (1, 2), got {beta}")
    d2 = second_derivative_pieces(samples, grid, velocity)
    t = grid.nodes
    h = np.diff(t)
    out = np.zeros_like(t)
    p = 2.0 - beta
    g = math.gamma(3.0 - beta)
    for n in range(1, t.size):
        w = pow_diff(t[n] - t[:n], h[:n], p)
        out[n] = np.dot(w, d2[1:n + 1]) / g
    return out


def solve_scalar_fode(problem, grid):
    """Sampled solution of the scalar multi-term Caputo problem on ``grid``."""
    if not isinstance(problem, ScalarFODE):
        raise ParameterError("problem", "expected a ScalarFODE")
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(grid)
    u1 = 0.0 if problem.u1 is None else float(problem.u1)
    u, bad = kernels.step_fode(grid.nodes, np.asarray(problem.orders), np.asarray(problem.weights),
                               float(problem.gamma), float(problem.u0), u1, INSTABILITY_LIMIT)
    if bad >= 0:
        raise InstabilityError(f"|u| exceeded {INSTABILITY_LIMIT:g} at t = {grid.nodes[bad]:g}")
    return np.asarray(u)
