"""Closed-form spectral solutions of time-fractional heat/wave type equations.

Every mode of ``D^beta w + L w = 0`` (plus lower-order Caputo terms in the
multi-term case) is a scalar problem solved by Mittag-Leffler functions:

    heat:  w_k(t) = E_beta(-g t^beta) w0_k
    wave:  w_k(t) = E_beta(-g t^beta) w0_k + t E_{beta,2}(-g t^beta) w1_k

and, with sigma_0 = 1 and beta_0 = beta, the multi-term solution

    sum_k sigma_k t^(beta-beta_k) E_{(beta-beta_1..beta-beta_m, beta), beta-beta_k+1}(
        -sigma_1 t^(beta-beta_1), ..., -g t^beta) w0
    + sum_{k: beta_k > 1} sigma_k t^(beta-beta_k+1) E_{(...), beta-beta_k+2}(...) w1.

Each Caputo term contributes initial-data terms according to its own order,
so the velocity only enters through orders above 1.

``decay_bound`` evaluates the time profiles of the a-priori estimates with all
constants set to 1, and ``verify_decay`` checks that the sampled ratio
norm/profile stays bounded and fits log-log slopes.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from fracspec.errors import InsufficientSamplesError, ParameterError
from fracspec.mittag_leffler import heat_derivative_kernel, ml_multivariate, ml_one, ml_two
from fracspec.parallel import pmap
from fracspec.spectral_operator import SpectralCoefficients, sobolev_norm

KINDS = ("heat", "wave", "multiterm_heat", "multiterm_wave")
DEFAULT_HORIZON = 10.0
PER_DECADE = 40


@dataclass(frozen=True)
class EvolutionProblem:
    kind: str
    beta: float
    w0: SpectralCoefficients
    w1: SpectralCoefficients = None
    sub_orders: tuple = ()
    sub_weights: tuple = ()
    horizon: float = DEFAULT_HORIZON

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError("kind", f"expected one of {', '.join(KINDS)}, got {self.kind!r}")
        beta = float(self.beta)
        object.__setattr__(self, "beta", beta)
        orders = tuple(float(b) for b in self.sub_orders)
        weights = tuple(float(s) for s in self.sub_weights)
        object.__setattr__(self, "sub_orders", orders)
        object.__setattr__(self, "sub_weights", weights)
        heatlike = self.kind in ("heat", "multiterm_heat")
        if heatlike and not 0.0 < beta <= 1.0:
            raise ParameterError("beta", f"{self.kind} needs beta in (0, 1], got {beta}")
        if not heatlike and not 1.0 < beta < 2.0:
            raise ParameterError("beta", f"{self.kind} needs beta in (1, 2), got {beta}")
        if heatlike and self.w1 is not None:
            raise ParameterError("w1", f"{self.kind} takes no initial velocity")
        if not heatlike and self.w1 is None:
            raise ParameterError("w1", f"{self.kind} needs an initial velocity")
        if self.w1 is not None and len(self.w1) != len(self.w0):
            raise ParameterError("w1", "w0 and w1 must have the same number of modes")
        if self.kind.startswith("multiterm"):
            if len(orders) != len(weights):
                raise ParameterError("sub_weights", "need one weight per lower order")
            if any(not 0.0 < b < beta for b in orders):
                raise ParameterError("sub_orders", f"lower orders must lie in (0, {beta})")
            if any(b <= a for a, b in zip(orders[1:], orders[:-1])):
                raise ParameterError("sub_orders", "lower orders must be strictly decreasing")
            if any(not s >= 0.0 for s in weights):
                raise ParameterError("sub_weights", "weights must be non-negative")
            if not float(self.horizon) > 0.0:
                raise ParameterError("horizon", "must be positive")
        elif orders or weights:
            raise ParameterError("sub_orders", f"{self.kind} has no lower-order terms")


@dataclass(frozen=True)
class SolutionSnapshot:
    t: float
    coefficients: SpectralCoefficients
    l2_norm: float
    sobolev_norms: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DecayFitResult:
    times: np.ndarray
    norms: np.ndarray
    fitted_slope: float
    slope_stderr: float
    theorem_bound_slope: float
    bound_constant_estimate: float
    bounds: np.ndarray = None


def standard_times(kind="heat", horizon=DEFAULT_HORIZON, per_decade=PER_DECADE):
    """Log-spaced sample times: [1e-2, 1e4] for heat/wave, [1e-2, T] for multi-term."""
    hi = float(horizon) if str(kind).startswith("multi") else 1e4
    decades = math.log10(hi / 1e-2)
    n = max(int(round(per_decade * decades)) + 1, 5)
    return np.geomspace(1e-2, hi, n)


def _times(times, positive=False):
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1 or t.size == 0:
        raise ParameterError("times", "need a non-empty vector of times")
    if not np.all(np.isfinite(t)):
        raise ParameterError("times", "times must be finite")
    if positive and np.any(t <= 0):
        raise ParameterError("times", "times must be positive")
    if np.any(t < 0):
        raise ParameterError("times", "times must be non-negative")
    return t


def _coeffs(op, c, name):
    if not isinstance(c, SpectralCoefficients):
        c = SpectralCoefficients(np.asarray(c, dtype=float), op.label)
    if len(c) != op.size:
        raise ParameterError(name, f"{len(c)} coefficients for {op.size} modes")
    return c


def _snapshots(op, times, table, deltas):
    out = []
    for t, row in zip(times, table):
        c = SpectralCoefficients(np.asarray(row, dtype=float), op.label)
        norms = {float(d): sobolev_norm(op, c, d) for d in deltas}
        out.append(SolutionSnapshot(float(t), c, sobolev_norm(op, c, 0.0), norms))
    return out


def _tabulate(op, times, mode_value, active):
    """Evaluate ``mode_value(k, t)`` for every active mode and time, in parallel."""
    pairs = [(i, k) for i in range(len(times)) for k in active]
    vals = pmap(lambda p: mode_value(p[1], float(times[p[0]])), pairs)
    table = np.zeros((len(times), op.size))
    for (i, k), v in zip(pairs, vals):
        table[i, k] = v
    return table


def _active(*cs):
    mask = np.zeros(cs[0].values.size, dtype=bool)
    for c in cs:
        if c is not None:
            mask |= c.values != 0.0
    return np.nonzero(mask)[0].tolist()


def solve_heat(op, w0, beta, times, deltas=()):
    """Snapshots of the heat-type solution at ``times``."""
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise ParameterError("beta", f"must lie in (0, 1], got {beta}")
    times = _times(times)
    w0 = _coeffs(op, w0, "w0")
    g = op.eigenvalues
    a = w0.values

    def value(k, t):
        if t == 0.0 or g[k] == 0.0:
            return a[k]
        return ml_one(beta, -g[k] * t ** beta).value * a[k]

    return _snapshots(op, times, _tabulate(op, times, value, _active(w0)), deltas)


def solve_wave(op, w0, w1, beta, times, deltas=()):
    """Snapshots of the wave-type solution at ``times``."""
    beta = float(beta)
    if not 1.0 < beta < 2.0:
        raise ParameterError("beta", f"must lie in (1, 2), got {beta}")
    if w1 is None:
        raise ParameterError("w1", "wave problems need an initial velocity")
    times = _times(times)
    w0 = _coeffs(op, w0, "w0")
    w1 = _coeffs(op, w1, "w1")
    g = op.eigenvalues
    a, b = w0.values, w1.values

    def value(k, t):
        if t == 0.0:
            return a[k]
        if g[k] == 0.0:
            return a[k] + t * b[k]
        z = -g[k] * t ** beta
        v = 0.0
        if a[k]:
            v += ml_one(beta, z).value * a[k]
        if b[k]:
            v += t * ml_two(beta, 2.0, z).value * b[k]
        return v

    return _snapshots(op, times, _tabulate(op, times, value, _active(w0, w1)), deltas)


def multiterm_mode(problem, gamma, t, a, b=0.0):
    """Multi-term solution of one mode with eigenvalue ``gamma`` and data (a, b)."""
    if t == 0.0:
        return a
    beta = problem.beta
    orders = (beta,) + problem.sub_orders
    sig = (1.0,) + problem.sub_weights
    betas = tuple(beta - bk for bk in problem.sub_orders) + (beta,)
    zs = tuple(-s * t ** (beta - bk) for s, bk in zip(problem.sub_weights, problem.sub_orders))
    zs = zs + (-gamma * t ** beta,)
    v = 0.0
    for s, bk in zip(sig, orders):
        if s == 0.0:
            continue
        if a:
            lam = beta - bk + 1.0
            v += s * t ** (beta - bk) * ml_multivariate(betas, lam, zs).value * a
        if b and bk > 1.0:
            lam = beta - bk + 2.0
            v += s * t ** (beta - bk + 1.0) * ml_multivariate(betas, lam, zs).value * b
    return v


def solve_multiterm(op, problem, times, deltas=()):
    """Snapshots of the multi-term solution; ``t = 0`` returns w0."""
    if not isinstance(problem, EvolutionProblem) or not problem.kind.startswith("multiterm"):
        raise ParameterError("problem", "expected a multi-term EvolutionProblem")
    times = _times(times)
    if np.any(times > problem.horizon * (1 + 1e-12)):
        raise ParameterError("times", f"times must not exceed the horizon {problem.horizon}")
    w0 = _coeffs(op, problem.w0, "w0")
    w1 = None if problem.w1 is None else _coeffs(op, problem.w1, "w1")
    g = op.eigenvalues
    a = w0.values
    b = np.zeros_like(a) if w1 is None else w1.values

    def value(k, t):
        return multiterm_mode(problem, float(g[k]), t, a[k], b[k])

    return _snapshots(op, times, _tabulate(op, times, value, _active(w0, w1)), deltas)


def solve(op, problem, times, deltas=()):
    """Dispatch on ``problem.kind``."""
    if problem.kind == "heat":
        return solve_heat(op, problem.w0, problem.beta, times, deltas)
    if problem.kind == "wave":
        return solve_wave(op, problem.w0, problem.w1, problem.beta, times, deltas)
    return solve_multiterm(op, problem, times, deltas)


def heat_time_derivative(op, w0, beta, times, w1=None):
    """Time derivative of the heat (or, with ``w1``, wave) solution.

    Per mode ``-g t^(beta-1) E_{beta,beta}(-g t^beta) w0`` plus
    ``E_beta(-g t^beta) w1`` in the wave case.
    """
    beta = float(beta)
    if not 0.0 < beta < 2.0:
        raise ParameterError("beta", f"must lie in (0, 2), got {beta}")
    times = _times(times)
    if beta < 1.0 and np.any(times == 0):
        raise ParameterError("times", "the derivative is singular at t = 0 for beta < 1")
    w0 = _coeffs(op, w0, "w0")
    w1 = None if w1 is None else _coeffs(op, w1, "w1")
    g = op.eigenvalues
    a = w0.values
    b = None if w1 is None else w1.values

    def value(k, t):
        v = 0.0
        if a[k] and g[k]:
            if t == 0.0:
                v = -g[k] * a[k] if beta == 1.0 else 0.0
            else:
                v = heat_derivative_kernel(beta, float(g[k]), t) * a[k]
        if b is not None and b[k]:
            v += (1.0 if t == 0.0 else ml_one(beta, -g[k] * t ** beta).value) * b[k]
        return v

    return _snapshots(op, times, _tabulate(op, times, value, _active(w0, w1)), ())


def wave_time_derivative(op, w0, w1, beta, times):
    if not 1.0 < float(beta) < 2.0:
        raise ParameterError("beta", f"must lie in (1, 2), got {beta}")
    if w1 is None:
        raise ParameterError("w1", "wave problems need an initial velocity")
    return heat_time_derivative(op, w0, beta, times, w1=w1)


# ------------------------------------------------------------ estimates

HEAT_BOUNDS = ("heat-1", "heat-2", "heat-3")
WAVE_BOUNDS = ("wave-1", "wave-2", "wave-3", "wave-4")
MULTI_BOUNDS = tuple("multi-" + k for k in HEAT_BOUNDS + WAVE_BOUNDS)
ESTIMATES = HEAT_BOUNDS + WAVE_BOUNDS + MULTI_BOUNDS
# these need the spectrum bounded away from zero
GAPPED = ("heat-2", "wave-2", "multi-heat-2", "multi-wave-2")


@dataclass
class DataNorms:
    """Sobolev norms of the initial data plus the orders that shape the bounds.

    Norms are looked up in ``values`` keyed by ``(name, delta)``; when the
    coefficients were given, missing entries are computed on demand.
    """

    beta: float
    op: object = None
    w0: SpectralCoefficients = None
    w1: SpectralCoefficients = None
    sub_orders: tuple = ()
    sub_weights: tuple = ()
    values: dict = field(default_factory=dict)

    @classmethod
    def from_problem(cls, op, problem):
        return cls(problem.beta, op, problem.w0, problem.w1, problem.sub_orders, problem.sub_weights)

    def norm(self, name, delta):
        key = (name, round(float(delta), 12))
        if key in self.values:
            return self.values[key]
        c = getattr(self, name)
        if c is None or self.op is None:
            raise ParameterError("data_norms", f"missing norm of {name} in H^{delta:g}")
        v = sobolev_norm(self.op, c, delta)
        self.values[key] = v
        return v

    def weight_sum(self, t):
        """sum_k sigma_k t^(beta - beta_k) with sigma_0 = 1, beta_0 = beta."""
        return 1.0 + sum(s * t ** (self.beta - b) for s, b in zip(self.sub_weights, self.sub_orders))


def _shape(kind, delta, dn, t):
    beta = dn.beta
    tb = t ** beta
    inv = math.inf if t == 0 else t ** -beta
    if kind == "heat-1":
        return dn.norm("w0", delta)
    if kind == "heat-2":
        return dn.norm("w0", delta) / (1.0 + tb)
    if kind == "heat-3":
        return (1.0 + inv) * dn.norm("w0", delta - 2.0)
    if kind == "wave-1":
        return dn.norm("w0", delta) + t * dn.norm("w1", delta)
    if kind == "wave-2":
        return (dn.norm("w0", delta) + t * dn.norm("w1", delta)) / (1.0 + tb)
    if kind == "wave-3":
        return dn.norm("w0", delta) + (1.0 + t) * dn.norm("w1", delta - 2.0 / beta)
    if kind == "wave-4":
        # t (1 + t^-beta) written so that t = 0 gives the limit
        grow = t + (math.inf if t == 0 and beta > 1 else t ** (1.0 - beta))
        return dn.norm("w0", delta) + grow * dn.norm("w1", delta - 2.0)
    if kind == "multi-wave-4":
        return (1.0 + inv) * (dn.norm("w0", delta - 2.0) + t * dn.norm("w1", delta - 2.0))
    return _shape(kind[len("multi-"):], delta, dn, t)


def decay_bound(kind, op, delta, data_norms, t):
    """Time profile of estimate ``kind`` with every constant set to 1."""
    if kind not in ESTIMATES:
        raise ParameterError("kind", f"unknown estimate id {kind!r}")
    t = float(t)
    if not t >= 0:
        raise ParameterError("t", "time must be non-negative")
    if op is not None and kind in GAPPED and op.zero_in_spectrum:
        raise ParameterError("kind", f"{kind} requires 0 outside the spectrum")
    if kind.startswith("wave") and not 1.0 < data_norms.beta < 2.0:
        raise ParameterError("kind", f"{kind} is a wave estimate, beta = {data_norms.beta}")
    if kind.startswith("heat") and not data_norms.beta <= 1.0:
        raise ParameterError("kind", f"{kind} is a heat estimate, beta = {data_norms.beta}")
    v = _shape(kind, float(delta), data_norms, t)
    if kind.startswith("multi-"):
        v = v * data_norms.weight_sum(t)
    return v


def _fit(logt, logy):
    r = stats.linregress(logt, logy)
    return float(r.slope), float(r.stderr)


def verify_decay(snapshots, kind, delta, data_norms, op=None, fit_window=None):
    """Sup of norm/profile over the samples and log-log slopes of both.

    The slope fit uses ``fit_window = (t_lo, t_hi)``, by default the last two
    decades of the sampled times.
    """
    op = op if op is not None else data_norms.op
    if op is None:
        raise ParameterError("op", "an operator is needed to measure the snapshots")
    snaps = sorted(snapshots, key=lambda s: s.t)
    times = np.array([s.t for s in snaps])
    pos = times[times > 0]
    if len(snaps) < 5 or pos.size < 5:
        raise InsufficientSamplesError(f"need at least 5 positive sample times, got {pos.size}")
    if pos[-1] / pos[0] < 100.0 * (1 - 1e-12):
        raise InsufficientSamplesError("sample times must span at least two decades")
    d = float(delta)
    norms = np.array([s.sobolev_norms[d] if d in s.sobolev_norms else sobolev_norm(op, s.coefficients, d)
                      for s in snaps])
    bounds = np.array([decay_bound(kind, op, d, data_norms, t) for t in times])
    ratio = np.zeros_like(norms)
    for i, (n, b) in enumerate(zip(norms, bounds)):
        if math.isinf(b) or n == 0.0:
            ratio[i] = 0.0
        else:
            ratio[i] = math.inf if b == 0.0 else n / b
    lo, hi = fit_window if fit_window is not None else (pos[-1] / 100.0, pos[-1])
    sel = (times >= lo * (1 - 1e-12)) & (times <= hi * (1 + 1e-12)) & (norms > 0) & np.isfinite(bounds)
    sel &= bounds > 0
    if sel.sum() < 5:
        raise InsufficientSamplesError(f"only {int(sel.sum())} usable samples in the fit window")
    lt = np.log(times[sel])
    slope, err = _fit(lt, np.log(norms[sel]))
    bslope, _ = _fit(lt, np.log(bounds[sel]))
    return DecayFitResult(times, norms, slope, err, bslope, float(ratio.max()), bounds)
