"""Time-fractional heat equation on the line by a Fourier multiplier.

The line is approximated by a large periodic box ``[-X, X)`` with ``M``
points. The solution at time t is ``E_alpha(-t^alpha |xi|^(2a))`` applied to the
discrete Fourier transform of the data (``a = 1`` is the Laplacian), and
``run_lplq_study`` fits the decay exponent of ``||w(t)||_q`` against
``-alpha/2 (1/p - 1/q)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from fracspec.errors import AliasingError, BoxEscapeError, ParameterError
from fracspec.evolution import DecayFitResult
from fracspec.mittag_leffler import ml_array
from fracspec.parallel import pmap

DECAY_TOL = 1e-12
ALIAS_TOL = 1e-10
ESCAPE_TOL = 1e-6
LAYER = 0.05


@dataclass(frozen=True)
class PeriodizedLine:
    X: float = 200.0
    M: int = 2 ** 14

    def __post_init__(self):
        if not self.X > 0:
            raise ParameterError("X", "box half-width must be positive")
        M = int(self.M)
        if M < 256 or M & (M - 1):
            raise ParameterError("M", f"need a power of two >= 256, got {self.M}")
        object.__setattr__(self, "M", M)

    @property
    def dx(self):
        return 2.0 * self.X / self.M

    @property
    def x(self):
        return -self.X + self.dx * np.arange(self.M)

    @property
    def xi(self):
        return 2.0 * math.pi * np.fft.fftfreq(self.M, self.dx)

    def check_data(self, u0):
        u0 = np.asarray(u0, dtype=float)
        if u0.shape != (self.M,):
            raise ParameterError("u0", f"expected {self.M} samples, got shape {u0.shape}")
        peak = np.abs(u0).max()
        edge = max(abs(u0[0]), abs(u0[-1]), abs(u0[1]))
        if peak == 0 or edge > DECAY_TOL * peak:
            raise ParameterError("u0", f"data must decay below {DECAY_TOL:g} (relative) at the box edge")
        return u0


def lp_norm(samples, p, dx):
    """Riemann-sum L^p norm ``(sum |u|^p dx)^(1/p)``."""
    p = float(p)
    if not p >= 1:
        raise ParameterError("p", f"need p >= 1, got {p}")
    u = np.abs(np.asarray(samples, dtype=float))
    if math.isinf(p):
        return float(u.max())
    m = u.max()
    if m == 0:
        return 0.0
    return float(m * (np.sum((u / m) ** p) * dx) ** (1.0 / p))


def multiplier(line, alpha, t, power=1.0):
    return ml_array(alpha, 1.0, -(t ** alpha) * np.abs(line.xi) ** (2.0 * power))


def solve_heat_line(u0, line, alpha, t, power=1.0, u0_hat=None):
    """Samples of the solution at time ``t``; ``t = 0`` returns the data."""
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ParameterError("alpha", f"must lie in (0, 1], got {alpha}")
    t = float(t)
    if not t >= 0:
        raise ParameterError("t", "time must be non-negative")
    u0 = line.check_data(u0)
    if t == 0.0:
        return u0.copy()
    uh = np.fft.fft(u0) if u0_hat is None else u0_hat
    m = multiplier(line, alpha, t, power)
    nyq = line.M // 2
    top = np.abs(uh).max()
    if abs(m[nyq] * uh[nyq]) > ALIAS_TOL * top:
        raise AliasingError(
            f"multiplier at the Nyquist frequency still {abs(m[nyq]):.3g} at t = {t:g}; refine the grid")
    return np.fft.ifft(m * uh).real


def boundary_share(u, line, q):
    """Fraction of ``int |u|^q`` carried by the outer 5% of the box."""
    w = np.abs(u) ** q
    layer = np.abs(line.x) > (1.0 - LAYER) * line.X
    total = w.sum()
    return float(w[layer].sum() / total) if total > 0 else 0.0


# ------------------------------------------------------------------ data

def critical_data(line, p, excess=0.01, core=0.5, window=None):
    """Data just inside L^p: ``|x|^-a`` with a = 1/p + excess, smoothed at ``core``.

    The smoothed profile ``(core^2 + x^2)^(-a/2)`` is short of ``|x|^-a`` by a
    mass ``core^(1-a) * C_a``; a Gaussian bump of width ``core`` puts it back so
    the solution reaches its self-similar regime at the start of the study. A
    window ``exp(-(x/W)^8)`` with W = X/1.6 brings the data to ~1e-19 at the
    box edge.
    """
    a = 1.0 / float(p) + float(excess)
    if not 0.0 < a < 1.0:
        raise ParameterError("excess", f"power 1/p + excess = {a} must lie in (0, 1)")
    x = line.x
    W = line.X / 1.6 if window is None else float(window)
    deficit = -math.sqrt(math.pi) * math.gamma((a - 1.0) / 2.0) / math.gamma(a / 2.0)
    kappa = deficit * core ** (1.0 - a) / (core * math.sqrt(math.pi))
    u = (core * core + x * x) ** (-a / 2.0) + kappa * np.exp(-(x / core) ** 2)
    return u * np.exp(-(x / W) ** 8)


def gaussian_data(line, sigma=1.0):
    return np.exp(-line.x ** 2 / (2.0 * sigma * sigma))


@dataclass(frozen=True)
class LpLqStudy:
    alpha: float
    p: float = 4.0 / 3.0
    q: float = 4.0
    times: tuple = tuple(np.geomspace(10.0, 1e3, 21))
    data: str = "critical"
    X: float = 200.0
    M: int = 2 ** 14
    power: float = 1.0

    def __post_init__(self):
        if not 0.0 < float(self.alpha) <= 1.0:
            raise ParameterError("alpha", f"must lie in (0, 1], got {self.alpha}")
        p, q = float(self.p), float(self.q)
        if not 1.0 < p <= 2.0:
            raise ParameterError("p", f"need 1 < p <= 2, got {p}")
        if not 2.0 <= q < math.inf:
            raise ParameterError("q", f"need 2 <= q < inf, got {q}")
        if not 1.0 / p - 1.0 / q < 2.0:
            raise ParameterError("q", "need 1/p - 1/q < 2")
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 5 or np.any(t <= 0):
            raise ParameterError("times", "need at least 5 positive times")
        if t.max() / t.min() < 100.0 * (1 - 1e-12):
            raise ParameterError("times", "times must span at least two decades")
        if not float(self.power) > 0:
            raise ParameterError("power", "must be positive")
        object.__setattr__(self, "times", tuple(float(v) for v in t))

    @property
    def predicted_slope(self):
        return -float(self.alpha) / 2.0 * (1.0 / self.p - 1.0 / self.q)

    def initial_data(self, line):
        kind, _, arg = str(self.data).partition(":")
        if kind == "critical":
            return critical_data(line, self.p, float(arg) if arg else 0.01)
        if kind == "gaussian":
            return gaussian_data(line, float(arg) if arg else 1.0)
        raise ParameterError("data", f"unknown initial data {self.data!r}")


def run_lplq_study(study):
    """Fitted log-log slope of ``||w(t)||_q``; bounds are ``t^slope ||w0||_p``.

    ``bound_constant_estimate`` is the sup over the samples of
    ``||w(t)||_q / (t^predicted ||w0||_p)``.
    """
    line = PeriodizedLine(study.X, study.M)
    u0 = line.check_data(study.initial_data(line))
    uh = np.fft.fft(u0)
    times = np.asarray(study.times)

    def measure(t):
        u = solve_heat_line(u0, line, study.alpha, t, study.power, u0_hat=uh)
        share = boundary_share(u, line, study.q)
        if share > ESCAPE_TOL:
            raise BoxEscapeError(
                f"{share:.3g} of the L^{study.q:g} mass lies next to the box edge at t = {t:g}; enlarge X")
        return lp_norm(u, study.q, line.dx)

    norms = np.array(pmap(measure, times))
    n0 = lp_norm(u0, study.p, line.dx)
    bounds = times ** study.predicted_slope * n0
    fit = stats.linregress(np.log(times), np.log(norms))
    return DecayFitResult(times, norms, float(fit.slope), float(fit.stderr),
                          study.predicted_slope, float(np.max(norms / bounds)), bounds)
