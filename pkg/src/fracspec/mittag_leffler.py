"""Real-argument Mittag-Leffler functions.

Two-parameter evaluation picks one of four routes by a-priori error estimate:

* ``taylor_series``        defining power series, compensated summation;
* ``asymptotic_expansion`` algebraic large-|z| series truncated at its
  smallest term, plus the exponential residue terms;
* ``integral_representation`` Hankel contour collapsed onto the negative real
  axis (adaptive quadrature) plus the same residues; covers the band where
  the Taylor terms already cancel badly but the asymptotic series is not yet
  accurate;
* ``multishell_series``    multivariate series summed by total degree.

The multivariate function with several large non-positive arguments is
evaluated by inverting its Laplace transform ``s^-lam / (1 - sum z_i s^-b_i)``
at t = 1 on the same collapsed contour (also reported as
``integral_representation``), with the residues at the zeros of the
denominator located by Newton's method and counted by the argument principle.
"""

import cmath
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from fracspec import kernels
from fracspec.errors import NonConvergenceError, ParameterError, PoleError

TAYLOR = "taylor_series"
ASYMPTOTIC = "asymptotic_expansion"
INTEGRAL = "integral_representation"
MULTISHELL = "multishell_series"

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.6150291621406,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_GAMMA_MAX = 171.6243769563027

EPS = 2.220446049250313e-16
Z_CAP = 1e8
# Taylor route is taken while the absolute term sum stays below this
TAYLOR_SUM_LIMIT = 40.0
# asymptotic route needs its truncation estimate below this
ASYMPTOTIC_TOL = 1e-14
# positive arguments: Taylor while z**(1/alpha) is below this
POSITIVE_SWITCH = 40.0
# below this distance from alpha = 1 the contour integrand develops a spike
NEAR_ONE = 0.05
# Laplace inversion of the multivariate function loses accuracy when the
# dominant root of the transform denominator is tiny (never needed: small
# arguments go to the series)
INVERSION_MIN_ROOT = 1e-3
# ... and when a pole of the transform hugs the branch cut (orders next to 1)
CUT_CLEARANCE = 1e-3


@dataclass(frozen=True)
class EvalReport:
    value: float
    terms_used: int
    method: str
    est_abs_error: float

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class TwoParamML:
    alpha: float
    rho: float

    def __post_init__(self):
        _check_two(self.alpha, self.rho)

    def __call__(self, z):
        return ml_two(self.alpha, self.rho, z)


@dataclass(frozen=True)
class MultiML:
    betas: tuple
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        _check_multi(self.betas, self.lam)

    def __call__(self, zs):
        return ml_multivariate(self.betas, self.lam, zs)


def _check_two(alpha, rho):
    if not (math.isfinite(alpha) and alpha > 0):
        raise ParameterError("alpha", f"must be a finite positive number, got {alpha!r}")
    if not math.isfinite(rho):
        raise ParameterError("rho", f"must be finite, got {rho!r}")


def _check_multi(betas, lam):
    if len(betas) == 0:
        raise ParameterError("betas", "at least one order is required (m >= 1)")
    for b in betas:
        if not (math.isfinite(b) and b > 0):
            raise ParameterError("betas", f"orders must be finite and positive, got {b!r}")
    if not math.isfinite(lam):
        raise ParameterError("lam", f"must be finite, got {lam!r}")


# ---------------------------------------------------------------- gamma

def _is_pole(x):
    return x <= 0 and x == math.floor(x)


def _sinpi(x):
    # sin(pi x) with argument reduction so large |x| keeps full accuracy
    r = math.fmod(x, 2.0)
    if r > 1.0:
        r -= 2.0
    elif r < -1.0:
        r += 2.0
    if r > 0.5:
        r = 1.0 - r
    elif r < -0.5:
        r = -1.0 - r
    return math.sin(math.pi * r)


def _lanczos(x):
    # valid for x >= 0.5; accurate to a few ulp only for moderate x, see _gamma_pos
    x -= 1.0
    acc = _LANCZOS[0]
    for i in range(1, 9):
        acc += _LANCZOS[i] / (x + i)
    t = x + (_LANCZOS_G + 0.5)
    half = t ** (0.5 * (x + 0.5))
    return math.sqrt(2.0 * math.pi) * half * math.exp(-t) * half * acc


# The 9-term fit drifts towards a relative bias of about 2e-13 as x grows, so
# large arguments are pulled back into [_BASE, _BASE + 1) and rebuilt with the
# exact recurrence Gamma(x + 1) = x Gamma(x) (half an ulp per factor).
_BASE = 10.0


def _gamma_pos(x):
    # Gamma(x) for 0.5 <= x <= _GAMMA_MAX
    if x == math.floor(x) and x <= 23:
        return float(math.factorial(int(x) - 1))
    if x < _BASE + 1.0:
        return _lanczos(x)
    k = int(math.floor(x - _BASE))
    x0 = x - k
    g = _lanczos(x0)
    for j in range(k):
        g *= x0 + j
    return g


def gamma_real(x):
    """Gamma function on the real line (Lanczos plus reflection)."""
    x = float(x)
    if not math.isfinite(x):
        raise ParameterError("x", f"must be finite, got {x!r}")
    if _is_pole(x):
        raise PoleError(f"Gamma has a pole at x = {x!r}")
    if x > _GAMMA_MAX:
        raise OverflowError(f"Gamma({x!r}) exceeds the double-precision range")
    if x < 0.5:
        s = _sinpi(x)
        if 1.0 - x <= _GAMMA_MAX:
            return math.pi / (s * _gamma_pos(1.0 - x))
        # Gamma(1 - x) overflows; the quotient underflows towards zero
        return math.copysign(math.exp(math.log(math.pi / abs(s)) - math.lgamma(1.0 - x)), s)
    return _gamma_pos(x)


def rgamma(x):
    """1/Gamma(x), zero at the poles and for large positive x."""
    x = float(x)
    if _is_pole(x):
        return 0.0
    if x > _GAMMA_MAX:
        return math.exp(-math.lgamma(x))
    if x < 0.5:
        # reflection: 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi
        if 1.0 - x <= _GAMMA_MAX:
            return _sinpi(x) * _gamma_pos(1.0 - x) / math.pi
        raise OverflowError(f"1/Gamma({x!r}) exceeds the double-precision range")
    return 1.0 / _gamma_pos(x)


def _scaled_rgamma(x, logscale):
    # exp(logscale) / Gamma(x) without intermediate overflow
    if _is_pole(x):
        return 0.0
    if x < 0.5 and 1.0 - x > _GAMMA_MAX:
        s = _sinpi(x)
        return math.copysign(math.exp(logscale + math.lgamma(1.0 - x) - math.log(math.pi / abs(s))), s)
    return rgamma(x) * math.exp(logscale)


def _log_abs_rgamma(x):
    # log|1/Gamma(x)|; -inf at poles
    if _is_pole(x):
        return -math.inf
    return -math.lgamma(x)


class _Neumaier:
    __slots__ = ("s", "c", "abs")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0
        self.abs = 0.0

    def add(self, v):
        t = self.s + v
        if abs(self.s) >= abs(v):
            self.c += (self.s - t) + v
        else:
            self.c += (v - t) + self.s
        self.s = t
        self.abs += abs(v)

    @property
    def value(self):
        return self.s + self.c


# ------------------------------------------------------- two-parameter ML

def _taylor(alpha, rho, z, max_terms=200000):
    acc = _Neumaier()
    if z == 0.0:
        v = rgamma(rho)
        return EvalReport(v, 1, TAYLOR, 0.0)
    logz = math.log(abs(z))
    neg = z < 0
    small = 0
    last = 0.0
    k = 0
    while k < max_terms:
        b = alpha * k + rho
        if _is_pole(b):
            term = 0.0
        elif b < 160.0 and k * logz < 700.0:
            term = z ** k * rgamma(b)
        else:
            mag = k * logz + _log_abs_rgamma(b)
            term = math.exp(mag) if mag > -745 else 0.0
            if b < 0 and math.ceil(-b) % 2 == 1:
                term = -term
            if neg and k % 2 == 1:
                term = -term
        acc.add(term)
        last = abs(term)
        # terms have passed their peak once b exceeds |z|^(1/alpha)
        if b > 1.0 and k * logz < math.lgamma(b) and last <= EPS * 1e-2 * max(abs(acc.value), 1e-300):
            small += 1
            if small >= 3:
                break
        else:
            small = 0
        k += 1
    else:
        raise NonConvergenceError(f"Taylor series for E_{{{alpha},{rho}}}({z}) did not converge")
    value = acc.value
    err = 4.0 * EPS * acc.abs + last
    return EvalReport(value, k + 1, TAYLOR, err)


def _residue_sum(alpha, rho, s):
    # poles of u^(alpha-rho)/(u^alpha + s) on the principal sheet (alpha > 1)
    if alpha <= 1.0:
        return 0.0
    zz = s ** (1.0 / alpha) * cmath.exp(1j * math.pi / alpha)
    return (2.0 / alpha) * (zz ** (1.0 - rho) * cmath.exp(zz)).real


def _asymptotic_plan(alpha, rho, s):
    """Number of algebraic terms and the truncation estimate for E(-s)."""
    logs = math.log(s)
    best = math.inf
    best_k = 1
    k = 1
    # envelope |Gamma(alpha k + 1 - rho)| / (pi s^k) of 1/Gamma(rho - alpha k) s^-k
    while k < 2000:
        env = math.lgamma(alpha * k + 1.0 - rho) - k * logs if alpha * k + 1.0 - rho > 0 else -k * logs
        if env < best:
            best, best_k = env, k
            if env < -40.0:
                break  # further terms are below double resolution
        elif env > best + 5.0:
            break
        k += 1
    else:
        # the envelope is still falling: the series is too slow to be useful here
        return best_k, math.inf
    trunc = math.exp(best) / math.pi
    logx = logs / alpha
    if logx > 700.0:
        return best_k, trunc
    x = math.exp(logx)
    tail = math.exp(-x) * max(1.0, x ** max(0.0, 1.0 - rho)) / alpha
    return best_k, trunc + tail


def _asymptotic_negative(alpha, rho, s, nterms, err):
    logs = math.log(s)
    acc = _Neumaier()
    for k in range(1, nterms):
        acc.add((-1.0) ** (k + 1) * _scaled_rgamma(rho - alpha * k, -k * logs))
    acc.add(_residue_sum(alpha, rho, s))
    return EvalReport(acc.value, nterms, ASYMPTOTIC, err + 4.0 * EPS * acc.abs)


def _asymptotic_positive(alpha, rho, z):
    y = z ** (1.0 / alpha)
    try:
        lead = math.exp(y + (1.0 - rho) * math.log(y)) / alpha
    except OverflowError:
        raise OverflowError(f"E_{{{alpha},{rho}}}({z}) exceeds the double-precision range") from None
    acc = _Neumaier()
    acc.add(lead)
    for k in range(1, 12):
        acc.add(-(z ** -k) * rgamma(rho - alpha * k))
    err = 8.0 * EPS * abs(lead) * (1.0 + y)
    return EvalReport(acc.value, 12, ASYMPTOTIC, err)


def _quad(f, a, b, **kw):
    """scipy quad returning (value, error, number of integrand evaluations)."""
    out = integrate.quad(f, a, b, full_output=1, **kw)
    return out[0], out[1], int(out[2]["neval"])


def _integral_negative(alpha, rho, s):
    """E_{alpha,rho}(-s) from the collapsed Hankel contour, rho < 1 + alpha."""
    if alpha == 1.0:
        return _integral_alpha_one(rho, s)
    if abs(alpha - 1.0) < NEAR_ONE:
        return _integral_near_one(alpha, rho, s)
    sb = math.sin(math.pi * rho)
    sab = math.sin(math.pi * (alpha - rho))
    ca = math.cos(math.pi * alpha)
    kw = dict(epsabs=1e-16, epsrel=1e-13, limit=400)
    if alpha < 1.0:
        # in u = r^alpha the rational factor is smooth and only exp(-u^(1/alpha))
        # and the endpoint weight u^((1-rho)/alpha) remain
        ia = 1.0 / alpha

        def f(u):
            return math.exp(-u ** ia) * (u * sb - s * sab) / (u * u + 2.0 * s * u * ca + s * s)

        c = (1.0 - rho) * ia
        top = (s ** ia + 60.0) ** alpha
        v1, e1, n1 = _quad(f, 0.0, s, weight="alg", wvar=(c, 0.0), **kw)
        v2, e2, n2 = _quad(lambda u: f(u) * u ** c, s, top, **kw)
        v1, e1, v2, e2 = v1 * ia, e1 * ia, v2 * ia, e2 * ia
    else:
        def f(r):
            ra = r ** alpha
            return math.exp(-r) * (ra * sb - s * sab) / (ra * ra + 2.0 * s * ra * ca + s * s)

        b = min(max(s ** (1.0 / alpha), 1e-3), 60.0)
        v1, e1, n1 = _quad(f, 0.0, b, weight="alg", wvar=(alpha - rho, 0.0), **kw)
        v2, e2, n2 = _quad(lambda r: f(r) * r ** (alpha - rho), b, b + 60.0, **kw)
    res = _residue_sum(alpha, rho, s)
    value = (v1 + v2) / math.pi + res
    err = (e1 + e2) / math.pi + 8.0 * EPS * (abs(v1 + v2) / math.pi + abs(res))
    return EvalReport(value, n1 + n2, INTEGRAL, err)


def _integral_near_one(alpha, rho, s):
    """The u = r^alpha integral for alpha close to 1.

    The kernel is rewritten as ``((u - u*) sin(pi rho) - w cos(pi rho)) /
    ((u - u*)^2 + w^2)`` with u* = -s cos(pi alpha) and w = s sin(pi alpha),
    a spike of width |w| that sharpens as alpha -> 1. On [u*/2, 2u*] the
    smooth factor is replaced by its quadratic Taylor polynomial at u*, whose
    product with the kernel integrates in closed form, so quadrature only
    sees a remainder that vanishes to third order at the spike.
    """
    ia = 1.0 / alpha
    c = (1.0 - rho) * ia
    half = _sinpi(0.5 * (1.0 - alpha))  # cos(pi alpha / 2)
    ustar = s * (1.0 - 2.0 * half * half)
    w = s * _sinpi(1.0 - alpha)
    sr, cr = _sinpi(rho), _sinpi(rho + 0.5)
    top = (s ** ia + 60.0) ** alpha
    lo, hi = 0.5 * ustar, min(2.0 * ustar, top)
    kw = dict(epsabs=1e-16, epsrel=1e-13, limit=400)

    def kernel(u):
        d = u - ustar
        return (d * sr - w * cr) / (d * d + w * w)

    def g(u):
        return math.exp(-u ** ia) * u ** c

    gs = g(ustar)
    l1 = c / ustar - ia * ustar ** (ia - 1.0)
    l2 = -c / ustar ** 2 - ia * (ia - 1.0) * ustar ** (ia - 2.0)
    gp, gpp = gs * l1, 0.5 * gs * (l1 * l1 + l2)

    def rest(u):
        d = u - ustar
        return (g(u) - gs - d * (gp + d * gpp)) * kernel(u)

    def exact(d):
        # antiderivative of (gs + gp d + gpp d^2) * kernel in d = u - u*
        r2 = d * d + w * w
        lg, at = math.log(r2), math.atan(d / w)
        m0 = 0.5 * sr * lg - cr * at
        m1 = sr * (d - w * at) - 0.5 * cr * w * lg
        m2 = sr * 0.5 * (d * d - w * w * lg) - cr * w * (d - w * at)
        return gs * m0 + gp * m1 + gpp * m2

    v1, e1, n1 = _quad(lambda u: math.exp(-u ** ia) * kernel(u), 0.0, lo, weight="alg", wvar=(c, 0.0), **kw)
    v2, e2, n2 = _quad(rest, lo, hi, points=[ustar], **kw)
    v3 = exact(hi - ustar) - exact(lo - ustar)
    v4, e4, n4 = (_quad(lambda u: g(u) * kernel(u), hi, top, **kw) if hi < top else (0.0, 0.0, 0))
    res = _residue_sum(alpha, rho, s)
    v = (v1 + v2 + v3 + v4) * ia
    value = v / math.pi + res
    err = (e1 + e2 + e4) * ia / math.pi + 8.0 * EPS * (abs(v) / math.pi + abs(res) + gs)
    return EvalReport(value, n1 + n2 + n4, INTEGRAL, err)


def _integral_alpha_one(rho, s):
    # E_{1,rho}(-s) = (1/Gamma(rho-1)) int_0^1 exp(-s x) (1-x)^(rho-2) dx for rho > 1
    if rho == 1.0:
        return EvalReport(math.exp(-s), 1, INTEGRAL, EPS * math.exp(-s))
    if rho < 1.0:
        up = _integral_alpha_one(rho + 1.0, s)
        v = rgamma(rho) - s * up.value
        return EvalReport(v, up.terms_used, INTEGRAL, s * up.est_abs_error + 4 * EPS * abs(rgamma(rho)))
    v, e, n = _quad(lambda x: math.exp(-s * x), 0.0, 1.0, weight="alg", wvar=(0.0, rho - 2.0),
                    epsabs=1e-16, epsrel=1e-13, limit=200)
    c = rgamma(rho - 1.0)
    return EvalReport(c * v, n, INTEGRAL, abs(c) * e + 4 * EPS * abs(c * v))


def _negative(alpha, rho, s):
    # sum of |terms| of the Taylor series is E_{alpha,rho}(+s) ~ exp(x) x^(1-rho) / alpha
    # with x = s^(1/alpha); compared in logs since x overflows for small alpha
    logx = math.log(s) / alpha
    log_sum = math.exp(min(logx, 700.0)) + (1.0 - rho) * logx - math.log(alpha)
    # the large-x estimate is useless for small x; there the terms are
    # bounded by s^k / min Gamma and the series is always benign
    if s <= 1.0 or log_sum <= math.log(TAYLOR_SUM_LIMIT):
        return _taylor(alpha, rho, -s)
    nterms, trunc = _asymptotic_plan(alpha, rho, s)
    if trunc <= ASYMPTOTIC_TOL:
        return _asymptotic_negative(alpha, rho, s, nterms, trunc)
    # the integral needs rho < 1 + alpha; keep a margin so its endpoint
    # weight r^(alpha - rho) stays well away from non-integrable
    if rho >= 0.75 + alpha and alpha != 1.0:
        # E_{a,r}(z) = (E_{a,r-a}(z) - 1/Gamma(r-a)) / z
        low = _negative(alpha, rho - alpha, s)
        v = (rgamma(rho - alpha) - low.value) / s
        err = (low.est_abs_error + 4 * EPS * abs(rgamma(rho - alpha))) / s
        return EvalReport(v, low.terms_used, low.method, err)
    return _integral_negative(alpha, rho, s)


def ml_two(alpha, rho, z, *, z_cap=Z_CAP):
    """Two-parameter Mittag-Leffler function E_{alpha,rho}(z) for real z."""
    alpha = float(alpha)
    rho = float(rho)
    z = float(z)
    _check_two(alpha, rho)
    if not math.isfinite(z):
        raise ParameterError("z", f"must be finite, got {z!r}")
    if abs(z) > z_cap:
        raise ParameterError("z", f"|z| = {abs(z):g} exceeds the cap {z_cap:g}")
    if z == 0.0:
        return _taylor(alpha, rho, 0.0)
    if alpha == 1.0 and rho == 1.0:
        try:
            v = math.exp(z)
        except OverflowError:
            raise OverflowError(f"E_{{1.0,1.0}}({z}) exceeds the double-precision range") from None
        return EvalReport(v, 1, TAYLOR, EPS * v)
    if z > 0:
        if z ** (1.0 / alpha) <= POSITIVE_SWITCH:
            return _taylor(alpha, rho, z)
        return _asymptotic_positive(alpha, rho, z)
    return _negative(alpha, rho, -z)


def ml_one(alpha, z, **kw):
    """E_alpha(z) = E_{alpha,1}(z)."""
    return ml_two(alpha, 1.0, z, **kw)


# ---------------------------------------------------------- multivariate

# ------------------------------------------------------- vectorized

def _taylor_array(alpha, rho, s):
    # E_{alpha,rho}(-s) by the power series for an array of moderate s >= 0
    smax = float(s.max())
    coefs = []
    k = 0
    logm = math.log(smax) if smax > 0 else -math.inf
    while True:
        b = alpha * k + rho
        coefs.append((-1.0) ** k * rgamma(b))
        if b > 1.0 and k > 0 and (smax == 0 or k * logm - math.lgamma(b) < -46.0):
            break
        k += 1
    c = np.array(coefs)
    powers = s[None, :] ** np.arange(len(c))[:, None]
    return (c[:, None] * powers).sum(axis=0)


def _asymptotic_array(alpha, rho, s):
    """Algebraic series for an array of large s; NaN where it is not accurate."""
    kmax = max(2, min(300, int(150.0 / alpha)))
    ks = np.arange(1, kmax + 1)
    arg = alpha * ks + 1.0 - rho
    lg = np.array([math.lgamma(a) if a >= 1.0 else 0.0 for a in arg])
    logs = np.log(s)
    env = lg[:, None] - ks[:, None] * logs[None, :]
    # truncate at the first term below double resolution, else at the
    # smallest envelope value before it turns upwards
    run = np.minimum.accumulate(env, axis=0)
    rose = np.cumsum(env > run + 5.0, axis=0) > 0
    best = np.argmin(np.where(rose, np.inf, env), axis=0)
    hit = env < -40.0
    nterms = np.where(hit.any(axis=0), np.argmax(hit, axis=0), best) + 1
    cols = np.arange(s.size)
    with np.errstate(over="ignore"):
        x = s ** (1.0 / alpha)
        tail = np.where(np.isinf(x), 0.0, np.exp(-x) * np.maximum(1.0, x ** max(0.0, 1.0 - rho)) / alpha)
    trunc = np.exp(env[nterms - 1, cols]) / math.pi + tail
    d = np.array([(-1.0) ** (k + 1) * rgamma(rho - alpha * k) for k in ks])
    terms = d[:, None] * np.exp(-ks[:, None] * logs[None, :])
    terms[ks[:, None] >= nterms[None, :]] = 0.0
    value = terms.sum(axis=0)
    if alpha > 1.0:
        zz = s.astype(complex) ** (1.0 / alpha) * cmath.exp(1j * math.pi / alpha)
        value = value + (2.0 / alpha) * (zz ** (1.0 - rho) * np.exp(zz)).real
    return np.where(trunc <= ASYMPTOTIC_TOL, value, np.nan)


def ml_array(alpha, rho, z):
    """E_{alpha,rho}(z) elementwise for a real array ``z``.

    Uses the same routes as ``ml_two`` but evaluates the power series and the
    algebraic series for all entries at once; entries in the band between the
    two (and positive z) fall back to ``ml_two``.
    """
    alpha = float(alpha)
    rho = float(rho)
    _check_two(alpha, rho)
    z = np.asarray(z, dtype=float)
    flat = z.ravel()
    if not np.all(np.isfinite(flat)):
        raise ParameterError("z", "arguments must be finite")
    out = np.empty_like(flat)
    if alpha == 1.0 and rho == 1.0:
        with np.errstate(over="raise"):
            try:
                out = np.exp(flat)
            except FloatingPointError:
                raise OverflowError("E_1(z) exceeds double range") from None
        return out.reshape(z.shape)
    neg = flat <= 0
    s = -flat[neg]
    val = np.full(s.size, np.nan)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        x = s ** (1.0 / alpha)
        tsum = np.where(x > 0, np.exp(np.minimum(x, 700.0)) * x ** (1.0 - rho) / alpha, 1.0)
    tay = (s <= 1.0) | (tsum <= TAYLOR_SUM_LIMIT)
    if tay.any():
        val[tay] = _taylor_array(alpha, rho, s[tay])
    if (~tay).any():
        val[~tay] = _asymptotic_array(alpha, rho, s[~tay])
    for i in np.nonzero(np.isnan(val))[0]:
        val[i] = ml_two(alpha, rho, -s[i]).value
    out[neg] = val
    for i in np.nonzero(~neg)[0]:
        out[i] = ml_two(alpha, rho, flat[i]).value
    return out.reshape(z.shape)


# ------------------------------------------------ multivariate, inversion

def _dominant_root(bs, qs):
    """Positive R with sum q_i R^-b_i = 1; the series terms sum to about e^R."""
    lq = [math.log(q) for q in qs]
    # work in u = log R; the largest single term brackets the root within log(m)/min(b)
    hi = max(l / b for b, l in zip(bs, lq)) + math.log(len(bs)) / min(bs) + 1.0
    lo = min(l / b for b, l in zip(bs, lq)) - 1.0

    def g(u):  # decreasing in u
        return sum(math.exp(l - b * u) for b, l in zip(bs, lq)) - 1.0

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    return math.exp(hi)


def _winding_count(bs, qs, radius):
    # zeros of G(s) = 1 + sum q_i s^-b_i with 0 < arg s < pi, by the argument
    # principle on the boundary of the upper half annulus (G > 0 on the
    # positive axis, so that edge contributes nothing)
    b = np.asarray(bs)[:, None]
    lq = np.log(np.asarray(qs))[:, None]

    def G(logs):  # G as a function of log s; q s^-b formed in log space
        return 1.0 + np.sum(np.exp(lq - b * logs[None, :]), axis=0)

    inner = radius * 1e-9
    th = np.linspace(0.0, math.pi, 2001)
    lr = np.log(np.geomspace(radius, inner, 4001))
    g = np.concatenate([G(math.log(radius) + 1j * th),
                        # upper lip of the cut, arg s = pi exactly
                        G(lr + 1j * math.pi),
                        G(math.log(inner) + 1j * th[::-1])])
    ph = np.unwrap(np.angle(g))
    return int(round((ph[-1] - ph[0]) / (2.0 * math.pi)))


def _cut_clearance(bs, qs):
    """Smallest |G| / (1 + sum |q_i s^-b_i|) along the negative axis.

    Small values mean a zero of G sits on or next to the cut, where the
    inversion integrand has a pole too sharp to integrate.
    """
    b = np.asarray(bs)[:, None]
    lq = np.log(np.asarray(qs))[:, None]
    rot = np.exp(-1j * math.pi * b)

    def rel(u):  # u = log r, scalar or array
        e = np.exp(lq - b * np.atleast_1d(u)[None, :])
        v = np.abs(1.0 + np.sum(e * rot, axis=0)) / (1.0 + np.sum(e, axis=0))
        return v if np.ndim(u) else float(v[0])

    R = _dominant_root(bs, qs)
    grid = np.log(R) + np.linspace(-12.0, 12.0, 2401)
    vals = rel(grid)
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    fine = optimize.minimize_scalar(rel, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(min(vals[i], fine.fun))


@functools.lru_cache(maxsize=4096)
def _upper_zeros(bs, qs):
    """Zeros of 1 + sum q_i s^-b_i on the upper half of the principal sheet."""
    if max(bs) <= 1.0:
        return ()  # Im G < 0 throughout the upper half plane
    radius = _dominant_root(bs, qs) * 1.5
    count = _winding_count(bs, qs, radius)
    if count == 0:
        return ()
    b = np.asarray(bs)[:, None]
    lq = np.log(np.asarray(qs))[:, None]
    # Newton in w = log s from a grid of starts
    lr = np.log(np.geomspace(radius * 1e-3, radius, 10))
    th = np.linspace(0.05, 0.95, 10) * math.pi
    w = (lr[:, None] + 1j * th[None, :]).ravel()
    for _ in range(60):
        e = np.exp(lq - b * w[None, :])
        g = 1.0 + e.sum(axis=0)
        dg = -(b * e).sum(axis=0)
        step = g / np.where(dg == 0, 1.0, dg)
        big = np.abs(step) > 1.0
        step[big] /= np.abs(step[big])
        w = w - step
        w = w.real + 1j * np.clip(w.imag, 1e-12, math.pi - 1e-12)
        if np.all(np.abs(step) < 1e-14):
            break
    e = np.exp(lq - b * w[None, :])
    g = np.abs(1.0 + e.sum(axis=0))
    scale = 1.0 + np.abs(e).sum(axis=0)
    ok = (g < 1e-12 * scale) & (w.imag > 1e-9) & (w.imag < math.pi - 1e-9)
    found = []
    for v in w[ok]:
        if all(abs(v - u) > 1e-7 * max(1.0, abs(u)) for u in found):
            found.append(complex(v))
    if len(found) != count:
        raise NonConvergenceError(
            f"located {len(found)} of {count} zeros of the multivariate transform")
    return tuple(cmath.exp(v) for v in found)


def _multi_integral(bs, lam, zs):
    """E_{(b),lam}(z) for z_i < 0 and lam < 1 + max b by Laplace inversion at t = 1."""
    qs = tuple(-v for v in zs)
    A = max(bs)
    if all(b == 1.0 for b in bs):
        raise ParameterError("betas", "all orders equal to 1 put a pole on the inversion contour")
    if _dominant_root(bs, qs) < INVERSION_MIN_ROOT:
        raise ParameterError("zs", "arguments too small for the inversion route; use the series")
    if _cut_clearance(tuple(bs), qs) < CUT_CLEARANCE:
        raise ParameterError("betas", "a pole of the transform lies next to the inversion contour")
    zeros = _upper_zeros(tuple(bs), qs)
    res = 0.0
    for sp in zeros:
        dP = A * sp ** (A - 1.0) + sum(q * (A - b) * sp ** (A - b - 1.0) for b, q in zip(bs, qs))
        res += 2.0 * (cmath.exp(sp) * sp ** (A - lam) / dP).real
    ph = cmath.exp(1j * math.pi * (A - lam))
    terms = [(q, A - b, cmath.exp(1j * math.pi * (A - b))) for b, q in zip(bs, qs)]
    eA = cmath.exp(1j * math.pi * A)

    def f(r):
        P = r ** A * eA + sum(q * (r ** c if c else 1.0) * e for q, c, e in terms)
        return -math.exp(-r) * (ph / P).imag

    R = _dominant_root(bs, qs)
    b = min(max(R, 1e-3), 60.0)
    mods = sorted(abs(sp) for sp in zeros)
    c = min([b] + [0.5 * m for m in mods])
    kw = dict(epsabs=1e-16, epsrel=1e-13, limit=400)
    v1, e1, n1 = _quad(f, 0.0, c, weight="alg", wvar=(A - lam, 0.0), **kw)

    def g(r):
        return f(r) * r ** (A - lam)

    # the integrand varies on the scale of R but runs out to b + 60: split
    # the range at octaves so every piece is resolved
    top = b + 60.0
    octaves = np.geomspace(c, top, max(2, int(math.log2(top / c)) + 1))[1:-1]
    pts = sorted(set(m for m in mods if c < m < top) | set(octaves.tolist())) or None
    v2, e2, n2 = _quad(g, c, top, points=pts, **kw)
    value = (v1 + v2) / math.pi + res
    err = (e1 + e2) / math.pi + 8.0 * EPS * (abs(v1 + v2) / math.pi + abs(res))
    return EvalReport(value, n1 + n2, INTEGRAL, err)



def ml_multivariate(betas, lam, zs, *, tol=1e-12, k_max=600, force_series=False):
    """Multivariate Mittag-Leffler function E_{(b_1..b_m),lam}(z_1..z_m).

    Variables with z_i = 0 drop out exactly. When a single nonzero argument
    remains the function is the two-parameter E_{b_i,lam}(z_i) and is
    evaluated as such unless ``force_series`` is set; so are equal orders,
    whose arguments simply add. Several arguments whose
    series would sum terms beyond ``TAYLOR_SUM_LIMIT`` in size are handled by
    Laplace inversion when ``lam < 1 + max(b_i)``.
    """
    betas = tuple(float(b) for b in betas)
    lam = float(lam)
    _check_multi(betas, lam)
    zs = tuple(float(v) for v in zs)
    if len(zs) != len(betas):
        raise ParameterError("zs", f"expected {len(betas)} arguments, got {len(zs)}")
    for v in zs:
        if not math.isfinite(v):
            raise ParameterError("zs", f"arguments must be finite, got {v!r}")
        if v > 0:
            raise ParameterError("zs", f"only non-positive arguments are supported, got {v!r}")
        if abs(v) > 1e4:
            raise ParameterError("zs", f"|z| = {abs(v):g} exceeds the cap 1e4")
    live = [(b, v) for b, v in zip(betas, zs) if v != 0.0]
    if not live:
        return EvalReport(rgamma(lam), 1, MULTISHELL, 0.0)
    if len(live) == 1 and not force_series:
        return ml_two(live[0][0], lam, live[0][1])
    if not force_series and all(b == live[0][0] for b, _ in live):
        # equal orders: the multinomial shells sum to (z_1 + ... + z_m)^K
        return ml_two(live[0][0], lam, math.fsum(v for _, v in live))

    if not force_series:
        lb = tuple(b for b, _ in live)
        if lam < 1.0 + max(lb) and _dominant_root(lb, tuple(-v for _, v in live)) > math.log(TAYLOR_SUM_LIMIT):
            try:
                return _multi_integral(lb, lam, tuple(v for _, v in live))
            except ParameterError:
                pass  # pole next to the contour: the series is the only route left

    bs = np.array([b for b, _ in live])
    logz = np.array([math.log(-v) for _, v in live])
    negs = np.ones(len(live), dtype=np.int64)
    total = _Neumaier()
    quiet = 0
    peak = 0.0
    terms = 0
    for K in range(k_max + 1):
        s, sabs = kernels.shell_sum(bs, lam, logz, negs, K)
        total.add(s)
        terms += math.comb(K + len(live) - 1, len(live) - 1)
        peak = max(peak, sabs)
        if K > 0 and abs(s) < tol * abs(total.value) and sabs < tol * max(abs(total.value), 1e-300):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
    else:
        raise NonConvergenceError(f"multivariate series needs more than {k_max} shells")
    value = total.value
    # per-term relative error grows with the size of the log-gamma arguments
    err = 16.0 * EPS * (1.0 + math.log1p(K)) * max(total.abs, peak)
    if err > 1e-8 * max(1.0, abs(value)):
        raise NonConvergenceError(
            f"multivariate series lost precision (term sum {total.abs:.3g}, value {value:.3g})")
    return EvalReport(value, terms, MULTISHELL, err)


# ----------------------------------------------------- kernels and bounds

def heat_derivative_kernel(alpha, gamma, t):
    """d/dt of E_alpha(-gamma t^alpha): -gamma t^(alpha-1) E_{alpha,alpha}(-gamma t^alpha)."""
    if not 0 < alpha < 2:
        raise ParameterError("alpha", f"must lie in (0, 2), got {alpha!r}")
    if not t > 0:
        raise ParameterError("t", f"must be positive, got {t!r}")
    if not gamma >= 0:
        raise ParameterError("gamma", f"must be non-negative, got {gamma!r}")
    if gamma == 0:
        return 0.0
    e = ml_two(alpha, alpha, -gamma * t ** alpha).value
    return -gamma * t ** (alpha - 1.0) * e


def bound_margin_two(alpha, rho, s):
    """(1 + s) E_{alpha,rho}(-s); bounded in s whenever rho < 2."""
    if not rho < 2:
        raise ParameterError("rho", f"the uniform bound needs rho < 2, got {rho!r}")
    if not s > 0:
        raise ParameterError("s", f"must be positive, got {s!r}")
    return (1.0 + s) * ml_two(alpha, rho, -s).value


def bound_check_one(alpha, s):
    """Check E_alpha(-s) <= 1 / (1 + s / Gamma(1 + alpha)) for 0 < alpha < 1."""
    if not 0 < alpha < 1:
        raise ParameterError("alpha", f"must lie in (0, 1), got {alpha!r}")
    if not s > 0:
        raise ParameterError("s", f"must be positive, got {s!r}")
    bound = 1.0 / (1.0 + s / gamma_real(1.0 + alpha))
    return ml_one(alpha, -s).value <= bound + 1e-10
