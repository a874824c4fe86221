"""Pure numpy implementations of the hot loops.

These mirror ``_ckernels.pyx`` one-for-one and are used when the compiled
extension is unavailable (or ``FRACSPEC_PURE=1``).
"""

import math

import numpy as np
from scipy.special import gammaln

BACKEND = "python"


def _compositions(total, parts):
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        head = np.full((rest.shape[0], 1), first, dtype=np.int64)
        blocks.append(np.hstack([head, rest]))
    return np.vstack(blocks)


def _recip_gamma_sign(b):
    # sign of 1/Gamma(b); zero at the poles b = 0, -1, -2, ...
    sign = np.ones_like(b)
    neg = b <= 0
    if np.any(neg):
        bn = b[neg]
        pole = bn == np.floor(bn)
        s = np.where(np.ceil(-bn) % 2 == 1, -1.0, 1.0)
        s[pole] = 0.0
        sign[neg] = s
    return sign


def shell_sum(betas, lam, log_abs_z, z_negative, total):
    """Sum of one total-degree shell of the multivariate Mittag-Leffler series.

    Returns ``(sum, sum_abs)``. Every argument is nonzero; ``z_negative``
    flags the negative ones.
    """
    m = len(betas)
    ks = _compositions(total, m)
    b = ks @ np.asarray(betas, dtype=float) + lam
    lgb = np.empty_like(b)
    pos = b > 0
    lgb[pos] = gammaln(b[pos])
    if not np.all(pos):
        bn = b[~pos]
        with np.errstate(divide="ignore"):
            lgb[~pos] = math.log(math.pi) - np.log(np.abs(np.sin(np.pi * bn))) - gammaln(1.0 - bn)
    logmag = (math.lgamma(total + 1) - gammaln(ks + 1.0).sum(axis=1)
              + ks @ np.asarray(log_abs_z, dtype=float) - lgb)
    flips = ks @ np.asarray(z_negative, dtype=np.int64)
    sign = np.where(flips % 2 == 1, -1.0, 1.0) * _recip_gamma_sign(b)
    live = sign != 0.0
    terms = np.zeros_like(b)
    terms[live] = sign[live] * np.exp(logmag[live])
    return math.fsum(terms), float(np.abs(terms).sum())


def pow_diff(a, h, p):
    """``a^p - (a - h)^p`` for 0 < h <= a without cancellation on short intervals."""
    a = np.asarray(a, dtype=float)
    h = np.asarray(h, dtype=float)
    x = h / a
    out = a ** p - np.maximum(a - h, 0.0) ** p
    short = x < 0.25
    if np.any(short):
        out = np.where(short, -(a ** p) * np.expm1(p * np.log1p(-np.where(short, x, 0.0))), out)
    return out


def _hat_series(x, beta, terms=40):
    # int_0^x (1-y)^(beta-1) y dy and int_0^x (1-y)^(beta-1) (x-y) dy, both over x^2, x < 0.25
    c = 1.0
    s_right = np.zeros_like(x)
    s_left = np.zeros_like(x)
    xm = np.ones_like(x)
    for m in range(terms):
        s_right += c * xm / (m + 2)
        s_left += c * xm / ((m + 1) * (m + 2))
        c *= -(beta - 1.0 - m) / (m + 1)
        xm = xm * x
    return s_right, s_left


def hat_weights(t, n, p):
    """Product-integration weights of ``(t_n - s)^(p - 1)`` against the hat functions.

    Returns ``(left, right)``: entry j-1 is the weight of the value at t_{j-1}
    (resp. t_j) on interval j = 1..n. Not divided by Gamma(p).
    """
    A = t[n] - t[:n]
    h = np.diff(t[:n + 1])
    x = np.minimum(h / A, 1.0)
    B = np.maximum(A - h, 0.0)
    B[-1] = 0.0
    p0 = pow_diff(A, h, p) / p
    p1 = pow_diff(A, h, p + 1) / (p + 1)
    left = (p1 - B * p0) / h
    right = (A * p0 - p1) / h
    short = x < 0.25
    if np.any(short):
        xs = np.where(short, x, 0.0)
        s_r, s_l = _hat_series(xs, p)
        # with t_n - s = A (1 - y): the hats are A (x - y) / h and A y / h
        scale = A ** (p + 1) * xs * xs / np.where(short, h, 1.0)
        left = np.where(short, scale * s_l, left)
        right = np.where(short, scale * s_r, right)
    return left, right


def step_fode(t, orders, weights, gamma, u0, u1, limit):
    """Implicit product-integration stepping for a scalar multi-term Caputo ODE.

    ``orders`` are strictly decreasing in (0, 2), ``weights`` the matching
    coefficients (weights[0] = 1). Solves sum_i w_i D^{a_i} u + gamma u = 0 with
    u(0) = u0 and, when some order exceeds 1, u'(0) = u1.

    Orders below 1 use the L1 rule. Order 1 uses second-order backward
    differences. Orders above 1 apply the L1 rule of order a - 1 to the velocity,
    which is carried along with the trapezoid rule, so on interval j the second
    derivative is the constant 2 (u_j - u_{j-1} - h_j v_{j-1}) / h_j^2.
    """
    t = np.asarray(t, dtype=float)
    M = len(t) - 1
    u = np.empty(M + 1)
    u[0] = u0
    d2 = np.zeros(M + 1)
    h = np.diff(t)
    has_velocity = orders[0] > 1.0
    v = u1
    for n in range(1, M + 1):
        # linear equation: coef * u[n] + rhs = 0
        coef = gamma
        rhs = 0.0
        hn = h[n - 1]
        tn = t[n]
        d2_c = 2.0 / hn ** 2
        d2_r = -2.0 * (u[n - 1] + hn * v) / hn ** 2
        for a, wt in zip(orders, weights):
            if wt == 0.0:
                continue
            if a > 1.0:
                p = 2.0 - a
                w = pow_diff(tn - t[:n], h[:n], p) / math.gamma(3.0 - a)
                hist = float(np.dot(w[:n - 1], d2[1:n]))
                coef += wt * w[n - 1] * d2_c
                rhs += wt * (hist + w[n - 1] * d2_r)
            elif a == 1.0:
                if n == 1:
                    if has_velocity:
                        # quadratic through u0, u'(0) and u[1]
                        coef += wt * 2.0 / hn
                        rhs -= wt * (2.0 * u0 / hn + u1)
                    else:
                        coef += wt / hn
                        rhs -= wt * u0 / hn
                else:
                    om = hn / h[n - 2]
                    coef += wt * (1.0 + 2.0 * om) / ((1.0 + om) * hn)
                    rhs += wt * (-(1.0 + om) * u[n - 1] + om * om / (1.0 + om) * u[n - 2]) / hn
            else:
                p = 1.0 - a
                wgt = pow_diff(tn - t[:n], h[:n], p) / (h[:n] * math.gamma(2.0 - a))
                hist = float(np.dot(wgt[:n - 1], np.diff(u[:n])))
                coef += wt * wgt[n - 1]
                rhs += wt * (hist - wgt[n - 1] * u[n - 1])
        u[n] = -rhs / coef
        d2[n] = d2_c * u[n] + d2_r
        v = v + hn * d2[n]
        if not abs(u[n]) <= limit:
            return u, n
    return u, -1
