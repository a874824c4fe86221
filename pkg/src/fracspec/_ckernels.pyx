# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport lgamma, exp, log, log1p, expm1, pow, fabs, floor, ceil, sin, tgamma, M_PI

cnp.import_array()

BACKEND = "compiled"


cdef inline double _log_abs_gamma(double b):
    if b > 0:
        return lgamma(b)
    return log(M_PI) - log(fabs(sin(M_PI * b))) - lgamma(1.0 - b)


cdef inline double _pow_diff(double a, double h, double p, double ap):
    # a^p - (a - h)^p given ap = a^p; avoids cancellation when h << a
    cdef double x = h / a
    if x < 0.25:
        return -ap * expm1(p * log1p(-x))
    if h >= a:
        return ap
    return ap - pow(a - h, p)


cdef inline double _rgamma_sign(double b):
    if b > 0:
        return 1.0
    if b == floor(b):
        return 0.0
    if (<long> ceil(-b)) % 2 == 1:
        return -1.0
    return 1.0


cdef void _shell_rec(int depth, int m, int remaining, long *ks, double *betas, double lam,
                     double *logz, long *negs, double base, double *acc_s, double *acc_c,
                     double *acc_abs):
    cdef int k, i
    cdef double b, mag, sign, term, t
    cdef long flips
    if depth == m - 1:
        ks[depth] = remaining
        b = lam
        mag = base
        flips = 0
        for i in range(m):
            b += betas[i] * ks[i]
            mag += ks[i] * logz[i] - lgamma(ks[i] + 1.0)
            flips += ks[i] * negs[i]
        sign = _rgamma_sign(b)
        if sign == 0.0:
            return
        if flips % 2 == 1:
            sign = -sign
        term = sign * exp(mag - _log_abs_gamma(b))
        # Neumaier compensated accumulation
        t = acc_s[0] + term
        if fabs(acc_s[0]) >= fabs(term):
            acc_c[0] += (acc_s[0] - t) + term
        else:
            acc_c[0] += (term - t) + acc_s[0]
        acc_s[0] = t
        acc_abs[0] += fabs(term)
        return
    for k in range(remaining + 1):
        ks[depth] = k
        _shell_rec(depth + 1, m, remaining - k, ks, betas, lam, logz, negs, base,
                   acc_s, acc_c, acc_abs)


def shell_sum(betas, double lam, log_abs_z, z_negative, int total):
    cdef cnp.ndarray[double, ndim=1] bs = np.ascontiguousarray(betas, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] lz = np.ascontiguousarray(log_abs_z, dtype=np.float64)
    cdef cnp.ndarray[long, ndim=1] ng = np.ascontiguousarray(z_negative, dtype=np.int64)
    cdef int m = bs.shape[0]
    cdef cnp.ndarray[long, ndim=1] ks = np.zeros(m, dtype=np.int64)
    cdef double s = 0.0, c = 0.0, sabs = 0.0
    _shell_rec(0, m, total, &ks[0], &bs[0], lam, &lz[0], &ng[0], lgamma(total + 1.0),
               &s, &c, &sabs)
    return s + c, sabs


def step_fode(t_in, orders_in, weights_in, double gamma, double u0, double u1, double limit):
    cdef cnp.ndarray[double, ndim=1] t = np.ascontiguousarray(t_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] orders = np.ascontiguousarray(orders_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] weights = np.ascontiguousarray(weights_in, dtype=np.float64)
    cdef int M = t.shape[0] - 1
    cdef int q = orders.shape[0]
    cdef cnp.ndarray[double, ndim=1] u = np.empty(M + 1)
    cdef cnp.ndarray[double, ndim=1] d2 = np.zeros(M + 1)
    cdef cnp.ndarray[double, ndim=1] gfac = np.empty(q)
    cdef int n, j, i
    cdef bint has_velocity = orders[0] > 1.0
    cdef double coef, rhs, hn, hp, om, d2_c, d2_r, a, wt, tn, hist, wl, p, pa, pb, v
    for i in range(q):
        a = orders[i]
        gfac[i] = 1.0 / tgamma(3.0 - a) if a > 1.0 else 1.0 / tgamma(2.0 - a)
    u[0] = u0
    v = u1
    for n in range(1, M + 1):
        coef = gamma
        rhs = 0.0
        hn = t[n] - t[n - 1]
        tn = t[n]
        d2_c = 2.0 / (hn * hn)
        d2_r = -2.0 * (u[n - 1] + hn * v) / (hn * hn)
        for i in range(q):
            a = orders[i]
            wt = weights[i]
            if wt == 0.0:
                continue
            if a > 1.0:
                p = 2.0 - a
                hist = 0.0
                pa = pow(tn - t[0], p)
                for j in range(1, n):
                    pb = pow(tn - t[j], p)
                    hist += _pow_diff(tn - t[j - 1], t[j] - t[j - 1], p, pa) * d2[j]
                    pa = pb
                hist *= gfac[i]
                wl = pa * gfac[i]
                coef += wt * wl * d2_c
                rhs += wt * (hist + wl * d2_r)
            elif a == 1.0:
                if n == 1:
                    if has_velocity:
                        coef += wt * 2.0 / hn
                        rhs -= wt * (2.0 * u0 / hn + u1)
                    else:
                        coef += wt / hn
                        rhs -= wt * u0 / hn
                else:
                    hp = t[n - 1] - t[n - 2]
                    om = hn / hp
                    coef += wt * (1.0 + 2.0 * om) / ((1.0 + om) * hn)
                    rhs += wt * (-(1.0 + om) * u[n - 1] + om * om / (1.0 + om) * u[n - 2]) / hn
            else:
                p = 1.0 - a
                hist = 0.0
                pa = pow(tn - t[0], p)
                for j in range(1, n):
                    pb = pow(tn - t[j], p)
                    hist += _pow_diff(tn - t[j - 1], t[j] - t[j - 1], p, pa) / (t[j] - t[j - 1]) * (u[j] - u[j - 1])
                    pa = pb
                hist *= gfac[i]
                wl = pa / hn * gfac[i]
                coef += wt * wl
                rhs += wt * (hist - wl * u[n - 1])
        u[n] = -rhs / coef
        d2[n] = d2_c * u[n] + d2_r
        v = v + hn * d2[n]
        if not fabs(u[n]) <= limit:
            return u, n
    return u, -1
