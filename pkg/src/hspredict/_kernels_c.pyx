# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled inner loops: local-scale sampling + predictive mixture averages,
and the energy-score distance sums."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt, M_PI

cnp.import_array()


def predictive_log_inner(double[::1] y, double[::1] yt, double tau, double r,
                         double[::1] t_grid, double[:, ::1] expo,
                         double[:, ::1] u):
    """Per-coordinate log of the averaged conjugate predictive density.

    For each coordinate i, draws L shrink factors t^2 by inverse-CDF sampling
    of the local-scale posterior expressed in the t = sqrt(shrink) variable
    (density on the grid: expo[i, m] / (tau^2 + (1-tau^2) t_m^2)), then
    returns sum_i log( (1/L) sum_l N(yt_i; t^2 y_i, r + t^2) ).

    ``expo[i, m]`` must hold exp(-y_i^2 (1 - t_m^2) / 2); it does not depend
    on tau and can be shared across many tau draws.
    """
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t T = t_grid.shape[0]
    cdef Py_ssize_t L = u.shape[1]
    cdef Py_ssize_t i, m, l, lo, hi, mid
    cdef double tau2 = tau * tau
    cdef double omt2 = 1.0 - tau2
    cdef double total, x, c0, c1, frac, tdraw, shrink, var, lp, mx, acc, dm, dprev
    cdef double out = 0.0

    kern_arr = np.empty(T)
    cdf_arr = np.empty(T)
    logp_arr = np.empty(L)
    cdef double[::1] kern = kern_arr
    cdef double[::1] cdf = cdf_arr
    cdef double[::1] logp = logp_arr
    cdef double log2pi = log(2.0 * M_PI)

    for m in range(T):
        kern[m] = 1.0 / (tau2 + omt2 * t_grid[m] * t_grid[m])

    for i in range(n):
        # cumulative trapezoid of the unnormalized density along t
        cdf[0] = 0.0
        dprev = expo[i, 0] * kern[0]
        for m in range(1, T):
            dm = expo[i, m] * kern[m]
            cdf[m] = cdf[m - 1] + 0.5 * (dprev + dm) * (t_grid[m] - t_grid[m - 1])
            dprev = dm
        total = cdf[T - 1]

        mx = -1e308
        for l in range(L):
            x = u[i, l] * total
            lo = 0
            hi = T - 1
            while hi - lo > 1:
                mid = (lo + hi) >> 1
                if cdf[mid] <= x:
                    lo = mid
                else:
                    hi = mid
            c0 = cdf[lo]
            c1 = cdf[lo + 1]
            if c1 > c0:
                frac = (x - c0) / (c1 - c0)
            else:
                frac = 0.0
            tdraw = t_grid[lo] + frac * (t_grid[lo + 1] - t_grid[lo])
            shrink = tdraw * tdraw
            var = r + shrink
            lp = -0.5 * (log2pi + log(var)) \
                - (yt[i] - shrink * y[i]) * (yt[i] - shrink * y[i]) / (2.0 * var)
            logp[l] = lp
            if lp > mx:
                mx = lp
        acc = 0.0
        for l in range(L):
            acc += exp(logp[l] - mx)
        out += mx + log(acc / L)
    return out


def sample_conjugate_draws(double[::1] y, double tau, double r,
                           double[::1] t_grid, double[:, ::1] expo,
                           double[::1] u, double[::1] z):
    """One posterior-predictive draw per coordinate at a shared global scale.

    Per coordinate: invert one uniform through the trapezoid CDF of the
    local-scale posterior on ``t_grid`` (density expo[i, m] * kern(t_m)),
    then return shrink*y + sqrt(r + shrink) * z with shrink = t^2.
    """
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t T = t_grid.shape[0]
    cdef Py_ssize_t i, m, lo, hi, mid
    cdef double tau2 = tau * tau
    cdef double omt2 = 1.0 - tau2
    cdef double total, x, c0, c1, frac, tdraw, shrink, dm, dprev

    out_arr = np.empty(n)
    kern_arr = np.empty(T)
    cdf_arr = np.empty(T)
    cdef double[::1] out = out_arr
    cdef double[::1] kern = kern_arr
    cdef double[::1] cdf = cdf_arr

    for m in range(T):
        kern[m] = 1.0 / (tau2 + omt2 * t_grid[m] * t_grid[m])
    for i in range(n):
        cdf[0] = 0.0
        dprev = expo[i, 0] * kern[0]
        for m in range(1, T):
            dm = expo[i, m] * kern[m]
            cdf[m] = cdf[m - 1] + 0.5 * (dprev + dm) * (t_grid[m] - t_grid[m - 1])
            dprev = dm
        total = cdf[T - 1]
        x = u[i] * total
        lo = 0
        hi = T - 1
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if cdf[mid] <= x:
                lo = mid
            else:
                hi = mid
        c0 = cdf[lo]
        c1 = cdf[lo + 1]
        frac = (x - c0) / (c1 - c0) if c1 > c0 else 0.0
        tdraw = t_grid[lo] + frac * (t_grid[lo + 1] - t_grid[lo])
        shrink = tdraw * tdraw
        out[i] = shrink * y[i] + sqrt(r + shrink) * z[i]
    return out_arr


def mean_dist_to_point(double[:, ::1] samples, double[::1] y):
    """(1/N) sum_l ||samples[l] - y||_2."""
    cdef Py_ssize_t N = samples.shape[0]
    cdef Py_ssize_t d = samples.shape[1]
    cdef Py_ssize_t l, j
    cdef double acc = 0.0, s, diff
    for l in range(N):
        s = 0.0
        for j in range(d):
            diff = samples[l, j] - y[j]
            s += diff * diff
        acc += sqrt(s)
    return acc / N


def mean_pairwise_dist(double[:, ::1] samples):
    """(1/N^2) sum_k sum_l ||samples[k] - samples[l]||_2 (zero diagonal kept)."""
    cdef Py_ssize_t N = samples.shape[0]
    cdef Py_ssize_t d = samples.shape[1]
    cdef Py_ssize_t k, l, j
    cdef double acc = 0.0, s, diff
    for k in range(N):
        for l in range(k + 1, N):
            s = 0.0
            for j in range(d):
                diff = samples[k, j] - samples[l, j]
                s += diff * diff
            acc += sqrt(s)
    return 2.0 * acc / (<double> N * <double> N)


def mean_pairwise_dist_pairs(double[:, ::1] samples, long[::1] idx1,
                             long[::1] idx2):
    """Mean distance over explicitly listed sample pairs."""
    cdef Py_ssize_t M = idx1.shape[0]
    cdef Py_ssize_t d = samples.shape[1]
    cdef Py_ssize_t m, j
    cdef double acc = 0.0, s, diff
    cdef Py_ssize_t a, b
    for m in range(M):
        a = idx1[m]
        b = idx2[m]
        s = 0.0
        for j in range(d):
            diff = samples[a, j] - samples[b, j]
            s += diff * diff
        acc += sqrt(s)
    return acc / M
