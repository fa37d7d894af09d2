"""Pure-NumPy implementations of the hot kernels.

Drop-in equivalents of the compiled routines in ``_kernels_c``; selected at
import time by :mod:`hspredict.backend` when the extension is unavailable or
explicitly disabled.
"""

import numpy as np

__all__ = [
    "predictive_log_inner", "mean_dist_to_point", "mean_pairwise_dist",
    "mean_pairwise_dist_pairs",
]


def predictive_log_inner(y, yt, tau, r, t_grid, expo, u):
    """See the compiled twin: vectorized inverse-CDF sampling of the
    local-scale posterior in the t = sqrt(shrink) variable followed by a
    log-mean-exp of conjugate predictive densities."""
    y = np.asarray(y)
    yt = np.asarray(yt)
    t = np.asarray(t_grid)
    n = y.shape[0]
    kern = 1.0 / (tau * tau + (1.0 - tau * tau) * t * t)
    dens = expo * kern                                           # (n, T)
    seg = 0.5 * (dens[:, 1:] + dens[:, :-1]) * np.diff(t)        # (n, T-1)
    cdf = np.concatenate([np.zeros((n, 1)), np.cumsum(seg, axis=1)], axis=1)
    total = cdf[:, -1:]

    x = u * total                                                # (n, L)
    # row-wise searchsorted via monotone per-row offsets
    offs = (np.arange(n) * 2.0)[:, None] * total.max()
    idx = np.searchsorted((cdf + offs).ravel(), (x + offs).ravel(),
                          side="right").reshape(x.shape)
    idx -= np.arange(n)[:, None] * cdf.shape[1] + 1
    idx = np.clip(idx, 0, t.size - 2)

    c0 = np.take_along_axis(cdf, idx, 1)
    c1 = np.take_along_axis(cdf, idx + 1, 1)
    width = c1 - c0
    frac = np.where(width > 0, (x - c0) / np.where(width > 0, width, 1.0), 0.0)
    tdraw = t[idx] + frac * (t[idx + 1] - t[idx])

    shrink = tdraw * tdraw
    var = r + shrink
    logp = -0.5 * np.log(2.0 * np.pi * var) \
        - (yt[:, None] - shrink * y[:, None]) ** 2 / (2.0 * var)
    mx = logp.max(axis=1, keepdims=True)
    log_inner = mx[:, 0] + np.log(np.mean(np.exp(logp - mx), axis=1))
    return float(log_inner.sum())


def sample_conjugate_draws(y, tau, r, t_grid, expo, u, z):
    """See the compiled twin: one predictive draw per coordinate at a shared
    global scale, by inverse-CDF local-scale sampling in the t variable."""
    y = np.asarray(y)
    t = np.asarray(t_grid)
    n = y.shape[0]
    kern = 1.0 / (tau * tau + (1.0 - tau * tau) * t * t)
    dens = expo * kern
    seg = 0.5 * (dens[:, 1:] + dens[:, :-1]) * np.diff(t)
    cdf = np.concatenate([np.zeros((n, 1)), np.cumsum(seg, axis=1)], axis=1)
    total = cdf[:, -1]
    x = u * total
    offs = (np.arange(n) * 2.0) * max(total.max(), 1.0)
    idx = np.searchsorted((cdf + offs[:, None]).ravel(), x + offs, side="right")
    idx -= np.arange(n) * cdf.shape[1] + 1
    idx = np.clip(idx, 0, t.size - 2)
    c0 = np.take_along_axis(cdf, idx[:, None], 1)[:, 0]
    c1 = np.take_along_axis(cdf, idx[:, None] + 1, 1)[:, 0]
    width = c1 - c0
    frac = np.where(width > 0, (x - c0) / np.where(width > 0, width, 1.0), 0.0)
    tdraw = t[idx] + frac * (t[idx + 1] - t[idx])
    shrink = tdraw * tdraw
    return shrink * y + np.sqrt(r + shrink) * z


def mean_dist_to_point(samples, y):
    return float(np.linalg.norm(samples - y[None, :], axis=1).mean())


def mean_pairwise_dist(samples, block=512):
    S = np.asarray(samples)
    N = S.shape[0]
    sq = np.einsum("ij,ij->i", S, S)
    acc = 0.0
    for start in range(0, N, block):
        stop = min(start + block, N)
        g = S[start:stop] @ S.T
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * g
        np.maximum(d2, 0.0, out=d2)
        acc += np.sqrt(d2).sum()
    return float(acc) / (N * N)


def mean_pairwise_dist_pairs(samples, idx1, idx2):
    d = samples[idx1] - samples[idx2]
    return float(np.linalg.norm(d, axis=1).mean())
