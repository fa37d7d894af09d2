"""Univariate Horseshoe prior at fixed global scale: density, marginal,
and the posterior of the local shrinkage scale with its two-mode structure.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun

__all__ = [
    "LocalScalePosterior", "prior_density", "marginal_density",
    "lambda_posterior", "lambda_posterior_modes", "sample_lambda",
    "kappa_of", "mode_crossover_y",
]

_PRIOR_CONST = 1.0 / math.sqrt(2.0 * math.pi ** 3)
_MARGINAL_CONST = 2.0 / (math.pi * math.sqrt(2.0 * math.pi))


def prior_density(theta, tau):
    """Exact univariate Horseshoe density: the half-Cauchy scale mixture of
    centered Gaussians, which evaluates to an exponential-integral form.

    The density has a logarithmic pole at the origin; ``theta == 0`` returns
    ``inf`` so callers can decide how to render it.
    """
    if not tau > 0:
        raise ValueError("tau must be > 0")
    if theta == 0.0:
        return math.inf
    w = theta * theta / (2.0 * tau * tau)
    return _PRIOR_CONST / tau * specfun.e1_scaled(w)


def prior_density_bounds(theta, tau):
    """(lower, upper) envelope of the Horseshoe density away from 0."""
    t2 = tau * tau
    lo = _PRIOR_CONST / (2.0 * tau) * math.log1p(4.0 * t2 / (theta * theta))
    hi = _PRIOR_CONST / tau * math.log1p(2.0 * t2 / (theta * theta))
    return lo, hi


def marginal_density(y, tau):
    """Marginal density of one observation y ~ N(theta, 1) with theta drawn
    from the Horseshoe prior at scale tau.  Vectorized over ``y``."""
    if not tau > 0:
        raise ValueError("tau must be > 0")
    y = np.asarray(y, dtype=float)
    out = _MARGINAL_CONST * np.exp(specfun.log_marginal_factor(y, tau))
    return float(out) if y.ndim == 0 else out


def kappa_of(lam, tau):
    """Shrinkage factor 1/(1 + lam^2 tau^2) in (0, 1]; equals 1 iff lam=0."""
    return 1.0 / (1.0 + lam * lam * tau * tau)


def _unnorm_lambda_density(lam, y, tau):
    m = 1.0 + lam * lam * tau * tau
    return np.exp(-y * y / (2.0 * m)) / (np.sqrt(m) * (1.0 + lam * lam))


@dataclass
class LocalScalePosterior:
    """Grid representation of the local-scale posterior pi(lambda | y, tau).

    ``grid``/``density`` tabulate the normalized posterior; ``cdf`` is the
    piecewise-linear trapezoid CDF used for inverse-CDF sampling.
    ``log_normalizer`` is the log of the exact normalizing constant
    (``tau * Phi1(1, 1, 3/2, -y^2/2, 1-tau^2)``).
    """

    y: float
    tau: float
    grid: np.ndarray
    density: np.ndarray
    log_normalizer: float
    cdf: np.ndarray = field(init=False)

    def __post_init__(self):
        seg = 0.5 * (self.density[1:] + self.density[:-1]) * np.diff(self.grid)
        cdf = np.concatenate([[0.0], np.cumsum(seg)])
        self.mass = float(cdf[-1])
        self.cdf = cdf / self.mass

    def pdf(self, lam):
        return np.interp(lam, self.grid, self.density)


def lambda_posterior(y, tau, grid_size=2048):
    """Tabulated posterior of the local shrinkage scale given one observation.

    The grid is geometric on (0, lam_max] plus the origin; ``lam_max`` starts
    at ``max(100, 20/tau)`` and doubles until the analytic Cauchy-tail bound
    of the unnormalized density (``1/(2 tau lam_max^2)``) falls below 1e-6 of
    the total mass.
    """
    if grid_size < 64:
        raise ValueError("grid_size must be >= 64")
    if not tau > 0:
        raise ValueError("tau must be > 0")
    log_norm = specfun.log_marginal_factor(y, tau)
    norm = math.exp(log_norm)
    lam_max = max(100.0, 20.0 / tau)
    while 1.0 / (2.0 * tau * lam_max * lam_max) > 1e-6 * norm:
        lam_max *= 2.0
    grid = np.concatenate([[0.0], np.geomspace(lam_max * 1e-8, lam_max, grid_size - 1)])
    dens = _unnorm_lambda_density(grid, y, tau) / norm
    post = LocalScalePosterior(y=float(y), tau=float(tau), grid=grid,
                               density=dens, log_normalizer=log_norm)
    # renormalize the tabulated curve so its trapezoid mass is exactly one
    post.density = post.density / post.mass
    return post


def lambda_posterior_modes(y, tau, scan_points=4096):
    """Locations of the local maxima of pi(lambda | y, tau).

    The boundary mode at lambda = 0 is always reported first; interior modes
    are located by a scan over a geometric grid followed by golden-section
    refinement.  For small tau the interior mode appears once ``|y|`` grows
    past the detection scale ~ sqrt(log(1/tau)) and eventually dominates.
    """
    if not tau > 0:
        raise ValueError("tau must be > 0")
    lam_max = max(100.0, 20.0 / tau)
    grid = np.concatenate([[0.0], np.geomspace(1e-6, lam_max, scan_points - 1)])
    dens = _unnorm_lambda_density(grid, y, tau)
    modes = [0.0]
    inner = np.flatnonzero((dens[1:-1] > dens[:-2]) & (dens[1:-1] >= dens[2:])) + 1
    for i in inner:
        lo, hi = grid[i - 1], grid[i + 1]
        f = lambda l: -_unnorm_lambda_density(l, y, tau)
        modes.append(_golden(f, lo, hi))
    return modes


def _golden(f, lo, hi, tol=1e-10, max_iter=200):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol * max(1.0, abs(a)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def sample_lambda(posterior, count, rng):
    """Inverse-CDF draws from a tabulated local-scale posterior.

    Piecewise-linear interpolation of the trapezoid CDF; deterministic for a
    given generator state.
    """
    u = rng.random(count)
    return np.interp(u, posterior.cdf, posterior.grid)


def mode_masses(y, tau, scan_points=200_000):
    """Posterior mass split at the valley between the origin mode and the
    interior mode of pi(lambda | y, tau).

    Returns ``(mass_origin, mass_interior)``; ``mass_interior`` is zero when
    no interior mode exists.
    """
    lam = np.concatenate([[0.0], np.geomspace(1e-6, max(1e4, 100.0 / tau),
                                              scan_points - 1)])
    d = _unnorm_lambda_density(lam, y, tau)
    idx = np.flatnonzero((d[1:-1] > d[:-2]) & (d[1:-1] >= d[2:])) + 1
    idx = idx[lam[idx] > 1e-3]
    seg = 0.5 * (d[1:] + d[:-1]) * np.diff(lam)
    if idx.size == 0:
        return float(seg.sum()), 0.0
    valley = int(np.argmin(d[:idx[-1]]))
    return float(seg[:valley].sum()), float(seg[valley:].sum())


def mode_crossover_y(tau, criterion="mass", y_hi=None, tol=1e-3):
    """Smallest |y| at which the interior mode of the local-scale posterior
    takes over from the origin mode.

    ``criterion="mass"`` compares the posterior mass on either side of the
    inter-mode valley (the sense in which the interior mode "dominates" and
    shrinkage switches off); ``criterion="density"`` compares the density at
    the interior mode against the density at lambda -> 0, which switches at
    a larger observation scale.  Both grow like sqrt(log(1/tau)).
    """
    if not 0 < tau < 1:
        raise ValueError("crossover is defined for tau in (0, 1)")
    if y_hi is None:
        y_hi = 4.0 * math.sqrt(2.0 * math.log(1.0 / tau)) + 10.0

    if criterion == "mass":
        def dominated(y):
            m0, m2 = mode_masses(y, tau)
            return m2 > m0
    elif criterion == "density":
        def dominated(y):
            modes = lambda_posterior_modes(y, tau)
            if len(modes) < 2:
                return False
            d0 = _unnorm_lambda_density(0.0, y, tau)
            d2 = max(_unnorm_lambda_density(m, y, tau) for m in modes[1:])
            return d2 > d0
    else:
        raise ValueError("criterion must be 'mass' or 'density'")

    lo, hi = 0.0, y_hi
    if not dominated(hi):
        raise RuntimeError("no crossover found below y_hi")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if dominated(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
