"""Special functions behind the Horseshoe posterior computations.

The workhorse is the two-variable confluent hypergeometric function

    Phi1(a, b, c, x, y) = B(a, c-a)^-1 * int_0^1 u**(a-1) (1-u)**(c-a-1)
                          (1 - y*u)**-b * exp(x*u) du,      c > a > 0, y < 1,

where B is the beta function.  Every posterior quantity of the univariate
Horseshoe model (marginal likelihood, local-scale posterior normalizer,
predictive risk decomposition) evaluates to a Phi1 with one of a handful of
parameter triples, always with x <= 0, so no exponentially large terms ever
have to be formed: for x = -w <= 0 the substitution u = 1 - t**2 gives

    Phi1(1, 1, 3/2, -w, 1 - s**2) = int_0^1 exp(-w (1-t^2)) / (s^2 + (1-s^2) t^2) dt,

a bounded integrand with a Lorentzian feature of width ``s`` at t = 0 and an
exponential ramp of width ``1/sqrt(w)`` at t = 1.  Panel rules graded for
those two scales evaluate it to near machine precision.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sp

from .quad import DEFAULT_SPEC, integrate_adaptive

__all__ = [
    "Phi1Args", "phi1", "log_phi1_h", "exp_integral_e1", "e1_scaled",
    "gauss", "gauss_cdf", "log_marginal_factor", "phi1_135_log",
    "phi1_ratio_integrals",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)

# Parameter triples with precomputed 1/B(a, c-a) prefactors.  These cover all
# uses in this package; anything else goes through the generic slow path.
_FAST_PREFACTORS = {
    (1.0, 1.0, 1.5): 0.5,
    (1.0, 1.0, 2.5): 1.5,
    (2.0, 1.0, 2.5): 0.75,
    (0.5, 1.0, 1.5): 0.5,
}


@dataclass(frozen=True)
class Phi1Args:
    """Arguments of Phi1; the integral representation needs c > a > 0, y < 1."""

    a: float
    b: float
    c: float
    x: float
    y: float

    def __post_init__(self):
        if not (self.c > self.a > 0):
            raise ValueError("Phi1 requires c > a > 0")
        if not self.y < 1.0:
            raise ValueError("Phi1 requires y < 1 (pole would enter [0, 1])")


def _prefactor(a, b, c):
    val = _FAST_PREFACTORS.get((float(a), float(b), float(c)))
    if val is not None:
        return val
    return math.exp(sp.gammaln(c) - sp.gammaln(a) - sp.gammaln(c - a))


def phi1(args, spec=DEFAULT_SPEC):
    """Evaluate Phi1(a, b, c, x, y) by adaptive quadrature.

    The unit interval is split at 1/2 and each half is mapped with
    ``u = t**2`` / ``u = 1 - t**2`` so that the possible algebraic endpoint
    singularities of the beta weight are integrated out exactly.
    """
    a, b, c, x, y = args.a, args.b, args.c, args.x, args.y
    if x > 700.0:
        raise OverflowError("phi1: exp(x*u) would overflow; use a complementary form")
    pref = _prefactor(a, b, c)

    def f_left(t):  # u = t^2 on [0, 1/2]
        u = t * t
        return (2.0 * np.power(t, 2.0 * a - 1.0) * np.power(1.0 - u, c - a - 1.0)
                * np.power(1.0 - y * u, -b) * np.exp(x * u))

    def f_right(t):  # u = 1 - t^2 on [1/2, 1]
        u = 1.0 - t * t
        # 1 - y*u rewritten as (1-y) + y*t^2: no cancellation as y -> 1
        return (2.0 * np.power(u, a - 1.0) * np.power(t, 2.0 * (c - a) - 1.0)
                * np.power((1.0 - y) + y * t * t, -b) * np.exp(x * u))

    s = math.sqrt(0.5)
    # (1 - y*u)^-b peaks at u = 1 (t = 0 after substitution) with width
    # sqrt((1-y)/y) in t when y -> 1; seed the subdivision at that scale so
    # the error estimator cannot overlook the spike.
    bps = None
    if 0.5 < y < 1.0:
        w0 = math.sqrt((1.0 - y) / y)
        bps = [w0 * 2.0 ** k for k in range(0, 40) if w0 * 2.0 ** k < s]
    left = integrate_adaptive(f_left, 0.0, s, spec)
    right = integrate_adaptive(f_right, 0.0, s, spec, initial_breakpoints=bps)
    return pref * (left + right)


# ---------------------------------------------------------------------------
# Graded panel rules for the (1,1,3/2)-family with x = -w, y = 1 - s^2.
# ---------------------------------------------------------------------------

def _breakpoints(s_min):
    """Panel breakpoints in t on [0, 1]: geometric from the narrowest
    Lorentzian width, dyadic refinement toward the exponential ramp at 1."""
    bps = [0.0]
    t = min(max(s_min, 1e-12), 0.25)
    while t < 0.5:
        bps.append(t)
        t *= 2.0
    bps.extend([0.5] + [1.0 - 0.5 ** j for j in range(2, 14)] + [1.0])
    return np.array(sorted(set(bps)))


@lru_cache(maxsize=64)
def _panel_rule(s_min_key):
    s_min = 10.0 ** s_min_key
    bps = _breakpoints(s_min)
    gl_x, gl_w = np.polynomial.legendre.leggauss(20)
    nodes, weights = [], []
    for a, b in zip(bps[:-1], bps[1:]):
        nodes.append(0.5 * (b - a) * gl_x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * gl_w)
    return np.concatenate(nodes), np.concatenate(weights)


def _rule_for(s):
    # choose the rule graded for the decade at or below s
    key = min(0, max(-12, math.floor(math.log10(max(s, 1e-12)))))
    return _panel_rule(key)


def phi1_135_log(w, s):
    """log Phi1(1, 1, 3/2, -w, 1 - s**2) for an array of w >= 0 at fixed s > 0.

    Stable for arbitrarily large w (the integrand is evaluated with the
    exponential already factored so nothing overflows) and for s anywhere in
    (0, inf); s > 1 corresponds to a negative second variable.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    t, wq = _rule_for(min(s, 1.0))
    kern = wq / (s * s + (1.0 - s * s) * t * t)
    out = np.empty(w.shape)
    big = w > 1.0e4
    if np.any(~big):
        vals = np.exp(-np.outer(w[~big], 1.0 - t * t)) @ kern
        out[~big] = np.log(vals)
    if np.any(big):
        # Watson expansion of int_0^1 exp(-w u) h(u) du around u = 0 with
        # h(u) = 1 / (2 sqrt(1-u) (1 - c u)), c = 1 - s^2; three terms give
        # ~1e-12 relative accuracy at the switch point and avoid the
        # underflow of the panel sum for enormous w.
        c = 1.0 - s * s
        wb = w[big]
        h0 = 0.5
        h1 = 0.25 + 0.5 * c
        h2 = 0.375 + 0.5 * c + c * c
        out[big] = -np.log(wb) + np.log(h0 + h1 / wb + h2 / (wb * wb))
    return out


def phi1_ratio_integrals(w, s):
    """The three Phi1 values of the shrink-weight risk bound at x = -w.

    Returns ``(f_a, f_b, f_c)`` where ``f_a = Phi1(1,1,3/2,-w,1-s^2)``,
    ``f_b = Phi1(1,1,5/2,-w,1-s^2)`` and ``f_c = Phi1(2,1,5/2,-w,1-s^2)``,
    sharing one panel evaluation: in the t-variable their integrands differ
    only by the polynomial factors 1, 3*t^2 and (3/2)*(1-t^2).
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    t, wq = _rule_for(min(s, 1.0))
    base = wq / (s * s + (1.0 - s * s) * t * t)
    expo = np.exp(-np.outer(w, 1.0 - t * t))
    f_a = expo @ base
    f_b = expo @ (3.0 * t * t * base)
    f_c = expo @ (1.5 * (1.0 - t * t) * base)
    return f_a, f_b, f_c


def log_marginal_factor(y, tau):
    """log of the per-coordinate marginal-likelihood factor of the Horseshoe.

    Equals ``log(tau * Phi1(1, 1, 3/2, -y**2/2, 1 - tau**2))``, i.e. the log
    of ``integral_0^inf N(y; 0, 1 + lam^2 tau^2) / phi(y) * (1+lam^2)^-1 dlam``
    restricted to its non-Gaussian part.  Vectorized over ``y``.
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    y = np.asarray(y, dtype=float)
    out = phi1_135_log(0.5 * y * y, tau) + math.log(tau)
    return out if y.ndim else float(out[0])


def log_phi1_h(y_obs, tau, spec=DEFAULT_SPEC):
    """log H(y, tau) with H(y, tau) = tau * Phi1(1/2, 1, 3/2, -y^2/2, 1-tau^2).

    After the substitution u = t**2,

        H(y, tau) = tau * int_0^1 exp(-y^2 t^2 / 2) / (1 - (1-tau^2) t^2) dt,

    which is finite for every real y, strictly positive, and strictly
    increasing in tau (the integrand increases pointwise once the
    denominator is written as (1-t^2) + tau^2 t^2).
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    w = 0.5 * y_obs * y_obs
    t2 = tau * tau

    def f(t):
        # denominator 1 - (1-tau^2) t^2 written cancellation-free
        return np.exp(-w * t * t) / ((1.0 - t) * (1.0 + t) + t2 * t * t)

    # The denominator behaves like 2(1-t) + tau^2 as t -> 1: a feature of
    # width ~tau^2/2 that cannot be resolved in the t variable once it drops
    # below the double-precision spacing at 1.  Integrate the upper half in
    # d = 1 - t instead, where the feature scale stays fully representable.
    def g(d):
        omd = 1.0 - d
        return np.exp(-w * omd * omd) / (d * (2.0 - d) + t2 * omd * omd)

    bps = []
    b = max(0.5 * t2, 1e-60)
    while b < 0.5:
        bps.append(b)
        b *= 2.0
    val = (integrate_adaptive(f, 0.0, 0.5, spec)
           + integrate_adaptive(g, 0.0, 0.5, spec, initial_breakpoints=bps))
    return math.log(tau) + math.log(val)


def exp_integral_e1(z):
    """Exponential integral E1(z) = int_z^inf exp(-t)/t dt for z > 0."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("E1 requires z > 0")
    out = sp.exp1(z)
    return float(out) if out.ndim == 0 else out


def e1_scaled(z):
    """exp(z) * E1(z), computed without overflow for large z.

    For moderate z the direct product is exact; past the range of exp() a
    continued fraction (modified Lentz) evaluates the scaled function.
    """
    z = float(z)
    if z <= 0:
        raise ValueError("E1 requires z > 0")
    if z <= 500.0:
        return math.exp(z) * float(sp.exp1(z))
    # exp(z) E1(z) = 1/(z+1-) 1/(z+3-) 4/(z+5-) 9/(z+7-) ...  (modified Lentz)
    tiny = 1e-300
    b = z + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 200):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def gauss(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / _SQRT2PI
    return float(out) if out.ndim == 0 else out


def gauss_cdf(x):
    """Standard normal distribution function, accurate to ~1e-16."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * sp.erfc(-x / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out
