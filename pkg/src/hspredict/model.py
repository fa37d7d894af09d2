"""Problem types for the sparse Gaussian sequence model.

Observed Y ~ N(theta, I_n); to predict Y~ ~ N(theta, r*I_n) with the same
unknown sparse mean.  All logs are natural.
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SequenceProblem", "ParameterVector", "ThetaMinSpec", "GlobalScale",
    "minimax_rate", "tau_calibration", "make_theta",
]


@dataclass(frozen=True)
class SequenceProblem:
    """Dimensions of the prediction problem.

    ``r`` is the future-to-past noise-variance ratio; ``v = (1 + 1/r)^-1``
    is the variance share that shows up throughout the risk formulas.
    """

    n: int
    r: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if not self.r > 0:
            raise ValueError("r must be > 0")

    @property
    def v(self):
        return 1.0 / (1.0 + 1.0 / self.r)


@dataclass(frozen=True)
class GlobalScale:
    """Global shrinkage scale of the Horseshoe prior."""

    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be > 0")


@dataclass
class ParameterVector:
    """A mean vector together with its support."""

    theta: np.ndarray
    support: np.ndarray = field(init=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.support = np.flatnonzero(self.theta)

    @property
    def sparsity(self):
        return int(self.support.size)


@dataclass(frozen=True)
class ThetaMinSpec:
    """Sparsity class with a minimum-signal condition.

    A vector belongs to the class when it has at most ``s_n`` nonzero
    entries and every nonzero entry exceeds ``c * sqrt(2 log n)`` in
    absolute value.
    """

    s_n: int
    c: float

    def __post_init__(self):
        if self.s_n < 0:
            raise ValueError("s_n must be >= 0")
        if not self.c > 0:
            raise ValueError("c must be > 0")

    def contains(self, theta, n=None):
        theta = np.asarray(theta, dtype=float)
        n = len(theta) if n is None else n
        nz = theta[theta != 0.0]
        if nz.size > self.s_n:
            return False
        if nz.size == 0:
            return True
        return bool(np.min(np.abs(nz)) > self.c * math.sqrt(2.0 * math.log(n)))


def minimax_rate(n, s_n, r):
    """Asymptotic minimax predictive KL risk over s_n-sparse means:
    ``s_n / (1 + r) * log(n / s_n)``."""
    if not 1 <= s_n < n:
        raise ValueError("need 1 <= s_n < n")
    if not r > 0:
        raise ValueError("r must be > 0")
    return s_n / (1.0 + r) * math.log(n / s_n)


def tau_calibration(n, s_n, alpha):
    """Oracle global-scale calibration ``s_n * log(n/s_n)**alpha / n``.

    ``alpha`` must lie in [0, 1/2], the range for which the calibration is
    known to be risk-optimal.
    """
    if not 1 <= s_n < n:
        raise ValueError("need 1 <= s_n < n")
    if not 0.0 <= alpha <= 0.5:
        raise ValueError("alpha must be in [0, 1/2]")
    return GlobalScale(s_n * math.log(n / s_n) ** alpha / n)


def make_theta(setup, n, s_strong, c=3.0, total_signals=300, weak_scale=1.0):
    """Construct the benchmark mean vectors used in the simulation studies.

    Parameters
    ----------
    setup : {"setup1", "setup2", "strongweak"}
        * ``setup1``: ``s_strong`` entries at ``3*sqrt(2 log n)``, rest zero.
        * ``setup2``: additionally ``n/2 - s_strong`` weak entries at
          ``0.3*sqrt(2 log n)``.
        * ``strongweak``: ``s_strong`` entries at ``c*sqrt(2 log n)``,
          ``total_signals - s_strong`` entries at
          ``weak_scale*sqrt(2 log n)``, rest zero.
    n : int
        Dimension.
    s_strong : int
        Number of strong signals.
    c : float
        Strong-signal multiplier for ``strongweak``.
    total_signals : int
        Total nonzero count for ``strongweak``.
    weak_scale : float
        Weak-signal multiplier for ``strongweak``.

    Nonzero entries are placed at the lowest indices so that identical
    arguments always produce identical vectors.
    """
    if n < 1 or s_strong < 0:
        raise ValueError("need n >= 1 and s_strong >= 0")
    base = math.sqrt(2.0 * math.log(n))
    theta = np.zeros(n)
    if setup == "setup1":
        if s_strong > n:
            raise ValueError("s_strong exceeds n")
        theta[:s_strong] = 3.0 * base
    elif setup == "setup2":
        n_weak = n // 2 - s_strong
        if n_weak < 0 or s_strong + n_weak > n:
            raise ValueError("inconsistent counts for setup2")
        theta[:s_strong] = 3.0 * base
        theta[s_strong:s_strong + n_weak] = 0.3 * base
    elif setup == "strongweak":
        n_weak = total_signals - s_strong
        if n_weak < 0 or total_signals > n:
            raise ValueError("inconsistent counts for strongweak")
        theta[:s_strong] = c * base
        theta[s_strong:total_signals] = weak_scale * base
    else:
        raise ValueError(f"unknown setup {setup!r}")
    return ParameterVector(theta)
