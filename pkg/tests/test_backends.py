"""The compiled kernels and the NumPy fallbacks must agree numerically."""

import numpy as np
import pytest

from hspredict.backend import BACKEND, get_backends
from hspredict.hierarchical import _shrink_t_grid

BACKENDS = get_backends()

needs_ext = pytest.mark.skipif(BACKENDS["c"] is None,
                               reason="compiled kernels not built")


def _workload():
    rng = np.random.default_rng(123)
    n, L = 40, 25
    y = np.ascontiguousarray(rng.standard_normal(n) * 3)
    yt = np.ascontiguousarray(rng.standard_normal(n) * 3)
    tau = 0.07
    t_grid = _shrink_t_grid(tau)
    expo = np.exp(-np.outer(0.5 * y * y, 1.0 - t_grid * t_grid))
    u = rng.random((n, L))
    return y, yt, tau, t_grid, expo, u, rng


@needs_ext
def test_predictive_log_inner_agrees():
    y, yt, tau, t_grid, expo, u, _ = _workload()
    a = BACKENDS["c"].predictive_log_inner(y, yt, tau, 1.0, t_grid, expo, u)
    b = BACKENDS["python"].predictive_log_inner(y, yt, tau, 1.0, t_grid, expo, u)
    assert a == pytest.approx(b, abs=1e-9)


@needs_ext
def test_sample_conjugate_draws_agree():
    y, _, tau, t_grid, expo, _, rng = _workload()
    u1 = np.ascontiguousarray(rng.random(y.size))
    z = np.ascontiguousarray(rng.standard_normal(y.size))
    a = BACKENDS["c"].sample_conjugate_draws(y, tau, 1.0, t_grid, expo, u1, z)
    b = BACKENDS["python"].sample_conjugate_draws(y, tau, 1.0, t_grid, expo, u1, z)
    assert np.allclose(a, b, atol=1e-10)


@needs_ext
def test_energy_kernels_agree():
    rng = np.random.default_rng(7)
    s = np.ascontiguousarray(rng.standard_normal((300, 9)))
    point = np.ascontiguousarray(rng.standard_normal(9))
    pairs = rng.integers(0, 300, size=(2, 500)).astype(np.int64)
    # the fallback's blocked Gram-expansion of pairwise distances rounds
    # differently than the direct difference sums, hence the looser bar
    for name, args in [
        ("mean_dist_to_point", (s, point)),
        ("mean_pairwise_dist", (s,)),
        ("mean_pairwise_dist_pairs",
         (s, np.ascontiguousarray(pairs[0]), np.ascontiguousarray(pairs[1]))),
    ]:
        a = getattr(BACKENDS["c"], name)(*args)
        b = getattr(BACKENDS["python"], name)(*args)
        assert a == pytest.approx(b, rel=1e-9), name


def test_selected_backend_exposed():
    assert BACKEND in ("c", "python")
