"""Kernel backend selection.

The hot inner loops exist twice: a Cython extension (``_kernels_c``) and a
pure-NumPy fallback (``_kernels_py``).  The extension is used when it
imported successfully; set ``HSPREDICT_BACKEND=py`` (or ``c``) to force a
choice, e.g. for the comparison benchmark.
"""

import os

from . import _kernels_py

try:
    from . import _kernels_c
except ImportError:
    _kernels_c = None

_choice = os.environ.get("HSPREDICT_BACKEND", "auto").lower()
if _choice == "py":
    _impl = _kernels_py
elif _choice == "c":
    if _kernels_c is None:
        raise ImportError("HSPREDICT_BACKEND=c but the compiled kernels are "
                          "not available; build the extension first")
    _impl = _kernels_c
elif _choice == "auto":
    _impl = _kernels_c if _kernels_c is not None else _kernels_py
else:
    raise ValueError(f"unknown HSPREDICT_BACKEND value {_choice!r}")

BACKEND = "c" if _impl is _kernels_c else "python"

predictive_log_inner = _impl.predictive_log_inner
sample_conjugate_draws = _impl.sample_conjugate_draws
mean_dist_to_point = _impl.mean_dist_to_point
mean_pairwise_dist = _impl.mean_pairwise_dist
mean_pairwise_dist_pairs = _impl.mean_pairwise_dist_pairs


def get_backends():
    """Both kernel modules (compiled one may be None); used by the benchmark."""
    return {"c": _kernels_c, "python": _kernels_py}
