"""Data ingestion: orthogonal Daubechies-4 image transforms and functional
PCA, turning raw images and time-series panels into standardized Gaussian
sequence observations.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WaveletCoefficients", "FpcaModel", "dwt2_d4", "idwt2_d4",
    "coarse_coefficient_vector", "unit_variance_divisor", "fit_fpca",
    "fpca_scores", "read_pgm", "write_pgm", "read_curves_csv",
    "write_vector_csv", "read_vector_csv",
]

_SQRT3 = math.sqrt(3.0)
# orthonormal scaling filter; the wavelet filter is its alternating mirror
_H = np.array([1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]) / (4.0 * math.sqrt(2.0))
_G = np.array([_H[3], -_H[2], _H[1], -_H[0]])


def _analysis_1d(x):
    """One decimated analysis step along the last axis, periodic boundary."""
    m = x.shape[-1]
    idx = (2 * np.arange(m // 2)[:, None] + np.arange(4)[None, :]) % m
    lo = x[..., idx] @ _H
    hi = x[..., idx] @ _G
    return lo, hi


def _synthesis_1d(lo, hi):
    """Inverse of :func:`_analysis_1d` (transpose of the orthogonal map)."""
    m = 2 * lo.shape[-1]
    out = np.zeros(lo.shape[:-1] + (m,))
    idx = (2 * np.arange(m // 2)[:, None] + np.arange(4)[None, :]) % m
    np.add.at(out, (..., idx), lo[..., None] * _H + hi[..., None] * _G)
    return out


@dataclass
class WaveletCoefficients:
    """Multi-level separable 2D wavelet decomposition.

    ``approx`` is the coarsest low-pass block; ``details[j]`` holds the
    (horizontal, vertical, diagonal) blocks of detail level j, ordered from
    the coarsest (smallest side) to the finest.
    """

    approx: np.ndarray
    details: list          # [(H, V, D), ...] coarsest first

    @property
    def levels(self):
        return len(self.details)

    @property
    def flattened(self):
        return coarse_coefficient_vector(self, self.levels)


def dwt2_d4(image, levels):
    """Orthogonal 2D Daubechies-4 transform with periodic boundary.

    Requires a square input with power-of-two side at least ``2**levels``.
    Energy is preserved exactly up to rounding.
    """
    x = np.asarray(image, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError("image must be square")
    side = x.shape[0]
    if side & (side - 1) or side < 2 ** levels:
        raise ValueError("side must be a power of two >= 2**levels")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    details = []
    a = x
    for _ in range(levels):
        lo, hi = _analysis_1d(a)                 # rows
        ll, lh = _analysis_1d(np.swapaxes(lo, 0, 1))
        hl, hh = _analysis_1d(np.swapaxes(hi, 0, 1))
        a = np.swapaxes(ll, 0, 1)
        details.append((np.swapaxes(lh, 0, 1), np.swapaxes(hl, 0, 1),
                        np.swapaxes(hh, 0, 1)))
    details.reverse()   # coarsest first
    return WaveletCoefficients(approx=a, details=details)


def idwt2_d4(coeffs):
    """Inverse of :func:`dwt2_d4`."""
    a = coeffs.approx
    for (h, v, d) in coeffs.details:
        lo = _synthesis_1d(np.swapaxes(a, 0, 1), np.swapaxes(h, 0, 1))
        hi = _synthesis_1d(np.swapaxes(v, 0, 1), np.swapaxes(d, 0, 1))
        a = _synthesis_1d(np.swapaxes(lo, 0, 1), np.swapaxes(hi, 0, 1))
    return a


def coarse_coefficient_vector(coeffs, j_max, divisor=None):
    """Flatten the approximation block plus the ``j_max`` coarsest detail
    levels, in the fixed order approx, then per level (H, V, D) row-major.

    Increasing ``j_max`` appends to the output, never reorders it.  When a
    ``divisor`` from :func:`unit_variance_divisor` is given, the vector is
    scaled by it.
    """
    if j_max > coeffs.levels:
        raise ValueError("j_max exceeds the decomposition depth")
    parts = [coeffs.approx.ravel()]
    for (h, v, d) in coeffs.details[:j_max]:
        parts.extend((h.ravel(), v.ravel(), d.ravel()))
    out = np.concatenate(parts)
    if divisor is not None:
        out = out / divisor
    return out


def unit_variance_divisor(vectors):
    """Single scalar whose division standardizes a calibration corpus of
    coefficient vectors to unit pooled variance."""
    pooled = np.concatenate([np.asarray(v, dtype=float).ravel() for v in vectors])
    return float(pooled.std())


# ---------------------------------------------------------------------------
# Functional PCA
# ---------------------------------------------------------------------------

@dataclass
class FpcaModel:
    """Top-M eigenpairs of the trapezoid-weighted empirical covariance.

    Eigenfunctions are orthonormal under the trapezoid inner product on
    ``grid``; signs are fixed by making each function's largest-magnitude
    value positive.
    """

    grid: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray   # (M, T)

    @property
    def n_components(self):
        return self.eigenvalues.size


def _trapezoid_weights(grid):
    w = np.zeros(grid.size)
    d = np.diff(grid)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def fit_fpca(curves, grid, m_components):
    """Eigendecomposition of the uncentered empirical covariance
    ``K(t, t') = mean_i g_i(t) g_i(t')`` under trapezoid weighting."""
    curves = np.asarray(curves, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if curves.ndim != 2 or curves.shape[1] != grid.size:
        raise ValueError("curves must be (n_subjects, len(grid))")
    if curves.shape[0] < 2:
        raise ValueError("need at least two subjects")
    if not 1 <= m_components <= grid.size:
        raise ValueError("m_components must be in [1, len(grid)]")
    w = _trapezoid_weights(grid)
    k = curves.T @ curves / curves.shape[0]
    sw = np.sqrt(w)
    b = sw[:, None] * k * sw[None, :]
    vals, vecs = np.linalg.eigh(b)
    order = np.argsort(vals)[::-1][:m_components]
    vals = vals[order]
    if vals[-1] <= 1e-14 * vals[0]:
        raise ValueError("requested more components than the covariance rank")
    funcs = (vecs[:, order] / sw[:, None]).T           # (M, T)
    for i in range(funcs.shape[0]):
        j = np.argmax(np.abs(funcs[i]))
        if funcs[i, j] < 0:
            funcs[i] = -funcs[i]
    return FpcaModel(grid=grid, eigenvalues=vals, eigenfunctions=funcs)


def fpca_scores(model, curve):
    """Standardized projection scores of one curve on the fitted basis:
    trapezoid inner products divided by the root eigenvalues.

    Refuses eigenvalues below 1e-12: dividing by a root that small turns
    estimation noise into the dominant part of the score.
    """
    curve = np.asarray(curve, dtype=float)
    if curve.size != model.grid.size:
        raise ValueError("curve length must match the model grid")
    if np.any(model.eigenvalues < 1e-12):
        raise ValueError("eigenvalue below 1e-12: standardization is unstable")
    w = _trapezoid_weights(model.grid)
    a = model.eigenfunctions @ (w * curve)
    return a / np.sqrt(model.eigenvalues)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def read_pgm(path):
    """Read an 8- or 16-bit PGM image (plain P2 or raw P5) as floats in
    [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P2", b"P5"):
        raise ValueError("not a PGM file (expected P2 or P5)")
    raw = data[:2] == b"P5"
    # header tokens: magic, width, height, maxval; '#' comments allowed
    tokens = []
    i = 2
    while len(tokens) < 3:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace():
            i += 1
        tokens.append(int(data[start:i]))
    width, height, maxval = tokens
    i += 1  # single whitespace after maxval
    if raw:
        dtype = ">u2" if maxval > 255 else "u1"
        pixels = np.frombuffer(data, dtype=dtype, count=width * height, offset=i)
    else:
        pixels = np.array(data[i:].split(), dtype=float)[: width * height]
    return pixels.reshape(height, width).astype(float) / maxval


def write_pgm(path, image, maxval=255):
    """Write a float image in [0, 1] as a raw (P5) PGM."""
    arr = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    quant = np.round(arr * maxval).astype(">u2" if maxval > 255 else "u1")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n{maxval}\n".encode())
        fh.write(quant.tobytes())


def read_curves_csv(path):
    """Curve panel: first row holds the time grid, each later row one
    subject.  Returns ``(grid, curves)``."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    grid = np.array(rows[0], dtype=float)
    curves = np.array(rows[1:], dtype=float)
    if curves.ndim != 2 or curves.shape[1] != grid.size:
        raise ValueError("subject rows must match the grid length")
    return grid, curves


def write_vector_csv(path, vectors, names=None, item_ids=None):
    """Write coefficient/score vectors with a header naming coordinates."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    if names is None:
        names = [f"c{i}" for i in range(vectors.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = list(names)
        if item_ids is not None:
            header = ["item"] + header
        writer.writerow(header)
        for k, vec in enumerate(vectors):
            row = [f"{x:.17g}" for x in vec]
            if item_ids is not None:
                row = [str(item_ids[k])] + row
            writer.writerow(row)


def read_vector_csv(path, has_ids=False):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    body = rows[1:]
    if has_ids:
        ids = [row[0] for row in body]
        return ids, np.array([row[1:] for row in body], dtype=float)
    return np.array(body, dtype=float)
