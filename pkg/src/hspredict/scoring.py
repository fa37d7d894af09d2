"""Pairwise-verification toolkit: predictive scores against sample clouds,
threshold selection, graph clustering, and multiple-testing-corrected group
comparisons.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import backend

__all__ = [
    "ScoreMatrix", "ThresholdRule", "GroupTestResult", "energy_score",
    "rank_score", "coverage_rate", "symmetrize", "roc_auc",
    "select_threshold", "cluster_by_threshold", "wilcoxon_rank_sum",
    "benjamini_yekutieli", "pairwise_f1",
]

_DIAGONAL = {"energy": 0.0, "rank": 1.0, "coverage": 1.0}
# low scores mean acceptance for the energy metric; high scores for the others
ACCEPT_LOW = {"energy": True, "rank": False, "coverage": False}


@dataclass
class ScoreMatrix:
    """Square pairwise score matrix; entry (i, j) scores item j against the
    predictive cloud of item i, so the matrix is generally asymmetric."""

    entries: np.ndarray
    kind: str

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError("entries must be square")
        if self.kind not in _DIAGONAL:
            raise ValueError(f"unknown score kind {self.kind!r}")
        np.fill_diagonal(self.entries, _DIAGONAL[self.kind])

    @property
    def size(self):
        return self.entries.shape[0]

    @property
    def diagonal_convention(self):
        return _DIAGONAL[self.kind]

    @property
    def accept_low(self):
        return ACCEPT_LOW[self.kind]

    def offdiag(self):
        mask = ~np.eye(self.size, dtype=bool)
        return self.entries[mask]


@dataclass(frozen=True)
class ThresholdRule:
    """How to choose the accept/reject cutoff for a symmetrized matrix."""

    strategy: str                   # oracle | heldout | target_clusters | valley
    parameter: float = 0.0

    def __post_init__(self):
        if self.strategy not in ("oracle", "heldout", "target_clusters", "valley"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "target_clusters" and self.parameter < 1:
            raise ValueError("target_clusters needs parameter >= 1")
        if self.strategy == "heldout" and not 0.0 < self.parameter < 1.0:
            raise ValueError("heldout needs a fraction in (0, 1)")


@dataclass(frozen=True)
class GroupTestResult:
    pair_id: str
    raw_p: float
    adjusted_p: float
    direction: str                  # hyper | hypo | none


def energy_score(samples, y_other, exact=None, n_pairs=2000, rng=None):
    """Energy score of an observation against a predictive sample cloud:
    mean distance to the observation minus half the mean pairwise distance
    (diagonal zero pairs included).

    The pairwise term costs O(N^2); above 5000 draws an unbiased
    pair-subsampled estimate with ``n_pairs`` sampled ordered pairs is used
    unless ``exact=True``.  Subsampling requires ``rng``.
    """
    s = np.ascontiguousarray(getattr(samples, "samples", samples), dtype=float)
    y = np.ascontiguousarray(y_other, dtype=float)
    if s.shape[0] < 2:
        raise ValueError("need at least two predictive draws")
    term1 = backend.mean_dist_to_point(s, y)
    if exact is None:
        exact = s.shape[0] <= 5000
    if exact:
        term2 = backend.mean_pairwise_dist(s)
    else:
        if rng is None:
            raise ValueError("subsampled mode needs an rng")
        idx = rng.integers(0, s.shape[0], size=(2, n_pairs))
        term2 = backend.mean_pairwise_dist_pairs(
            s, np.ascontiguousarray(idx[0]), np.ascontiguousarray(idx[1]))
    return term1 - 0.5 * term2


def energy_score_row(samples, observations, exact=None, n_pairs=2000, rng=None):
    """Energy scores of many observations against one predictive cloud.

    The pairwise spread term depends only on the cloud, so it is computed
    once and shared across the row.
    """
    s = np.ascontiguousarray(getattr(samples, "samples", samples), dtype=float)
    obs = np.atleast_2d(np.asarray(observations, dtype=float))
    if exact is None:
        exact = s.shape[0] <= 5000
    if exact:
        term2 = backend.mean_pairwise_dist(s)
    else:
        if rng is None:
            raise ValueError("subsampled mode needs an rng")
        idx = rng.integers(0, s.shape[0], size=(2, n_pairs))
        term2 = backend.mean_pairwise_dist_pairs(
            s, np.ascontiguousarray(idx[0]), np.ascontiguousarray(idx[1]))
    return np.array([backend.mean_dist_to_point(s, np.ascontiguousarray(y))
                     for y in obs]) - 0.5 * term2


def rank_score(samples, y_other):
    """Fraction of predictive draws farther from the cloud mean than the
    observation is; near one for central observations."""
    s = np.asarray(getattr(samples, "samples", samples), dtype=float)
    if s.shape[0] < 2:
        raise ValueError("need at least two predictive draws")
    center = s.mean(axis=0)
    d_obs = np.linalg.norm(np.asarray(y_other, dtype=float) - center)
    d_samp = np.linalg.norm(s - center[None, :], axis=1)
    return float(np.mean(d_obs < d_samp))


def coverage_rate(samples, y_other, alpha=0.1):
    """Fraction of coordinates of the observation falling strictly inside
    the central (1-alpha) marginal predictive interval (type-7 quantiles)."""
    s = np.asarray(getattr(samples, "samples", samples), dtype=float)
    if s.shape[0] < 20.0 / alpha:
        raise ValueError("need at least 20/alpha draws for stable quantiles")
    lo = np.quantile(s, alpha / 2.0, axis=0)
    hi = np.quantile(s, 1.0 - alpha / 2.0, axis=0)
    y = np.asarray(y_other, dtype=float)
    return float(np.mean((y > lo) & (y < hi)))


def symmetrize(m):
    """Average each entry with its transpose; diagonal preserved."""
    out = ScoreMatrix(entries=0.5 * (m.entries + m.entries.T), kind=m.kind)
    return out


def roc_auc(scores, labels, accept_low):
    """Area under the ROC curve over all distinct thresholds.

    Rank-based (equivalent to the trapezoid area), with ties counted half;
    ``accept_low`` flips the score direction.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if labels.all() or not labels.any():
        raise ValueError("need both classes present")
    s = -scores if accept_low else scores
    pos = s[labels]
    neg = s[~labels]
    greater = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (greater + 0.5 * ties) / (pos.size * neg.size)


def pairwise_f1(sym, cutoff, labels):
    """Global F1 over unordered pairs, positives = same-label pairs."""
    labels = np.asarray(labels)
    n = sym.size
    iu = np.triu_indices(n, k=1)
    scores = sym.entries[iu]
    same = labels[iu[0]] == labels[iu[1]]
    accepted = scores < cutoff if sym.accept_low else scores > cutoff
    tp = np.sum(accepted & same)
    fp = np.sum(accepted & ~same)
    fn = np.sum(~accepted & same)
    if tp == 0:
        return 0.0
    prec = tp / (tp + fp)
    rec = tp / (tp + fn)
    return 2.0 * prec * rec / (prec + rec)


def _f1_maximizing_interval(sym, labels, item_subset=None):
    if item_subset is not None:
        sub = ScoreMatrix(sym.entries[np.ix_(item_subset, item_subset)], sym.kind)
        labels = np.asarray(labels)[item_subset]
        sym = sub
    uniq = np.unique(sym.offdiag())
    # candidate cutoffs between consecutive distinct scores plus the ends
    mids = 0.5 * (uniq[1:] + uniq[:-1])
    ends = [uniq[0] - 1.0, uniq[-1] + 1.0]
    cands = np.concatenate([[ends[0]], mids, [ends[1]]])
    f1 = np.array([pairwise_f1(sym, c, labels) for c in cands])
    best = f1.max()
    mask = f1 == best
    return float(cands[mask][0]), float(cands[mask][-1]), float(best)


def select_threshold(sym, rule, labels=None, rng=None):
    """Cutoff selection for a symmetrized score matrix.

    * ``oracle``: center of the cutoff interval maximizing global pairwise F1
      (requires labels).
    * ``heldout``: oracle restricted to a random fraction of items
      (requires labels and a seeded rng).
    * ``target_clusters``: midpoint of the cutoff interval producing exactly
      k connected components; reports the achievable counts when empty.
    * ``valley``: minimum of the smoothed score histogram between its two
      highest peaks (Freedman-Diaconis bins, 5-bin moving average).
    """
    if rule.strategy == "oracle":
        if labels is None:
            raise ValueError("oracle rule needs labels")
        lo, hi, _ = _f1_maximizing_interval(sym, labels)
        return 0.5 * (lo + hi)

    if rule.strategy == "heldout":
        if labels is None or rng is None:
            raise ValueError("heldout rule needs labels and an rng")
        n = sym.size
        k = max(2, int(round(rule.parameter * n)))
        subset = np.sort(rng.permutation(n)[:k])
        lo, hi, _ = _f1_maximizing_interval(sym, labels, item_subset=subset)
        return 0.5 * (lo + hi)

    if rule.strategy == "target_clusters":
        k = int(rule.parameter)
        uniq = np.unique(sym.offdiag())
        cands = np.concatenate([[uniq[0] - 1.0],
                                0.5 * (uniq[1:] + uniq[:-1]),
                                [uniq[-1] + 1.0]])
        counts = np.array([len(set(cluster_by_threshold(sym, c).tolist()))
                           for c in cands])
        hit = np.flatnonzero(counts == k)
        if hit.size == 0:
            achievable = np.unique(counts)
            raise ValueError(
                f"no cutoff yields exactly {k} clusters; achievable counts: "
                f"{achievable.tolist()}")
        return 0.5 * (cands[hit[0]] + cands[hit[-1]])

    # valley
    scores = sym.offdiag()
    q75, q25 = np.percentile(scores, [75, 25])
    width = 2.0 * (q75 - q25) / scores.size ** (1.0 / 3.0)
    if width <= 0:
        raise ValueError("degenerate score distribution: no valley")
    # Freedman-Diaconis can undershoot badly on strongly bimodal scores
    # (the IQR spans both modes); floor the count so two peaks plus a
    # valley remain resolvable under the 5-bin smoothing
    nbins = max(24, int(np.ceil((scores.max() - scores.min()) / width)))
    hist, edges = np.histogram(scores, bins=nbins)
    kernel = np.ones(5) / 5.0
    smooth = np.convolve(hist, kernel, mode="same")
    peaks = _plateau_peaks(smooth)
    if len(peaks) < 2:
        raise ValueError("fewer than two modes in the score histogram")
    top2 = sorted(sorted(peaks, key=lambda i: -smooth[i])[:2])
    between = slice(top2[0] + 1, top2[1])
    valley_idx = top2[0] + 1 + int(np.argmin(smooth[between]))
    return 0.5 * (edges[valley_idx] + edges[valley_idx + 1])


def write_score_matrix_csv(path, matrix, item_ids):
    """Write a score matrix with a header row and column of item ids."""
    import csv
    if len(item_ids) != matrix.size:
        raise ValueError("item_ids must match the matrix size")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["item"] + list(item_ids))
        for item, row in zip(item_ids, matrix.entries):
            w.writerow([item] + [f"{v:.17g}" for v in row])


def read_score_matrix_csv(path, kind):
    """Inverse of :func:`write_score_matrix_csv`; returns (matrix, ids)."""
    import csv
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    ids = rows[0][1:]
    entries = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    return ScoreMatrix(entries, kind), ids


def _plateau_peaks(values):
    """Indices (plateau centers) of local maxima, boundary plateaus included;
    the 5-bin smoothing of sharply clustered scores routinely produces flat
    runs that strict neighbor comparisons would miss."""
    n = len(values)
    peaks = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[j + 1] == values[i]:
            j += 1
        left_ok = i == 0 or values[i - 1] < values[i]
        right_ok = j == n - 1 or values[j + 1] < values[i]
        if left_ok and right_ok and values[i] > 0:
            peaks.append((i + j) // 2)
        i = j + 1
    return peaks


def cluster_by_threshold(sym, cutoff):
    """Connected components of the acceptance graph at the given cutoff.

    Returns integer component labels (renumbered in first-appearance order)
    covering every item exactly once.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    acc = (sym.entries < cutoff) if sym.accept_low else (sym.entries > cutoff)
    np.fill_diagonal(acc, False)
    _, labels = connected_components(csr_matrix(acc), directed=False)
    _, renumbered = np.unique(labels, return_inverse=True)
    return renumbered


def wilcoxon_rank_sum(a, b):
    """Two-sided rank-sum test p-value.

    Exact enumeration of the rank-sum distribution when the smaller sample
    has fewer than 8 observations and the data are tie-free; otherwise the
    normal approximation with tie and continuity corrections.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    pooled = np.concatenate([a, b])
    has_ties = np.unique(pooled).size < pooled.size

    if min(a.size, b.size) < 8 and not has_ties:
        return _exact_rank_sum_p(a, b)

    n1, n2 = a.size, b.size
    ranks = _midranks(pooled)
    w = ranks[:n1].sum()
    mu = n1 * (n1 + n2 + 1) / 2.0
    # tie correction to the rank-sum variance
    _, counts = np.unique(pooled, return_counts=True)
    n = n1 + n2
    tie_term = np.sum(counts ** 3 - counts) / ((n * (n - 1)) if n > 1 else 1.0)
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0
    z = (abs(w - mu) - 0.5) / math.sqrt(var)
    z = max(z, 0.0)
    return float(min(1.0, 2.0 * 0.5 * math.erfc(z / math.sqrt(2.0))))


def _midranks(x):
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    sx = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_rank_sum_p(a, b):
    n1 = a.size
    pooled = np.concatenate([a, b])
    ranks = np.argsort(np.argsort(pooled)) + 1
    w_obs = ranks[:n1].sum()
    n = pooled.size
    mu = n1 * (n + 1) / 2.0
    dev = abs(w_obs - mu)
    total = 0
    hits = 0
    for comb in itertools.combinations(range(1, n + 1), n1):
        total += 1
        if abs(sum(comb) - mu) >= dev - 1e-12:
            hits += 1
    return hits / total


def benjamini_yekutieli(pvals):
    """Step-down adjusted p-values controlling FDR under arbitrary
    dependence via the harmonic-number penalty.

    For the i-th smallest p-value the nominal value is
    ``p_(i) * K * c_K / i`` with ``c_K = sum_{k<=K} 1/k``; the reported
    value is the running minimum from the largest i down, capped at one,
    returned in the original input order.
    """
    p = np.asarray(pvals, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    k = p.size
    c_k = np.sum(1.0 / np.arange(1, k + 1))
    order = np.argsort(p, kind="stable")
    nominal = np.minimum(1.0, p[order] * k * c_k / np.arange(1, k + 1))
    adjusted_sorted = np.minimum.accumulate(nominal[::-1])[::-1]
    out = np.empty(k)
    out[order] = adjusted_sorted
    return out


def group_symmetry_tests(pair_ids, group_a, group_b, correction="by",
                         alpha=0.05):
    """Per-pair two-sided rank-sum tests of group A versus group B scores,
    with optional FDR adjustment.

    Direction labels read the scores as discrepancy measures for group A
    relative to group B: a significantly higher A-median means less
    symmetry ("hypo"), lower means more ("hyper"); insignificant results
    get "none".
    """
    raw = np.array([wilcoxon_rank_sum(ga, gb)
                    for ga, gb in zip(group_a, group_b)])
    if correction == "by":
        adj = benjamini_yekutieli(raw)
    elif correction == "none":
        adj = raw.copy()
    else:
        raise ValueError("correction must be 'by' or 'none'")
    out = []
    for pid, p_raw, p_adj, ga, gb in zip(pair_ids, raw, adj, group_a, group_b):
        if p_adj < alpha:
            direction = "hypo" if np.median(ga) > np.median(gb) else "hyper"
        else:
            direction = "none"
        out.append(GroupTestResult(pair_id=str(pid), raw_p=float(p_raw),
                                   adjusted_p=float(p_adj), direction=direction))
    return out
