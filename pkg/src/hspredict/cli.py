"""Command-line interface.

``hspredict <command> [--flag value]...`` with optional ``--config
path.json`` merged underneath explicit flags.  Every stochastic command
takes an explicit seed and produces byte-identical output for identical
configuration, independent of the worker count (capped by the
HSPREDICT_THREADS environment variable).

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import hierarchical as hb
from . import predictive as pr
from . import scoring as sc
from . import transforms as tr
from .model import make_theta, minimax_rate, tau_calibration
from .quad import QuadratureError

_FMT = "{:.17g}"


class ConfigError(Exception):
    pass


def _fmt(x):
    return _FMT.format(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else str(v) for v in row])


def _read_observation(path):
    data = tr.read_vector_csv(path)
    if data.ndim != 2 or data.shape[0] != 1:
        raise ConfigError(f"{path}: expected a header row plus one data row")
    return data[0]


def _parse_hyperprior(text, n):
    if text == "exp":
        return hb.HyperPrior.exponential(float(n))
    if text.startswith("fixed:"):
        return hb.HyperPrior.fixed(float(text.split(":", 1)[1]))
    raise ConfigError(f"unknown hyperprior {text!r} (use 'exp' or 'fixed:VALUE')")


def _parse_rule(text):
    if text == "oracle":
        return sc.ThresholdRule("oracle")
    if text == "valley":
        return sc.ThresholdRule("valley")
    if text.startswith("heldout:"):
        return sc.ThresholdRule("heldout", float(text.split(":", 1)[1]))
    if text.startswith("clusters:"):
        return sc.ThresholdRule("target_clusters", int(text.split(":", 1)[1]))
    raise ConfigError(f"unknown threshold rule {text!r}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_risk_curve(a):
    thetas = np.linspace(0.0, a["theta_max"], a["steps"] + 1)
    curve = pr.risk_curve(thetas, a["tau"], a["r"])
    _write_csv(a["out"], ["theta", "risk"],
               [(float(t), float(k)) for t, k in zip(curve.thetas, curve.risks)])


_SCHEMES = {
    "fixed20": lambda n: 20,
    "logn10": lambda n: 10.0 * math.log(n),
    "quarter10": lambda n: 10.0 * n ** 0.25,
    "sqrt": lambda n: n ** 0.5,
    "threequarter": lambda n: n ** 0.75,
    "nlogn": lambda n: n / math.log(n),
}


def cmd_max_risk(a):
    rows = []
    if a["scheme"] is not None:
        if a["scheme"] not in _SCHEMES:
            raise ConfigError(f"unknown scheme {a['scheme']!r}; "
                              f"choose from {sorted(_SCHEMES)}")
        n_values = [int(x) for x in str(a["n_list"]).split(",") if x]
        if not n_values:
            raise ConfigError("--n-list must name at least one n")
        pairs = [(n, max(1, min(n - 1, int(round(_SCHEMES[a["scheme"]](n))))))
                 for n in n_values]
    else:
        pairs = [(a["n"], a["s_n"])]
    for n, s_n in pairs:
        tau = tau_calibration(n, s_n, a["alpha"]).tau
        mx = pr.max_risk_fixed_tau(n, s_n, tau, a["r"],
                                   grid_points=a["grid_points"])
        mm = minimax_rate(n, s_n, a["r"])
        rows.append((n, s_n, float(tau), float(mx), float(mm), float(mx / mm)))
    _write_csv(a["out"], ["n", "s_n", "tau", "max_risk", "minimax", "ratio"], rows)


def cmd_tau_posterior(a):
    y = _read_observation(a["input"])
    prior = _parse_hyperprior(a["hyperprior"], len(y))
    post = hb.build_tau_posterior(y, prior, hb.TauGridSpec(size=a["grid_size"]))
    dens = np.exp(post.log_density)
    header = ["tau", "density"]
    extra = []
    if a["s_n"] is not None:
        t0 = tau_calibration(len(y), a["s_n"], 0.0).tau
        t5 = tau_calibration(len(y), a["s_n"], 0.5).tau
        header += ["tau_n_0", "tau_n_half"]
        extra = [float(t0), float(t5)]
    _write_csv(a["out"], header,
               [(float(t), float(d), *extra) for t, d in zip(post.grid, dens)])


def cmd_simulate_risk(a):
    theta = make_theta(a["setup"], a["n"], a["s_strong"], c=a["c"],
                       total_signals=a["total_signals"],
                       weak_scale=a["weak_scale"]).theta
    prior = _parse_hyperprior(a["hyperprior"], a["n"])
    est, se = hb.estimate_adaptive_risk(
        theta, prior, a["r"], a["b"], a["q"], a["l"], seed=a["seed"],
        workers=hb.default_workers())
    _write_csv(a["out"],
               ["setup", "n", "s_strong", "c", "b", "q", "l", "seed",
                "estimate", "std_error"],
               [(a["setup"], a["n"], a["s_strong"], float(a["c"]), a["b"],
                 a["q"], a["l"], a["seed"], float(est), float(se))])


def cmd_predict(a):
    y = _read_observation(a["input"])
    rng = np.random.default_rng(a["seed"])
    mode = a["mode"]
    if mode == "adaptive":
        s = hb.sample_predictive_adaptive(
            y, hb.HyperPrior.exponential(float(len(y))), a["r"], a["count"], rng)
    elif mode.startswith("fixed:"):
        tau = float(mode.split(":", 1)[1])
        s = pr.sample_predictive_fixed_tau(y, tau, a["r"], a["count"], rng)
    elif mode == "gaussian":
        draws = (0.5 * y[None, :] + math.sqrt(a["r"] + 0.5)
                 * rng.standard_normal((a["count"], len(y))))
        s = pr.PredictiveSampleSet(samples=draws, r=a["r"], kind="gaussian")
    else:
        raise ConfigError(f"unknown mode {mode!r} "
                          "(use 'adaptive', 'fixed:TAU' or 'gaussian')")
    tr.write_vector_csv(a["out"], s.samples)


def _read_items(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    has_label = len(header) > 1 and header[1] == "label"
    ids, labels, vecs = [], [], []
    for row in rows[1:]:
        ids.append(row[0])
        if has_label:
            labels.append(row[1])
            vecs.append([float(x) for x in row[2:]])
        else:
            vecs.append([float(x) for x in row[1:]])
    return ids, (labels if has_label else None), np.array(vecs)


def cmd_verify(a):
    ids, labels, obs = _read_items(a["items"])
    n_items = len(ids)
    rng = np.random.default_rng(a["seed"])
    kind = a["score"]
    entries = np.zeros((n_items, n_items))
    if kind not in ("energy", "rank", "coverage"):
        raise ConfigError(f"unknown score {kind!r}")
    for i, item in enumerate(ids):
        sample_path = os.path.join(a["pred_dir"], f"{item}.csv")
        if not os.path.exists(sample_path):
            raise ConfigError(f"missing predictive sample file {sample_path}")
        samples = tr.read_vector_csv(sample_path)
        if kind == "energy":
            # the pairwise spread term is shared across the whole row
            entries[i] = sc.energy_score_row(samples, obs, rng=rng,
                                             exact=a["exact"])
        else:
            for j in range(n_items):
                if i == j:
                    continue
                if kind == "rank":
                    entries[i, j] = sc.rank_score(samples, obs[j])
                else:
                    entries[i, j] = sc.coverage_rate(samples, obs[j], a["alpha"])
    matrix = sc.ScoreMatrix(entries, kind)
    sym = sc.symmetrize(matrix)

    rule = _parse_rule(a["threshold_rule"])
    label_arr = np.array(labels) if labels is not None else None
    if rule.strategy in ("oracle", "heldout") and label_arr is None:
        raise ConfigError("items file needs a 'label' column for this rule")
    cutoff = sc.select_threshold(sym, rule, labels=label_arr, rng=rng)
    clusters = sc.cluster_by_threshold(sym, cutoff)

    prefix = a["out_prefix"]
    sc.write_score_matrix_csv(prefix + ".matrix.csv", matrix, ids)
    rows = [(item, int(c)) for item, c in zip(ids, clusters)]
    f1 = sc.pairwise_f1(sym, cutoff, label_arr) if label_arr is not None else ""
    _write_csv(prefix + ".clusters.csv", ["item", "cluster"], rows)
    roc_rows = []
    if label_arr is not None:
        iu = np.triu_indices(n_items, k=1)
        scores = sym.entries[iu]
        same = label_arr[iu[0]] == label_arr[iu[1]]
        auc = sc.roc_auc(scores, same, accept_low=sym.accept_low)
        order = np.argsort(scores)
        for t in np.unique(scores):
            acc = scores < t if sym.accept_low else scores > t
            tpr = float(np.sum(acc & same)) / max(1, np.sum(same))
            fpr = float(np.sum(acc & ~same)) / max(1, np.sum(~same))
            roc_rows.append((float(t), float(fpr), float(tpr), float(auc),
                             float(cutoff), f1))
    _write_csv(prefix + ".roc.csv",
               ["threshold", "fpr", "tpr", "auc", "selected_cutoff", "f1_at_cutoff"],
               roc_rows)


def _read_group(path):
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    ids = [row[0] for row in rows[1:]]
    vals = [np.array(row[1:], dtype=float) for row in rows[1:]]
    return ids, vals


def cmd_symmetry_test(a):
    ids_a, group_a = _read_group(a["group_a"])
    ids_b, group_b = _read_group(a["group_b"])
    if ids_a != ids_b:
        raise ConfigError("group files must list the same pair_ids in order")
    res = sc.group_symmetry_tests(ids_a, group_a, group_b,
                                  correction=a["correction"])
    _write_csv(a["out"], ["pair_id", "raw_p", "adjusted_p", "direction"],
               [(r.pair_id, float(r.raw_p), float(r.adjusted_p), r.direction)
                for r in res])


def cmd_dwt(a):
    img = tr.read_pgm(a["input"])
    side = img.shape[0]
    levels = a["levels"] if a["levels"] is not None else int(math.log2(side))
    co = tr.dwt2_d4(img, levels)
    vec = tr.coarse_coefficient_vector(co, a["j_max"], divisor=a["divisor"])
    tr.write_vector_csv(a["out"], vec[None, :])


def cmd_fpca(a):
    grid, curves = tr.read_curves_csv(a["curves"])
    model = tr.fit_fpca(curves, grid, a["m"])
    scores = np.array([tr.fpca_scores(model, c) for c in curves])
    tr.write_vector_csv(a["out"], scores,
                        names=[f"score{m}" for m in range(a["m"])])
    if a["model_out"] is not None:
        rows = [(float(g), *(float(f[i]) for f in model.eigenfunctions))
                for i, g in enumerate(grid)]
        _write_csv(a["model_out"],
                   ["t"] + [f"phi{m}" for m in range(a["m"])], rows)


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

_DEFAULTS = {
    "risk-curve": {"tau": 0.05, "r": 1.0, "theta_max": 12.0, "steps": 100},
    "max-risk": {"n": 10_000, "s_n": 100, "alpha": 0.0, "r": 1.0,
                 "scheme": None, "n_list": "", "grid_points": 101},
    "tau-posterior": {"hyperprior": "exp", "grid_size": 1024, "s_n": None},
    "simulate-risk": {"setup": "strongweak", "n": 500, "s_strong": 25,
                      "c": 2.0, "weak_scale": 1.0, "total_signals": 300,
                      "b": 1000, "q": 200, "l": 300, "r": 1.0,
                      "hyperprior": "exp"},
    "predict": {"mode": "adaptive", "count": 10_000, "r": 1.0},
    "verify": {"score": "energy", "threshold_rule": "oracle", "alpha": 0.1,
               "exact": None},
    "symmetry-test": {"correction": "by"},
    "dwt": {"levels": None, "j_max": 4, "divisor": None},
    "fpca": {"m": 5, "model_out": None},
}

_REQUIRED = {
    "risk-curve": ["out"],
    "max-risk": ["out"],
    "tau-posterior": ["input", "out"],
    "simulate-risk": ["seed", "out"],
    "predict": ["input", "seed", "out"],
    "verify": ["pred_dir", "items", "seed", "out_prefix"],
    "symmetry-test": ["group_a", "group_b", "out"],
    "dwt": ["input", "out"],
    "fpca": ["curves", "out"],
}

_HANDLERS = {
    "risk-curve": cmd_risk_curve,
    "max-risk": cmd_max_risk,
    "tau-posterior": cmd_tau_posterior,
    "simulate-risk": cmd_simulate_risk,
    "predict": cmd_predict,
    "verify": cmd_verify,
    "symmetry-test": cmd_symmetry_test,
    "dwt": cmd_dwt,
    "fpca": cmd_fpca,
}

_INT_KEYS = {"steps", "n", "s_n", "grid_size", "s_strong", "total_signals",
             "b", "q", "l", "seed", "count", "m", "levels", "j_max",
             "grid_points"}
_FLOAT_KEYS = {"tau", "r", "theta_max", "alpha", "c", "weak_scale", "divisor"}


def _build_parser():
    p = argparse.ArgumentParser(prog="hspredict", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    flag_sets = {
        "risk-curve": ["tau", "r", "theta-max", "steps", "out"],
        "max-risk": ["n", "s-n", "alpha", "r", "scheme", "n-list",
                     "grid-points", "out"],
        "tau-posterior": ["input", "hyperprior", "grid-size", "s-n", "out"],
        "simulate-risk": ["setup", "n", "s-strong", "c", "weak-scale",
                          "total-signals", "b", "q", "l", "r", "hyperprior",
                          "seed", "out"],
        "predict": ["input", "mode", "count", "r", "seed", "out"],
        "verify": ["pred-dir", "items", "score", "threshold-rule", "alpha",
                   "exact", "seed", "out-prefix"],
        "symmetry-test": ["group-a", "group-b", "correction", "out"],
        "dwt": ["input", "levels", "j-max", "divisor", "out"],
        "fpca": ["curves", "m", "model-out", "out"],
    }
    for name, flags in flag_sets.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None)
        for flag in flags:
            key = flag.replace("-", "_")
            if key == "exact":
                sp.add_argument("--exact", action="store_true", default=None)
            else:
                sp.add_argument(f"--{flag}", dest=key, default=None)
    return p


def _coerce(key, value):
    if value is None:
        return None
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    return value


def _merge_config(command, ns):
    merged = dict(_DEFAULTS.get(command, {}))
    if ns.config is not None:
        try:
            with open(ns.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {ns.config}: {e}")
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        for k, v in cfg.items():
            merged[k.replace("-", "_")] = v
    for k, v in vars(ns).items():
        if k in ("command", "config") or v is None:
            continue
        merged[k] = v
    for k in list(merged):
        try:
            merged[k] = _coerce(k, merged[k])
        except (TypeError, ValueError):
            raise ConfigError(f"flag --{k.replace('_', '-')}: bad value {merged[k]!r}")
    for k in _REQUIRED[command]:
        if merged.get(k) is None:
            raise ConfigError(f"missing required flag --{k.replace('_', '-')}")
    return merged


def main(argv=None):
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit:
        raise SystemExit(2)
    try:
        args = _merge_config(ns.command, ns)
        _HANDLERS[ns.command](args)
    except (ConfigError, ValueError, OSError) as e:
        print(f"error: config: {e}", file=sys.stderr)
        return 2
    except (QuadratureError, ArithmeticError, FloatingPointError) as e:
        print(f"error: numeric: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
