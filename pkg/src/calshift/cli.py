"""Command line front end: ``calshift {estimate,weights,variance,simulate,resample}``.

Every command prints a JSON report (schema ``calshift/1``) to stdout, or to
``--output``. Failures print a JSON error object to stderr and exit with
2 (bad input), 3 (numerical problem) or 4 (no convergence).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import io as cio
from .core import ClassDistribution, ImportanceWeights, LabeledSet
from .errors import CalshiftError, InputError
from .estimators import DEFAULT_BINS, estimate_ce_shifted, estimate_ce_source, estimate_classwise_ce
from .simkit import (
    SimConfig,
    apply_label_shift,
    generate_beta_binary,
    longtail_resample,
    ratio_distribution,
)
from .variance import (
    DEFAULT_DRAWS,
    EstimatorConfig,
    monte_carlo_variance,
    variance_no_shift,
    variance_shifted,
)
from .weights import DEFAULT_LAMBDA, estimate_weights, oracle_weights

WEIGHT_CHOICES = ["oracle", "bbsl", "rlls", "em", "em-bcts"]


def _load(path, fmt):
    return cio.parse_prediction_file(path, fmt)


def _load_labeled(path, fmt, what):
    data = _load(path, fmt)
    if not isinstance(data, LabeledSet):
        raise InputError(f"{what} file {path} has no label column")
    return data


def _split_target(path, fmt):
    data = _load(path, fmt)
    if isinstance(data, LabeledSet):
        return data.preds, data.labels
    return data, None


def _weights_dict(w: ImportanceWeights):
    return {
        "method": w.method.value,
        "omega": [float(v) for v in w.omega],
        "diagnostics": {k: _jsonable(v) for k, v in sorted(w.diagnostics.items())},
    }


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int, bool, np.bool_)):
        return v.item() if hasattr(v, "item") else v
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    return v


def _compute_weights(args, source, target_preds, target_labels):
    if args.weights == "oracle" and target_labels is None:
        raise InputError("--weights oracle needs a labeled target file")
    return estimate_weights(
        args.weights,
        source,
        target_preds,
        target_labels=target_labels,
        lam=args.lam,
        tol=args.tol,
        max_iter=args.max_iter,
    )


def _classes(args, k):
    return list(range(k)) if args.class_index is None else [args.class_index]


def _variance(args, source, target_preds, weights, classes):
    """Per-class variances and a bound for the variance of their average.

    The bound ``(mean_c sd_c)^2`` assumes perfectly correlated classes, which
    is exact for binary problems, where both class estimates move together.
    """
    per = []
    for c in classes:
        if target_preds is None:
            rep = variance_no_shift(source, c, args.bins, args.norm, args.draws, args.seed)
        else:
            rep = variance_shifted(
                source, target_preds, weights, c, args.bins, args.norm, args.draws, args.seed,
                count_model=args.count_model,
            )
        per.append(rep.variance)
    per = np.array(per)
    return float(np.mean(np.sqrt(per)) ** 2), per


def cmd_estimate(args):
    source = _load_labeled(args.source, args.format, "source")
    target_preds = target_labels = weights = None
    if args.target:
        target_preds, target_labels = _split_target(args.target, args.format)
        weights = _compute_weights(args, source, target_preds, target_labels)
    classes = _classes(args, source.k)
    report = estimate_classwise_ce(
        source,
        target_preds,
        weights,
        b=args.bins,
        p=args.norm,
        mode=args.mode,
        classes=classes,
        clamp=args.clamp_ratio,
    )
    result = {
        "estimator": "shifted" if target_preds is not None else "source",
        "p": report.p,
        "bins": report.bins,
        "n": report.n,
        "m": report.m,
        "ce_pow_p": report.ce_pow_p,
        "ce": report.ce,
        "display_scale": args.display_scale,
        "ce_display": report.ce * args.display_scale,
    }
    if target_preds is None:
        result["mode"] = args.mode
    per_var = None
    if not args.no_variance:
        var, per_var = _variance(args, source, target_preds, weights, classes)
        result["variance"] = var
        result["std"] = float(np.sqrt(var))
        result["draws"] = args.draws
        result["seed"] = args.seed
        if target_preds is not None:
            result["count_model"] = args.count_model
    if weights is not None:
        result["weights"] = _weights_dict(weights)
    table = []
    for i, c in enumerate(classes):
        row = {"class": c, "ce_pow_p": float(report.per_class[i])}
        if per_var is not None:
            row["variance"] = float(per_var[i])
        table.append(row)
    result["per_class"] = table
    if args.per_class_csv:
        header = list(table[0].keys())
        cio.write_table_csv(args.per_class_csv, header, [[r[h] for h in header] for r in table])
    return result


def cmd_weights(args):
    source = _load_labeled(args.source, args.format, "source")
    target_preds, target_labels = _split_target(args.target, args.format)
    args.weights = args.method
    return {"weights": _weights_dict(_compute_weights(args, source, target_preds, target_labels))}


def cmd_variance(args):
    source = _load_labeled(args.source, args.format, "source")
    target_preds = weights = None
    if args.target:
        target_preds, target_labels = _split_target(args.target, args.format)
        weights = _compute_weights(args, source, target_preds, target_labels)
    classes = _classes(args, source.k)
    var, per = _variance(args, source, target_preds, weights, classes)
    result = {
        "estimator": "shifted" if target_preds is not None else "source",
        "p": args.norm,
        "bins": args.bins,
        "draws": args.draws,
        "seed": args.seed,
        "variance": var,
        "std": float(np.sqrt(var)),
        "per_class": [{"class": c, "variance": float(v)} for c, v in zip(classes, per)],
    }
    if weights is not None:
        result["count_model"] = args.count_model
        result["weights"] = _weights_dict(weights)
    return result


def _sim_config(args) -> SimConfig:
    if args.preset != "appendix-a2":
        raise InputError(f"unknown preset {args.preset!r}")
    return SimConfig(n=args.n, m=args.m, p_s1=args.p_s1, p_t1=args.p_t1, seed=args.seed)


def cmd_simulate(args):
    cfg = _sim_config(args)
    source, target = generate_beta_binary(cfg)
    if args.write_source:
        cio.write_prediction_file(args.write_source, source, args.format)
    if args.write_target:
        target_out = target if args.label_target else target.preds
        cio.write_prediction_file(args.write_target, target_out, args.format)
    ci = 1
    w = oracle_weights(source.labels, target.labels, 2)
    f0 = variance_no_shift(source, ci, args.bins, args.norm, args.draws, args.seed)
    f1 = variance_shifted(
        source, target.preds, w, ci, args.bins, args.norm, args.draws, args.seed,
        count_model=args.count_model,
    )
    est0 = estimate_ce_source(source, ci, args.bins, args.norm)
    est1 = estimate_ce_shifted(source, target.preds, w, ci, args.bins, args.norm)
    result = {
        "preset": args.preset,
        "config": {
            "n": cfg.n, "m": cfg.m, "p_s1": cfg.p_s1, "p_t1": cfg.p_t1,
            "alpha_pos": cfg.alpha_pos, "beta_pos": cfg.beta_pos,
            "alpha_neg": cfg.alpha_neg, "beta_neg": cfg.beta_neg, "seed": cfg.seed,
        },
        "p": args.norm,
        "bins": args.bins,
        "draws": args.draws,
        "sims": args.sims,
        "count_model": args.count_model,
        "weights": _weights_dict(w),
        "no_shift": {"ce_pow_p": est0.ce_pow_p, "formula_variance": f0.variance},
        "shifted": {"ce_pow_p": est1.ce_pow_p, "formula_variance": f1.variance},
    }
    if args.sims > 0:
        result["no_shift"]["monte_carlo_variance"] = monte_carlo_variance(
            cfg, EstimatorConfig(shifted=False, b=args.bins, p=args.norm), args.sims, args.seed
        )
        result["shifted"]["monte_carlo_variance"] = monte_carlo_variance(
            cfg, EstimatorConfig(shifted=True, b=args.bins, p=args.norm), args.sims, args.seed
        )
    return result


def _parse_ratio(text):
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"ratio must look like NEG:POS, got {text!r}") from None
    if a < 0 or b < 0 or a + b == 0:
        raise InputError(f"invalid ratio {text!r}")
    return a, b


def cmd_resample(args):
    data = _load_labeled(args.input, args.format, "input")
    if (args.imbalance_factor is None) == (args.ratio is None and args.dist is None):
        raise InputError("give exactly one of --imbalance-factor, --ratio or --dist")
    if args.imbalance_factor is not None:
        idx = longtail_resample(data.labels, data.k, args.imbalance_factor, args.seed)
        out = data.subset(idx)
    else:
        if args.ratio is not None:
            if data.k != 2:
                raise InputError("--ratio applies to binary data only")
            dist = ratio_distribution(*_parse_ratio(args.ratio))
        else:
            dist = ClassDistribution(np.array([float(v) for v in args.dist.split(",")]))
        total = args.total if args.total is not None else data.n
        out = apply_label_shift(data, dist, total, args.seed)
    cio.write_prediction_file(args.data_output, out, args.format)
    counts = np.bincount(out.labels, minlength=data.k)
    return {"output": args.data_output, "n": out.n, "class_counts": [int(c) for c in counts]}


def _add_common(p):
    p.add_argument("--format", choices=["csv", "jsonl"], default=None,
                   help="file format (default: by extension)")
    p.add_argument("--output", default=None, help="write the report here instead of stdout")
    p.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")


def _add_weight_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=1000)


def _add_estimation_flags(p):
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--norm", type=int, choices=[1, 2], default=2)
    p.add_argument("--class-index", type=int, default=None,
                   help="binary CE of one class; default averages over all classes")
    p.add_argument("--draws", type=int, default=DEFAULT_DRAWS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count-model", choices=["conditional", "unconditional"],
                   default="conditional")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="calshift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="calibration error, optionally under label shift")
    p.add_argument("--source", required=True)
    p.add_argument("--target")
    p.add_argument("--weights", choices=WEIGHT_CHOICES, default="rlls")
    p.add_argument("--mode", choices=["plugin", "loo"], default="plugin")
    p.add_argument("--clamp-ratio", action="store_true")
    p.add_argument("--display-scale", type=float, default=100.0)
    p.add_argument("--no-variance", action="store_true")
    p.add_argument("--per-class-csv")
    _add_estimation_flags(p)
    _add_weight_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("weights", help="importance weights only")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--method", choices=WEIGHT_CHOICES, default="rlls")
    _add_weight_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("variance", help="analytic variance of the CE estimate")
    p.add_argument("--source", required=True)
    p.add_argument("--target")
    p.add_argument("--weights", choices=WEIGHT_CHOICES, default="rlls")
    _add_estimation_flags(p)
    _add_weight_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("simulate", help="formula vs Monte Carlo variance on simulated data")
    p.add_argument("--preset", default="appendix-a2")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--p-s1", type=float, default=0.25)
    p.add_argument("--p-t1", type=float, default=0.5)
    p.add_argument("--sims", type=int, default=100)
    p.add_argument("--write-source")
    p.add_argument("--write-target")
    p.add_argument("--label-target", action="store_true",
                   help="keep the label column in --write-target")
    _add_estimation_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("resample", help="long-tail or ratio resampling of a labeled file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, dest="data_output")
    p.add_argument("--imbalance-factor", type=float)
    p.add_argument("--ratio", help="binary NEG:POS ratio, e.g. 1:4")
    p.add_argument("--dist", help="comma-separated target class distribution")
    p.add_argument("--total", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv", "jsonl"], default=None)
    p.add_argument("--report", default=None, dest="output", help="write the report here")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_resample)
    return parser


def run_command(argv=None, stdout=None, stderr=None) -> int:
    """Run one command; returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    report_path = args.output
    start = time.perf_counter()
    try:
        result = args.func(args)
        timing = {"seconds": time.perf_counter() - start} if args.timing else None
        text = cio.ReportDocument(argv, result, timing=timing).to_json()
    except CalshiftError as exc:
        err = {"schema_version": cio.SCHEMA_VERSION, "error": exc.to_dict()}
        stderr.write(json.dumps(err) + "\n")
        return exc.exit_code
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
