"""Command-line front end: ``causalest estimate | diagnose | bootstrap | simulate``.

Reports go to stdout (or ``--output``) as JSON when piped and as a plain
table on a terminal; ``--format`` overrides.  Errors exit with 2 (config),
3 (data), 4 (positivity) or 5 (convergence / inference).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from functools import partial

from . import __version__
from .aipw import aipw_ate
from .dataset import ColumnSpec, load_csv
from .diagnostics import balance_table, overlap_densities, write_density_csv
from .errors import CausalEstError, ConfigError
from .gformula import (marginal_odds_ratio, marginal_risk_ratio, np_gformula_ate,
                       np_gformula_att, parametric_gformula_ate)
from .inference import bootstrap
from .iptw import fit_propensity, ht_ate, iptw_ra_ate, make_weights, msm_fit, truncate_weights
from .simulate import default_estimators, monte_carlo
from .tmle import LearnerMenu, tmle_ate, tmle_rr_or

METHODS = ("np-g", "g-comp", "iptw", "msm", "iptw-ra", "aipw", "tmle")
ESTIMANDS = ("ate", "att", "rr", "or")
RATIO_METHODS = ("g-comp", "iptw-ra", "aipw", "tmle")
FORMATS = ("json", "csv", "table")


# configuration --------------------------------------------------------------

def _split(text):
    return tuple(s.strip() for s in text.split(",") if s.strip()) if text else ()


def _truncation(text):
    if text is None:
        return None
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LOWER,UPPER percentiles, e.g. 5,95") from None
    return lo, hi


def check_config(args) -> None:
    """Reject option combinations the estimators do not support."""
    estimand = getattr(args, "estimand", "ate")
    method = getattr(args, "method", None)
    if estimand == "att" and method != "np-g":
        raise ConfigError("--estimand att is only available with --method np-g")
    if estimand in ("rr", "or") and method not in RATIO_METHODS:
        raise ConfigError(f"--estimand {estimand} needs one of {', '.join(RATIO_METHODS)}")


def _load(args):
    spec = ColumnSpec(args.outcome, args.treatment, _split(args.confounders))
    return load_csv(args.input, spec, missing_policy=args.missing,
                    one_hot_columns=_split(args.one_hot))


def _weights(args, table):
    ws = make_weights(fit_propensity(table, args.g_terms), table.a, args.weights)
    return truncate_weights(ws, *args.truncate) if args.truncate else ws


def make_estimator(args):
    """Callable ``table -> EffectEstimate`` for the selected method and estimand."""
    m, estimand = args.method, args.estimand
    family = args.outcome_family

    def ratio(est):
        if estimand == "rr":
            return marginal_risk_ratio(est)
        if estimand == "or":
            return marginal_odds_ratio(est)
        return est

    if m == "np-g":
        return np_gformula_att if estimand == "att" else np_gformula_ate
    if m == "g-comp":
        return lambda t: ratio(parametric_gformula_ate(t, family or "linear", args.terms))
    if m == "iptw":
        return lambda t: ht_ate(t, _weights(args, t), normalized=not args.horvitz_thompson)
    if m == "msm":
        return lambda t: msm_fit(t, _weights(args, t))
    if m == "iptw-ra":
        return lambda t: ratio(iptw_ra_ate(t, _weights(args, t), family or "linear", args.terms))
    if m == "aipw":
        return lambda t: ratio(aipw_ate(t, family or "logistic", terms=args.terms,
                                        g_terms=args.g_terms))
    menu = LearnerMenu(v_folds=args.v_folds, seed=args.seed) if args.cv else None

    def tmle(t):
        est = tmle_ate(t, menu, q_terms=args.terms, g_terms=args.g_terms)
        if estimand in ("rr", "or"):
            rr, odds = tmle_rr_or(est.components)
            return rr if estimand == "rr" else odds
        return est
    return tmle


# output ---------------------------------------------------------------------

def _provenance(args, n, **extra):
    out = {"command": args.command, "version": __version__, "n": n,
           "seed": getattr(args, "seed", None)}
    if hasattr(args, "method"):
        out["method"] = args.method
        out["estimand"] = args.estimand
    out.update(extra)
    return out


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, list) and obj and isinstance(obj[0], dict):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix.rstrip("."), obj


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2)
    pairs = list(_flatten(report))
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        writer.writerows(pairs)
        return buf.getvalue().rstrip("\n")
    width = max(len(k) for k, _ in pairs)
    lines = []
    for k, v in pairs:
        if isinstance(v, float):
            v = f"{v:.6g}"
        lines.append(f"{k:<{width}}  {v}")
    return "\n".join(lines)


def _emit(args, report):
    fmt = args.format or ("table" if sys.stdout.isatty() and not args.output else "json")
    text = render(report, fmt) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# subcommands ----------------------------------------------------------------

def cmd_estimate(args):
    check_config(args)
    table = _load(args)
    est = make_estimator(args)(table)
    return {**_provenance(args, table.n, dropped_rows=table.dropped_rows), "result": est.to_dict()}


def cmd_bootstrap(args):
    check_config(args)
    table = _load(args)
    res = bootstrap(table, make_estimator(args), B=args.B, seed=args.seed, level=args.level,
                    workers=args.workers)
    return {**_provenance(args, table.n, B=args.B), "estimate": res.estimate.to_dict(),
            "bootstrap": res.to_dict()}


def cmd_diagnose(args):
    table = _load(args)
    ps = fit_propensity(table, args.g_terms)
    ws = make_weights(ps, table.a, args.weights)
    if args.truncate:
        ws = truncate_weights(ws, *args.truncate)
    report = balance_table(table, ws, args.standardization)
    out = {**_provenance(args, table.n, weights=args.weights), "balance": report.to_dict(),
           "propensity": ps.summary(table.a)}
    if args.density_csv:
        write_density_csv(overlap_densities(ps, table.a, args.grid), args.density_csv)
        out["density_csv"] = args.density_csv
    return out


def cmd_simulate(args):
    estimators = default_estimators(v_folds=args.v_folds)
    report = monte_carlo(estimators, n=args.n, R=args.reps, seed=args.seed,
                         reference_n=args.reference_n, workers=args.workers)
    if args.csv:
        report.to_csv(args.csv)
    return {**_provenance(args, args.n, R=args.reps), "report": report.to_dict(),
            "ranking": report.ranking()}


# parser ---------------------------------------------------------------------

def _add_data(p):
    p.add_argument("input", help="analytic CSV file")
    p.add_argument("--outcome", required=True, help="0/1 outcome column")
    p.add_argument("--treatment", required=True, help="0/1 treatment column")
    p.add_argument("--confounders", default="", help="comma-separated confounder columns")
    p.add_argument("--one-hot", default="", help="categorical confounders to expand into indicators")
    p.add_argument("--missing", choices=("fail", "drop_rows"), default="fail")
    p.add_argument("--g-terms", choices=("main", "interactions", "saturated"), default="main",
                   help="treatment-model design")


def _add_weights(p):
    p.add_argument("--weights", choices=("unstabilized", "stabilized"), default="unstabilized")
    p.add_argument("--truncate", type=_truncation, default=None, metavar="LO,HI",
                   help="clamp weights to these percentiles")


def _add_method(p):
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--estimand", choices=ESTIMANDS, default="ate")
    p.add_argument("--outcome-family", choices=("linear", "logistic"), default=None,
                   help="outcome model family (method-specific default)")
    p.add_argument("--terms", choices=("main", "interactions", "saturated"), default="main",
                   help="outcome-model design")
    p.add_argument("--horvitz-thompson", action="store_true",
                   help="iptw: divide by n instead of the arm weight totals")
    p.add_argument("--cv", action="store_true", help="tmle: choose models by cross-validation")
    p.add_argument("--v-folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=2023)
    _add_weights(p)


def _add_output(p):
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--output", default=None, help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalest", description="Average treatment effect estimators for a binary treatment.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="point estimate (and analytic CI where available)")
    _add_data(p)
    _add_method(p)
    _add_output(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bootstrap", help="nonparametric bootstrap intervals")
    _add_data(p)
    _add_method(p)
    p.add_argument("--B", type=int, default=1000)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--workers", type=int, default=None, help="defaults to $CE_THREADS or 1")
    _add_output(p)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("diagnose", help="covariate balance and propensity overlap")
    _add_data(p)
    _add_weights(p)
    p.add_argument("--standardization", choices=("arm_average", "pooled"), default="arm_average")
    p.add_argument("--density-csv", default=None, help="write propensity densities (x,density,arm)")
    p.add_argument("--grid", type=int, default=512, help="density grid size")
    _add_output(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("simulate", help="Monte Carlo relative-bias comparison")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=2023)
    p.add_argument("--reference-n", type=int, default=1_000_000)
    p.add_argument("--v-folds", type=int, default=5, help="TMLE cross-validation folds")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--csv", default=None, help="also write the per-estimator table as CSV")
    _add_output(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except CausalEstError as exc:
        print(f"causalest: error: {exc}", file=sys.stderr)
        return exc.exit_code
    _emit(args, report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
