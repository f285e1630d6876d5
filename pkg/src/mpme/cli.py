"""Command-line interface: estimate, synth, bootstrap, and verify.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical or
optimizer failure, 4 verification failure.  Results go to the output
path (or standard output); diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .core import (
    DataError,
    Method,
    NumericalError,
    SufficientStats,
    sufficient_stats,
)
from .dataio import DataFormat, dump_json, load_dataset
from .estimators import sample_estimate
from .experiments import (
    SyntheticConfig,
    bootstrap_benchmark_detailed,
    prune_outliers,
    run_benchmark_detailed,
)
from .prior_nix import VarianceMode, learn_nix, nix_map
from .prior_uni import learn_uni, uni_map
from .verify import SUITES, run_suite

__all__ = ["cli_main", "run"]

REPORT_SCHEMA = "mpme/1"

# Generator ranges for the two synthetic examples: means equally spaced
# over [9.5, 10.5]; standard deviations over [0.95, 1.05] (example 1,
# near-equal variances) or [1.9, 2.1] (example 2, larger variances).
_EXAMPLES = {
    1: ((9.5, 10.5), (0.95, 1.05)),
    2: ((9.5, 10.5), (1.9, 2.1)),
}

_METHOD_NAMES = {
    "sample": Method.SAMPLE_EST,
    "nix": Method.MPME_NIX,
    "nix-unbiased": Method.MPME_NIX_UNBIASED,
    "uni": Method.MPME_UNI,
}


def _parse_methods(text: str) -> tuple[Method, ...]:
    methods = []
    for name in text.split(","):
        name = name.strip()
        if name not in _METHOD_NAMES:
            known = ", ".join(sorted(_METHOD_NAMES))
            raise argparse.ArgumentTypeError(f"unknown method {name!r}; known: {known}")
        methods.append(_METHOD_NAMES[name])
    return tuple(methods)


def _parse_format(name: str) -> DataFormat:
    return DataFormat(name)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _resolve_threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("MPME_THREADS")
    if env is None:
        return None
    try:
        value = int(env)
        if value < 1:
            raise ValueError
    except ValueError:
        raise DataError(f"MPME_THREADS = {env!r}, need a positive integer") from None
    return value


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _estimate_rows(stats_list, estimates) -> list[dict]:
    rows = []
    for stats, est in zip(stats_list, estimates):
        rows.append(
            {
                "population": stats.id,
                "n": stats.stats.n,
                "mean": stats.stats.mean,
                "var_unbiased": stats.stats.var_unbiased,
                "mu": est.mu,
                "sigma_sq": est.sigma_sq,
            }
        )
    return rows


class _NamedStats:
    """Pairs a population id with its sufficient statistics."""

    __slots__ = ("id", "stats")

    def __init__(self, id: str, stats: SufficientStats):
        self.id = id
        self.stats = stats


def _cmd_estimate(args) -> int:
    dataset = load_dataset(args.input, args.format)
    named = [_NamedStats(p.id, sufficient_stats(p)) for p in dataset.populations]
    stats_list = [ns.stats for ns in named]

    removed_ids: list[str] = []
    learn_stats = stats_list
    if args.prune_outliers is not None:
        kept, removed = prune_outliers(stats_list, args.prune_outliers)
        learn_stats = kept
        removed_set = {id(s) for s in removed}
        removed_ids = [ns.id for ns in named if id(ns.stats) in removed_set]
        if removed_ids:
            print(f"pruned populations: {', '.join(removed_ids)}", file=sys.stderr)

    hyper_doc = None
    if args.prior == "sample":
        method = Method.SAMPLE_EST
        estimates = [sample_estimate(s) for s in stats_list]
    elif args.prior == "nix":
        mode = VarianceMode.UNBIASED if args.unbiased_variance else VarianceMode.BIASED
        method = Method.MPME_NIX_UNBIASED if args.unbiased_variance else Method.MPME_NIX
        hyper = learn_nix(learn_stats)
        hyper_doc = {
            "mu0": hyper.mu0,
            "kappa0": hyper.kappa0,
            "nu0": hyper.nu0,
            "sigma0_sq": hyper.sigma0_sq,
        }
        estimates = [nix_map(s, hyper, variance_mode=mode) for s in stats_list]
    else:  # uni
        method = Method.MPME_UNI
        hyper = learn_uni(learn_stats)
        hyper_doc = {"a": hyper.a, "b": hyper.b, "c": hyper.c, "d": hyper.d}
        estimates = [
            uni_map(s, hyper, use_unbiased_variance=args.unbiased_variance)
            for s in stats_list
        ]

    report = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "command": "estimate",
        "config": {
            "input": str(args.input),
            "prior": args.prior,
            "unbiased_variance": bool(args.unbiased_variance),
            "prune_outliers": args.prune_outliers,
            "seed": args.seed,
        },
        "method": method.value,
        "hyperparameters": hyper_doc,
        "pruned": removed_ids,
        "estimates": _estimate_rows(named, estimates),
    }
    _emit(dump_json(report), args.output)
    return 0


def _method_report_doc(result) -> dict:
    return {
        method.value: {
            "eps_mu": report.eps_mu,
            "eps_sigma_sq": report.eps_sigma_sq,
            "per_population_mu_rmse": list(report.per_population_mu_rmse),
            "per_population_var_rmse": list(report.per_population_var_rmse),
            "trials": report.trials,
        }
        for method, report in sorted(result.reports.items(), key=lambda kv: kv[0].value)
    }


def _hyper_doc(result) -> dict:
    return {
        "nix": [
            {"mu0": h.mu0, "kappa0": h.kappa0, "nu0": h.nu0, "sigma0_sq": h.sigma0_sq}
            for h in result.nix_hypers
        ],
        "uni": [{"a": h.a, "b": h.b, "c": h.c, "d": h.d} for h in result.uni_hypers],
    }


def _cmd_synth(args) -> int:
    mu_range, sigma_range = _EXAMPLES[args.example]
    cfg = SyntheticConfig(
        populations=args.pops,
        samples_per_population=args.n,
        mu_range=mu_range,
        sigma_range=sigma_range,
        trials=args.trials,
        seed=args.seed,
    )
    result = run_benchmark_detailed(
        cfg,
        args.methods,
        prune=args.prune_outliers is not None,
        prune_k=args.prune_outliers if args.prune_outliers is not None else 5.0,
        threads=_resolve_threads(args),
    )
    report = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "command": "synth",
        "config": {
            "example": args.example,
            "populations": args.pops,
            "samples_per_population": args.n,
            "trials": args.trials,
            "seed": args.seed,
            "methods": [m.value for m in args.methods],
            "mu_range": list(mu_range),
            "sigma_range": list(sigma_range),
            "prune_outliers": args.prune_outliers,
        },
        "truth": {
            "mu": list(result.truth.mu),
            "sigma": list(result.truth.sigma),
        },
        "reports": _method_report_doc(result),
        "hyperparameters": _hyper_doc(result),
        "failed_trials": len(result.failures),
        "failures": list(result.failures),
    }
    _emit(dump_json(report), args.output)
    return 0


def _cmd_bootstrap(args) -> int:
    dataset = load_dataset(args.input, args.format)
    result = bootstrap_benchmark_detailed(
        dataset.populations,
        n_sub=args.subsample,
        trials=args.trials,
        seed=args.seed,
        methods=args.methods,
        threads=_resolve_threads(args),
    )
    report = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "command": "bootstrap",
        "config": {
            "input": str(args.input),
            "subsample": args.subsample,
            "trials": args.trials,
            "seed": args.seed,
            "methods": [m.value for m in args.methods],
        },
        "truth": {
            "population": [p.id for p in dataset.populations],
            "mu": list(result.truth.mu),
            "sigma": list(result.truth.sigma),
        },
        "reports": _method_report_doc(result),
        "hyperparameters": _hyper_doc(result),
        "failed_trials": len(result.failures),
        "failures": list(result.failures),
    }
    _emit(dump_json(report), args.output)
    return 0


def _cmd_verify(args) -> int:
    result = run_suite(args.suite, cases=args.cases, seed=args.seed)
    for line in result.lines:
        print(line)
    status = "PASS" if result.passed else "FAIL"
    print(
        f"{status} {result.name}: {result.cases} cases, worst {result.worst:.3g}, "
        f"tolerance {result.tolerance:g}"
    )
    return 0 if result.passed else 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpme",
        description="Moment estimation across many small-sample populations.",
    )
    parser.add_argument("--version", action="version", version=f"mpme {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate per-population moments from a dataset")
    est.add_argument("--input", required=True, help="dataset file (CSV or JSON)")
    est.add_argument("--format", type=_parse_format, choices=list(DataFormat), metavar="{csv,json}", default=None)
    est.add_argument("--prior", choices=("nix", "uni", "sample"), required=True)
    est.add_argument(
        "--unbiased-variance",
        action="store_true",
        help="report the unbiased posterior variance instead of the MAP mode",
    )
    est.add_argument("--prune-outliers", type=float, metavar="K", default=None)
    est.add_argument("--seed", type=int, default=0, help="recorded in the report")
    est.add_argument("--output", default=None, help="output path; default stdout")
    est.set_defaults(handler=_cmd_estimate)

    synth = sub.add_parser("synth", help="synthetic benchmark of estimator accuracy")
    synth.add_argument("--example", type=int, choices=(1, 2), default=1)
    synth.add_argument("--pops", type=_positive_int, default=20)
    synth.add_argument("--n", type=_positive_int, default=5)
    synth.add_argument("--trials", type=_positive_int, default=200)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument(
        "--methods",
        type=_parse_methods,
        default=(Method.SAMPLE_EST, Method.MPME_NIX),
        help="comma-separated: sample,nix,nix-unbiased,uni",
    )
    synth.add_argument("--prune-outliers", type=float, metavar="K", default=None)
    synth.add_argument("--threads", type=_positive_int, default=None)
    synth.add_argument("--output", default=None)
    synth.set_defaults(handler=_cmd_synth)

    boot = sub.add_parser("bootstrap", help="subsampling benchmark on a measured dataset")
    boot.add_argument("--input", required=True)
    boot.add_argument("--format", type=_parse_format, choices=list(DataFormat), metavar="{csv,json}", default=None)
    boot.add_argument("--subsample", type=_positive_int, required=True)
    boot.add_argument("--trials", type=_positive_int, default=500)
    boot.add_argument("--seed", type=int, default=0)
    boot.add_argument(
        "--methods",
        type=_parse_methods,
        default=(Method.SAMPLE_EST, Method.MPME_NIX),
    )
    boot.add_argument("--threads", type=_positive_int, default=None)
    boot.add_argument("--output", default=None)
    boot.set_defaults(handler=_cmd_bootstrap)

    ver = sub.add_parser("verify", help="run oracle cross-checks")
    ver.add_argument("--suite", choices=sorted(SUITES), required=True)
    ver.add_argument("--cases", type=_positive_int, default=None)
    ver.add_argument("--seed", type=int, default=None)
    ver.set_defaults(handler=_cmd_verify)

    return parser


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.handler(args)
    except DataError as exc:
        print(f"mpme: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"mpme: numerical failure: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(cli_main())
