"""Command-line interface: ``genrank {analyze,plan,simulate,demo-significance,enumerate}``.

Exit codes: 0 success, 2 input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import pandas as pd

from .exceptions import InputError, NumericError
from .kernels import KernelSpec, median_gamma
from .powerlaw import FIXED, FREE
from .utils.validation import check_rankings, check_vectors

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

DISTRIBUTIONS = ("uniform", "uniform-ties", "point-mass", "two-point")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _shared_parser(mode_default="subsample"):
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("kernel")
    g.add_argument("--kernel", choices=["borda", "jaccard", "mallows", "rbf"], default="jaccard")
    g.add_argument("--nu", type=float, default=None, help="sensitivity for borda/mallows (default: recommended)")
    g.add_argument("--gamma", type=float, default=None, help="rbf bandwidth (default: median heuristic)")
    g.add_argument("--topk", type=int, default=None, help="jaccard top-k tiers (default: 1)")
    g.add_argument("--target-alternative", default=None, help="borda target, name or index (default: 0)")
    g = p.add_argument_group("requirement and resampling")
    g.add_argument("--alpha", type=float, default=0.95, help="desired generalizability alpha*")
    g.add_argument("--delta", type=float, default=0.05, help="similarity threshold delta*")
    g.add_argument("--nrep", type=int, default=100, help="MMD draws per subsample size")
    g.add_argument("--seed", type=int, default=None, help="random seed (default: $GENRANK_SEED or 0)")
    g.add_argument("--mode", choices=["subsample", "bootstrap"], default=mode_default)
    g.add_argument("--fit", choices=[FREE, FIXED], default=FREE, help="power-law slope: free or fixed at -2")
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    g = p.add_argument_group("output")
    g.add_argument("--output", default=None, help="output file (default: stdout)")
    g.add_argument("--format", choices=["json", "csv"], default="json")
    return p


def _dist_args(p, n_a_default=4):
    p.add_argument("--distribution", choices=DISTRIBUTIONS, default="uniform",
                   help="synthetic distribution; two-point is the 5-alternative 0.55/0.45 example")
    p.add_argument("--n-alternatives", type=int, default=n_a_default)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="genrank", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[_shared_parser()], formatter_class=fmt,
                       help="estimate n* for every configuration of a long-format study table")
    p.add_argument("--input", help="long-format CSV")
    p.add_argument("--schema", help="JSON study schema")
    p.add_argument("--example", action="store_true", help="use the bundled toy study")
    p.add_argument("--alpha-grid", type=_float_list, default=None, help="comma-separated alpha* sweep")
    p.add_argument("--delta-grid", type=_float_list, default=None, help="comma-separated delta* sweep")
    p.add_argument("--coverage-row", type=float, default=None,
                   help="override the schema's minimum fraction of alternatives per condition (schema default 0.8)")
    p.add_argument("--coverage-col", type=float, default=None,
                   help="override the schema's minimum fraction of conditions per alternative (schema default 0.8)")

    p = sub.add_parser("plan", parents=[_shared_parser()], formatter_class=fmt,
                       help="grow a study batch by batch until it is generalizable")
    _dist_args(p)
    p.add_argument("--pool", default=None, help="CSV pool of results, one per row (overrides --distribution)")
    p.add_argument("--pool-kind", choices=["rankings", "scores"], default="rankings",
                   help="pool rows hold tier indices or scores (higher is better)")
    p.add_argument("--shuffle", action="store_true", help="draw the pool in a seeded random order")
    p.add_argument("--N0", type=int, default=10, help="batch size")
    p.add_argument("--max-N", type=int, default=10_000)
    p.add_argument("--max-iter", type=int, default=20)

    p = sub.add_parser("simulate", parents=[_shared_parser("bootstrap")], formatter_class=fmt,
                       help="ratio of estimated to exact n* on a synthetic distribution")
    _dist_args(p)
    p.add_argument("--N-values", type=_int_list, default=[10, 20, 40, 80])
    p.add_argument("--reps", type=int, default=100)

    p = sub.add_parser("demo-significance", parents=[_shared_parser()], formatter_class=fmt,
                       help="significance tests versus generalizability on the two-point example")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--n", type=int, default=20, help="rankings per sample")

    p = sub.add_parser("enumerate", formatter_class=fmt, help="list all rankings of n alternatives")
    p.add_argument("--n-alternatives", type=int, default=3)
    p.add_argument("--with-ties", action="store_true")
    p.add_argument("--count-only", action="store_true")
    p.add_argument("--output", default=None)
    return parser


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("GENRANK_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"GENRANK_SEED must be an integer, got {env!r}") from None


def _check_kernel_flags(args):
    if args.target_alternative is not None and args.kernel != "borda":
        raise InputError("--target-alternative only applies to --kernel borda")
    if args.topk is not None and args.kernel != "jaccard":
        raise InputError("--topk only applies to --kernel jaccard")
    if args.nu is not None and args.kernel not in ("borda", "mallows"):
        raise InputError("--nu only applies to --kernel borda or mallows")
    if args.gamma is not None and args.kernel != "rbf":
        raise InputError("--gamma only applies to --kernel rbf")


def _kernel_config(args):
    from .studyio import KernelConfig

    return KernelConfig(args.kernel, args.nu, args.gamma, args.topk, args.target_alternative)


def _spec_for(args, n_a, results=None) -> KernelSpec:
    if args.kernel == "borda":
        target = args.target_alternative if args.target_alternative is not None else 0
        try:
            target = int(target)
        except ValueError:
            raise InputError("--target-alternative must be an index for synthetic sources") from None
        return KernelSpec.borda(n_a, target, args.nu)
    if args.kernel == "jaccard":
        return KernelSpec.jaccard(n_a, args.topk or 1)
    if args.kernel == "mallows":
        return KernelSpec.mallows(n_a, args.nu)
    gamma = args.gamma if args.gamma is not None else median_gamma(results)
    return KernelSpec.rbf(n_a, gamma)


def _distribution(args):
    from .synthetic import point_mass, two_point_distribution, uniform_distribution

    if args.distribution == "uniform":
        return uniform_distribution(args.n_alternatives, with_ties=False)
    if args.distribution == "uniform-ties":
        return uniform_distribution(args.n_alternatives, with_ties=True)
    if args.distribution == "point-mass":
        return point_mass(tuple(range(args.n_alternatives)))
    return two_point_distribution()


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from exc


def _table_text(rows, fmt):
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    return pd.DataFrame(rows).to_csv(index=False, lineterminator="\n", float_format=None)


def cmd_analyze(args) -> int:
    from .data import toy_study_paths
    from .studyio import StudySchema, analyze_study, build_configurations, emit_report, load_long_table

    _check_kernel_flags(args)
    if args.example:
        csv_path, schema_path = toy_study_paths()
    else:
        if not args.input or not args.schema:
            raise InputError("analyze needs --input and --schema (or --example)")
        csv_path, schema_path = args.input, args.schema
    schema = StudySchema.from_file(schema_path)
    overrides = {}
    if args.coverage_row is not None:
        overrides["coverage_row"] = args.coverage_row
    if args.coverage_col is not None:
        overrides["coverage_col"] = args.coverage_col
    if overrides:
        schema = StudySchema.from_dict({**schema.to_dict(), **overrides})
    table = load_long_table(csv_path, schema)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        configs = build_configurations(table, schema)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if not len(configs):
        raise InputError("no configuration has enough conditions to analyze")
    reports = analyze_study(
        configs, _kernel_config(args), args.alpha, args.delta, args.nrep, _seed(args), args.mode, args.fit,
        args.threads, args.alpha_grid, args.delta_grid, schema.higher_is_better,
    )
    summary = sys.stdout if args.output else sys.stderr
    print(f"{'configuration':<40} {'N':>4} {'alpha':>6} {'delta':>6} {'n_hat':>6}  generalizable", file=summary)
    for r in reports:
        label = ",".join(f"{k}={v}" for k, v in r.config_key.items()) or "all"
        n_hat = "-" if r.n_hat is None else r.n_hat
        verdict = f"error: {r.error}" if r.error else ("yes" if r.generalizable else "no")
        print(f"{label:<40} {r.N:>4} {r.alpha_star:>6.3g} {r.delta_star:>6.3g} {n_hat:>6}  {verdict}", file=summary)
    _write(emit_report(reports, args.format), args.output)
    if all(r.error for r in reports):
        raise NumericError("every configuration failed")
    return EXIT_OK


def _load_pool(args):
    try:
        df = pd.read_csv(args.pool)
    except FileNotFoundError:
        raise InputError(f"pool file not found: {args.pool}") from None
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InputError(f"cannot parse pool {args.pool}: {exc}") from exc
    values = df.to_numpy(dtype=float)
    if args.kernel == "rbf":
        return check_vectors(values, name="pool")
    if args.pool_kind == "scores":
        from .estimators import RankingTransformer

        return RankingTransformer().fit_transform(values)
    return check_rankings(values, name="pool")


def cmd_plan(args) -> int:
    from .workflow import DistributionSource, GenRequirement, PoolSource, run_generalizable_study

    _check_kernel_flags(args)
    seed = _seed(args)
    if args.pool:
        pool = _load_pool(args)
        source = PoolSource(pool, shuffle=args.shuffle, seed=seed)
        spec = _spec_for(args, pool.shape[1], pool)
    else:
        dist = _distribution(args)
        if args.kernel == "rbf":
            raise InputError("synthetic sources produce rankings; use --pool with --kernel rbf")
        source = DistributionSource(dist, seed)
        spec = _spec_for(args, dist.n_a)
    req = GenRequirement.for_kernel(spec, args.alpha, args.delta)
    report = run_generalizable_study(
        source, spec, req, args.N0, args.max_N, args.max_iter, args.nrep, seed, args.mode, args.fit, args.threads
    )
    out = sys.stdout if args.output else sys.stderr
    print(f"kernel {spec.describe()}, alpha*={req.alpha_star}, delta*={req.delta_star}, eps*={req.eps_star:.6g}", file=out)
    for it in report.iterations:
        n_hat = "-" if it.n_hat is None else it.n_hat
        extra = f"  ({it.error})" if it.error else ""
        print(f"N={it.N:<6} n_hat={n_hat}{extra}", file=out)
    if report.generalizable:
        verdict = f"generalizable with N={report.N} (n_hat={report.n_hat})"
    elif report.stopped_reason == "source-exhausted":
        verdict = f"not generalizable with available pool (N={report.N}, n_hat={report.n_hat})"
    else:
        verdict = f"not generalizable within caps (N={report.N}, n_hat={report.n_hat})"
    print(f"{report.stopped_reason}: {verdict}", file=out)
    rows = [
        {"iteration": i, "N": it.N, "n_hat": it.n_hat, "error": it.error,
         "beta0": None if it.fit is None else it.fit.beta0, "beta1": None if it.fit is None else it.fit.beta1}
        for i, it in enumerate(report.iterations)
    ]
    if args.format == "json":
        text = json.dumps(
            {"kernel": spec.describe(), "alpha_star": req.alpha_star, "delta_star": req.delta_star,
             "eps_star": req.eps_star, "seed": seed, "N0": report.N0, "stopped_reason": report.stopped_reason,
             "generalizable": report.generalizable, "n_hat": report.n_hat, "iterations": rows},
            indent=2,
        ) + "\n"
    else:
        text = _table_text(rows, "csv")
    _write(text, args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .synthetic import estimator_accuracy_experiment, summarize_ratios

    _check_kernel_flags(args)
    if args.kernel == "rbf":
        raise InputError("simulate works on ranking kernels only")
    dist = _distribution(args)
    spec = _spec_for(args, dist.n_a)
    rows = estimator_accuracy_experiment(
        dist, spec, args.alpha, args.delta, args.N_values, args.reps, _seed(args), args.nrep, args.mode, args.fit
    )
    out = sys.stdout if args.output else sys.stderr
    print(f"kernel {spec.describe()}, exact n* = {rows[0]['n_star'] if rows else '-'}", file=out)
    for N, s in summarize_ratios(rows).items():
        print(f"N={N:<5} median ratio {s['median_ratio']:.3f}  within [0.5, 2]: {s['fraction_within']:.2f}"
              f"  failed fits: {s['failed']}", file=out)
    for r in rows:
        r.setdefault("error", None)
    _write(_table_text(rows, args.format), args.output)
    return EXIT_OK


def cmd_demo_significance(args) -> int:
    from .sigtest import DemoCell, significance_vs_generalizability_demo

    summary = significance_vs_generalizability_demo(args.reps, args.n, _seed(args), delta_star=args.delta,
                                                    n_rep=args.nrep)
    out = sys.stdout if args.output else sys.stderr
    print(f"Friedman-significant: {summary.friedman_fraction:.3f}  "
          f"Conover-Iman-significant: {summary.ci_fraction:.3f}", file=out)
    print(f"{'CI-significant':<15} {'best':<8} {'count':>6}  generalizability", file=out)
    for c in summary.cells:
        sig = "-" if c.ci_significant is None else str(c.ci_significant)
        print(f"{sig:<15} {c.best_alternative:<8} {c.count:>6}  {c.mean_generalizability:.2f} "
              f"({c.std_generalizability:.2f})", file=out)
    if args.format == "json":
        text = json.dumps(summary.to_json(), indent=2) + "\n"
    else:
        text = pd.DataFrame(summary.rows(), columns=list(DemoCell.__dataclass_fields__)).to_csv(
            index=False, lineterminator="\n"
        )
    _write(text, args.output)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    from .synthetic import enumerate_rankings

    rankings = enumerate_rankings(args.n_alternatives, args.with_ties)
    if args.count_only:
        text = f"{len(rankings)}\n"
    else:
        text = "".join(" ".join(map(str, r)) + "\n" for r in rankings)
    _write(text, args.output)
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "plan": cmd_plan,
    "simulate": cmd_simulate,
    "demo-significance": cmd_demo_significance,
    "enumerate": cmd_enumerate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
