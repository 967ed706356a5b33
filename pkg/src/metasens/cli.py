"""Command-line interface.

    metasens fit-pce    --benchmark ishigami --n 500 --p-max 8 --out pce.json
    metasens fit-gp     --benchmark ishigami --n 100 --trend ishigami --out gp.json
    metasens sobol      --model pce.json --out indices.csv
    metasens benchmark  truss --recompute 100000 --out truss_ref.csv
    metasens experiment config.yaml --threads 4

On failure a JSON object ``{"error": category, "message": ...}`` is written
to stderr and the process exits with the category's code.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, benchmarks
from .distributions import DesignMatrix, InputModel
from .errors import ArgumentError, MetasensError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": ArgumentError.category, "message": message}), file=sys.stderr)
        sys.exit(ArgumentError.exit_code)


def _design_and_responses(args):
    """Either sample the benchmark or read --design/--responses."""
    if args.design:
        if args.input:
            model = InputModel.from_dict(json.loads(Path(args.input).read_text()))
        elif args.benchmark:
            model = benchmarks.get(args.benchmark).input_model
        else:
            raise ArgumentError("--design needs --input or --benchmark for the input model")
        design = DesignMatrix.from_csv(args.design, model)
        if args.responses:
            y = np.loadtxt(args.responses, delimiter=",", skiprows=1, ndmin=1)
        elif args.benchmark:
            y = benchmarks.get(args.benchmark).evaluator(design.points)
        else:
            raise ArgumentError("--design needs --responses or --benchmark")
        return design, np.asarray(y, dtype=float).ravel()
    if not args.benchmark or not args.n:
        raise ArgumentError("give --benchmark and --n, or --design")
    case = benchmarks.get(args.benchmark)
    design = case.input_model.sample(args.n, args.sampling, args.seed)
    return design, case.evaluator(design.points)


def _fit_pce(args):
    from .pce import adaptive_fit

    design, y = _design_and_responses(args)
    model = adaptive_fit(design, y, p_min=args.p_min, p_max=args.p_max, oversampling=args.oversampling)
    model.design_seed = args.seed
    model.save(args.out or "pce.json")
    print(f"degree {model.degree}, {len(model.coefficients)} terms, normalized LOO error {model.normalized_loo_error:.3e}")


def _fit_gp(args):
    from .gp import Kernel, fit
    from .harness import _trend

    design, y = _design_and_responses(args)
    kernel = Kernel(args.kernel, None, 1.0, args.mode, args.nu, args.gamma)
    noise = args.noise_std if args.noise_std is not None else None
    model = fit(
        design.points, y, _trend(args.trend, design.model.dim), kernel, args.estimator,
        noise_std=noise, n_starts=args.starts, seed=args.seed,
    )
    model.metadata["input_model"] = design.model.to_dict()
    model.save(args.out or "gp.json")
    theta = " ".join(f"{t:.4g}" for t in model.theta)
    print(f"theta [{theta}], sigma2 {model.sigma2:.4g}, nugget {model.nugget:g}")


def _sobol(args):
    from .sobol import gp_sobol, pick_freeze_indices

    subsets = None
    if args.subset:
        subsets = [tuple(int(i) - 1 for i in s.split("+")) for s in args.subset]
    if args.model:
        data = json.loads(Path(args.model).read_text())
        if data.get("type") == "pce":
            from .pce import PceModel

            model = PceModel.from_dict(data)
            request = "total" if args.total else (subsets or "first_order")
            report = model.sobol_indices(request)
        elif data.get("type") == "gp":
            from .gp import GpModel

            model = GpModel.from_dict(data)
            if "input_model" in model.metadata:
                input_model = InputModel.from_dict(model.metadata["input_model"])
            elif args.benchmark:
                input_model = benchmarks.get(args.benchmark).input_model
            else:
                raise ArgumentError("GP model file carries no input model; pass --benchmark")
            report = gp_sobol(model, input_model, subsets, args.N, args.m, args.seed, total=args.total)
        else:
            raise ArgumentError(f"unrecognized model file {args.model}")
    elif args.benchmark:
        case = benchmarks.get(args.benchmark)
        ev = case.fast_evaluator or case.evaluator
        report = pick_freeze_indices(ev, case.input_model, subsets, args.N, args.seed, total=args.total)
    else:
        raise ArgumentError("give --model or --benchmark")
    _emit(report, args.out)


def _emit(report, out):
    if out:
        report.to_csv(out)
        return
    import csv

    from .report import CSV_COLUMNS

    w = csv.DictWriter(sys.stdout, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(report.rows())


def _benchmark(args):
    case = benchmarks.get(args.name)
    if args.export_truss:
        if case.name != "truss":
            raise ArgumentError("--export-truss applies to the truss benchmark only")
        benchmarks.default_truss().dump(args.export_truss)
    report = benchmarks.reference_indices(case, recompute=args.recompute, seed=args.seed)
    _emit(report, args.out)


def _experiment(args):
    from .harness import ExperimentConfig, run_experiment

    config = ExperimentConfig.from_yaml(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out:
        config.out_dir = args.out
    result = run_experiment(config, threads=args.threads)
    print(f"wrote {result.out_dir / 'replications.csv'} and {result.out_dir / 'summary.csv'}")


def _add_data_args(p):
    p.add_argument("--benchmark", choices=benchmarks.names())
    p.add_argument("--n", type=int, help="design size when sampling the benchmark")
    p.add_argument("--sampling", choices=("lhs", "mc"), default="lhs")
    p.add_argument("--design", help="CSV of design points (header = variable names)")
    p.add_argument("--responses", help="CSV with one header line and one response per row")
    p.add_argument("--input", help="JSON input model for --design")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="metasens", description="PCE and GP metamodels for Sobol' sensitivity analysis")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-pce", help="fit a degree-adaptive polynomial chaos expansion")
    _add_data_args(p)
    p.add_argument("--p-min", type=int, default=1)
    p.add_argument("--p-max", type=int, default=10)
    p.add_argument("--oversampling", type=float, default=2.0)
    p.set_defaults(func=_fit_pce)

    p = sub.add_parser("fit-gp", help="fit a universal-kriging model")
    _add_data_args(p)
    p.add_argument("--trend", default="constant", help="constant, linear or ishigami")
    p.add_argument("--kernel", default="matern", choices=("matern", "squared_exponential", "gamma_exponential"))
    p.add_argument("--mode", default="tensorized", choices=("tensorized", "isotropic", "anisotropic"))
    p.add_argument("--nu", type=float, default=2.5)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--estimator", default="max_likelihood", choices=("max_likelihood", "loo_cv"))
    p.add_argument("--noise-std", type=float)
    p.add_argument("--starts", type=int, default=10)
    p.set_defaults(func=_fit_gp)

    p = sub.add_parser("sobol", help="Sobol' indices from a saved model or by pick-freeze on a benchmark")
    p.add_argument("--model", help="model JSON written by fit-pce or fit-gp")
    p.add_argument("--benchmark", choices=benchmarks.names())
    p.add_argument("--subset", action="append", help="1-based variables joined by '+', e.g. 1+3 (repeatable)")
    p.add_argument("--total", action="store_true", help="total instead of first-order indices")
    p.add_argument("--N", type=int, default=10_000, help="pick-freeze sample size")
    p.add_argument("--m", type=int, default=100, help="GP realizations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_sobol)

    p = sub.add_parser("benchmark", help="reference indices of a benchmark")
    p.add_argument("name", choices=benchmarks.names())
    p.add_argument("--recompute", type=int, help="re-estimate by pick-freeze with this many base samples")
    p.add_argument("--export-truss", help="write the truss geometry as YAML")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_benchmark)

    p = sub.add_parser("experiment", help="run a replicated study from a YAML config")
    p.add_argument("config")
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", UserWarning)
    try:
        args.func(args)
    except MetasensError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(json.dumps({"error": "io" if isinstance(exc, OSError) else "argument", "message": str(exc)}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
