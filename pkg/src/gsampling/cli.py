"""Command-line entry point: ``gsample {generate,sample,experiment,bounds,project}``.

Exit status is 0 on success, 1 for configuration or usage errors and 2 for
failures while running.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from .analysis import check_expectation_bound, check_pac_bound, curvature_bound, exact_curvature
from .analysis import EXACT_CURVATURE_MAX_N
from .experiments import (
    ConfigError,
    ExperimentConfig,
    build_basis,
    load_config,
    run_experiment,
    summarize,
    trial_model,
)
from .relaxation import solve_relaxation
from .samplers import METHODS, run_method
from .signal import derive_seed

log = logging.getLogger("gsampling")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _add_common(p):
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=_u64, help="master seed (overrides config)")
    p.add_argument("--output", help="output path (default: stdout where applicable)")
    p.add_argument("--workers", type=int, help="parallel trial workers")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_instance(p):
    g = p.add_argument_group("instance (ignored when --config is given)")
    g.add_argument("--n", type=int, default=100, help="Erdos-Renyi node count")
    g.add_argument("--p", type=float, default=0.2, help="Erdos-Renyi edge probability")
    g.add_argument("--graph-file", help="Matrix Market graph instead of Erdos-Renyi")
    g.add_argument("--source", choices=("adjacency", "laplacian"), default="adjacency")
    g.add_argument("--k-signal", type=int, default=30, help="signal bandwidth")
    g.add_argument("--sigma2", type=float, default=1e-2, help="noise variance")
    g.add_argument("--trial", type=int, default=0, help="which covariance draw to use")


def _instance_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        graph = {"file": args.graph_file} if args.graph_file else {"er": {"n": args.n, "p": args.p}}
        cfg = ExperimentConfig.from_dict({
            "graph": graph, "basis_source": args.source, "k_signal": args.k_signal,
            "sigma2": args.sigma2, "budgets": [1], "methods": ["greedy"],
        })
    if args.seed is not None:
        cfg.master_seed = args.seed
    return cfg


def _model(args):
    cfg = _instance_config(args)
    basis = build_basis(cfg)
    return cfg, trial_model(basis, cfg.sigma2, cfg.master_seed, args.trial)


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_generate(args):
    cfg = _instance_config(args)
    basis = build_basis(cfg)
    if args.format == "json":
        text = json.dumps({"n": basis.n, "k": basis.k, "support": list(basis.support),
                           "u": basis.u.tolist()}) + "\n"
        _emit(text, args.output)
    elif args.output and args.output.endswith(".npz"):
        np.savez(args.output, u=basis.u, support=np.array(basis.support))
    else:
        lines = [",".join(repr(float(v)) for v in row) for row in basis.u]
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_sample(args):
    cfg, model = _model(args)
    params = {}
    if args.method == "randomized_greedy":
        params["epsilon"] = args.epsilon
    seed = derive_seed(cfg.master_seed, args.trial, 0, 0)
    res = run_method(args.method, model, args.budget, seed=seed, **params)
    out = {"method": res.method, "budget": args.budget, "s": list(res.s), "mse": res.mse,
           "f_value": res.f_value, "gain_evaluations": res.gain_evaluations,
           "elapsed_seconds": res.elapsed, "seed": res.seed}
    if args.format == "json":
        _emit(json.dumps(out) + "\n", args.output)
    else:
        _emit(f"method={res.method} mse={res.mse!r}\nselected={' '.join(map(str, res.s))}\n",
              args.output)
    return EXIT_OK


def cmd_experiment(args):
    if not args.config:
        raise ConfigError("config", "--config is required for experiment")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.output:
        cfg.output = args.output
    if args.workers:
        cfg.workers = args.workers
    if args.no_timing:
        cfg.timing = False
    if not cfg.output:
        raise ConfigError("output", "an output path is required (config or --output)")
    records = run_experiment(cfg, fmt=args.format)
    if args.summary:
        rows = summarize(records)
        w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    if len(records) < cfg.trials * len(cfg.methods) * len(cfg.budgets):
        log.warning("some trials failed; see log")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_bounds(args):
    cfg, model = _model(args)
    report = {"curvature_bound": curvature_bound(model)}
    if model.n <= EXACT_CURVATURE_MAX_N:
        report["exact_curvature"] = exact_curvature(model)
    exact = report.get("exact_curvature")
    report["expectation"] = check_expectation_bound(
        model, args.budget, args.epsilon, args.trials, cfg.master_seed, exact=exact).to_dict()
    report["pac"] = check_pac_bound(
        model, args.budget, args.epsilon, args.trials, cfg.master_seed, exact=exact).to_dict()
    _emit(json.dumps(report, indent=1) + "\n", args.output)
    ok = report["expectation"]["satisfied"] and report["pac"]["satisfied"]
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_project(args):
    _, model = _model(args)
    sol = solve_relaxation(model, args.budget, max_iters=args.max_iters, tol=args.tol)
    if args.format == "json":
        text = json.dumps({"z": sol.z.tolist(), "objective": sol.objective,
                           "iterations": sol.iterations, "converged": sol.converged}) + "\n"
    else:
        text = "node,z\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(sol.z.tolist()))
    _emit(text, args.output)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="gsample", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write the bandlimited basis U of a graph")
    _add_common(p)
    _add_instance(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="run one sampler on one instance")
    _add_common(p)
    _add_instance(p)
    p.add_argument("--method", choices=METHODS, default="randomized_greedy")
    p.add_argument("--budget", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("experiment", help="run a full Monte Carlo experiment")
    _add_common(p)
    p.add_argument("--no-timing", action="store_true",
                   help="write elapsed_seconds as 0 so reruns are byte-identical")
    p.add_argument("--summary", action="store_true", help="print a summary table")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bounds", help="curvature and approximation-bound report")
    _add_common(p)
    _add_instance(p)
    p.add_argument("--budget", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=500)
    p.set_defaults(func=cmd_bounds, n=10, k_signal=3)

    p = sub.add_parser("project", help="solve the convex relaxation and print z")
    _add_common(p)
    _add_instance(p)
    p.add_argument("--budget", type=int, default=10)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_project)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
