"""Command line entry point: ``netlineq <subcommand> ...``.

Exit status is 0 on success, 1 on usage or config errors and 2 on any
other runtime failure.
"""

import argparse
import json
import logging
import sys

import numpy as np

from .analysis import fit_exponential_rate, fit_power_rate, rate_bounds_iid
from .exceptions import ConfigError, NetLineqError
from .graphs import is_connected, random_sample_space, save_graphs, union_graph
from .harness import ExperimentConfig, build_context, read_csv, run_experiment
from .problem import classify_solutions, make_synthetic_problem, save_problem

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _cmd_gen_problem(args):
    rng = np.random.default_rng(args.seed)
    sizes = rng.integers(args.rows_min, args.rows_max + 1, size=args.nodes)
    problem, _ = make_synthetic_problem(sizes, args.m, args.rank, args.residual, rng)
    save_problem(args.out, problem.H, problem.z)
    if args.sizes_out:
        with open(args.sizes_out, "w") as fh:
            fh.write(",".join(str(s) for s in problem.sizes) + "\n")
    info = classify_solutions(problem)
    print(f"rows={problem.H.shape[0]} cols={problem.dim} rank={info.rank} kind={info.kind}")
    print("sizes=" + ",".join(str(s) for s in problem.sizes))


def _cmd_gen_graphs(args):
    space = random_sample_space(args.nodes, args.count, args.keep_prob, rng=args.seed)
    save_graphs(args.out, space)
    n_conn = sum(is_connected(g) for g in space)
    print(f"graphs={len(space)} connected={n_conn} union_connected={is_connected(union_graph(space))}")


def _cmd_run(args):
    cfg = ExperimentConfig.from_file(args.config)
    changes = {k: v for k, v in (("csv", args.csv), ("plot_data", args.plot_data)) if v}
    if changes:
        cfg = cfg.replace(**changes)
    res = run_experiment(cfg, workers=args.workers)
    summary = {
        "runs": cfg.runs,
        "iterations": cfg.iterations,
        "e1_initial": float(res.e1[0]),
        "e1_final": float(res.e1[-1]),
        "e2_final": float(res.e2[-1]),
        "rates": res.rates,
    }
    if res.bounds is not None:
        summary["theta1"] = res.bounds.theta1
        summary["theta2"] = res.bounds.theta2
    print(json.dumps(summary, indent=2))


def _cmd_bounds(args):
    cfg = ExperimentConfig.from_file(args.config)
    ctx = build_context(cfg)
    b = rate_bounds_iid(ctx.problem, ctx.process, cfg.weight_rule, cfg.weight_h, mc_draws=args.mc_draws)
    print(f"theta1 = {b.theta1:.10g}")
    print(f"theta2 = {b.theta2:.10g}")


def _cmd_fit(args):
    cols = read_csv(args.csv)
    if args.column not in cols:
        raise ConfigError(f"column {args.column!r} not in {sorted(cols)}")
    series = cols[args.column]
    window = tuple(args.window) if args.window else None
    print(f"exponential_rate = {fit_exponential_rate(series, window)!r}")
    print(f"power_rate = {fit_power_rate(series, window)!r}")


def build_parser():
    p = _Parser(prog="netlineq", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-problem", help="write a random (H, z) with prescribed rank")
    g.add_argument("--nodes", type=int, default=100)
    g.add_argument("--m", type=int, default=50)
    g.add_argument("--rank", type=int, default=None)
    g.add_argument("--rows-min", type=int, default=1)
    g.add_argument("--rows-max", type=int, default=20)
    g.add_argument("--residual", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="problem.txt")
    g.add_argument("--sizes-out", default=None)
    g.set_defaults(func=_cmd_gen_problem)

    g = sub.add_parser("gen-graphs", help="write a random graph sample space")
    g.add_argument("--nodes", type=int, default=100)
    g.add_argument("--count", type=int, default=30)
    g.add_argument("--keep-prob", type=float, default=0.3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="graphs.txt")
    g.set_defaults(func=_cmd_gen_graphs)

    g = sub.add_parser("run", help="run a Monte Carlo experiment from a config file")
    g.add_argument("--config", required=True)
    g.add_argument("--csv", default=None)
    g.add_argument("--plot-data", default=None)
    g.add_argument("--workers", type=int, default=None)
    g.set_defaults(func=_cmd_run)

    g = sub.add_parser("bounds", help="print the i.i.d. rate bounds theta1, theta2")
    g.add_argument("--config", required=True)
    g.add_argument("--mc-draws", type=int, default=None)
    g.set_defaults(func=_cmd_bounds)

    g = sub.add_parser("fit", help="fit rates to a CSV column")
    g.add_argument("--csv", required=True)
    g.add_argument("--column", default="e1")
    g.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"), default=None)
    g.set_defaults(func=_cmd_fit)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NetLineqError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
