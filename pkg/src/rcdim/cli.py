"""Command-line interface: ``rcdim generate | estimate | theory | experiment``.

Every failure prints a JSON object ``{"schema": 1, "error": {...}}`` on
stderr and exits with the error's own code.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from rcdim.errors import RcdimError, UsageError
from rcdim.estimator import Correction, EstimatorConfig, ScaleFunction, estimate_dimension
from rcdim.experiment import REPORT_COLUMNS, ExperimentConfig, run_experiment
from rcdim.fileio import FLOAT_FMT, SCHEMA_VERSION, dumps_csv, dumps_json, read_graph_pair, read_points, write_points
from rcdim.generators import GENERATOR_KINDS, GeneratorSpec
from rcdim.geometry import default_epsilon
from rcdim.theory import DistributionSpec, doubling_curve, scaling_curve

IO_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _generator_params(args) -> dict:
    kind = GeneratorSpec(args.kind, 1).kind
    wanted = {
        "sierpinski": ("depth",), "gaussian": ("d",), "anisotropic": ("s", "snr"),
        "sphere": ("d",), "cube": ("d",), "helix": (), "swiss_roll": (),
        "torus": ("R", "r_tube", "sigma"),
    }[kind]
    params = {}
    for name in wanted:
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    for name in ("d", "s", "snr"):
        if name in wanted and name not in params:
            raise UsageError(f"generator {kind!r} needs --{name}")
    return params


def _add_generator_flags(p):
    p.add_argument("--d", type=int, help="dimension (gaussian, cube, sphere)")
    p.add_argument("--s", type=int, help="number of signal axes (anisotropic)")
    p.add_argument("--snr", type=float, help="signal-to-noise variance ratio (anisotropic)")
    p.add_argument("--depth", type=int, help="digit count (sierpinski, default 100)")
    p.add_argument("--R", type=float, help="torus major radius (default 2)")
    p.add_argument("--r-tube", dest="r_tube", type=float, help="torus tube radius (default 1)")
    p.add_argument("--sigma", type=float, help="torus noise sd (default 0)")


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def cmd_generate(args) -> int:
    spec = GeneratorSpec(args.kind, args.n, args.seed, _generator_params(args))
    cloud = spec.generate(workers=args.workers)
    if args.out in (None, "-"):
        np.savetxt(sys.stdout, cloud.points, fmt=FLOAT_FMT, delimiter=",")
    else:
        write_points(args.out, cloud)
    return 0


def cmd_estimate(args) -> int:
    if args.input and (args.edges_eps or args.edges_2eps):
        raise UsageError("give either --input or --edges-eps/--edges-2eps, not both")
    if args.input:
        source = read_points(args.input)
        origin = {"input": args.input}
    elif args.edges_eps and args.edges_2eps:
        source = read_graph_pair(args.edges_eps, args.edges_2eps)
        origin = {"edges_eps": args.edges_eps, "edges_2eps": args.edges_2eps}
        if args.scale == "erf" and args.epsilon is None:
            raise UsageError("the erf scale function needs --epsilon")
    else:
        raise UsageError("estimate needs --input or both --edges-eps and --edges-2eps")

    epsilon = args.epsilon
    if epsilon is None and args.scale == "erf" and args.input:
        epsilon = default_epsilon(source)
    g = ScaleFunction.erf_gaussian(epsilon) if args.scale == "erf" else ScaleFunction.canonical()
    config = EstimatorConfig(m=args.m, blocks=args.blocks, epsilon=epsilon, correction=args.correction,
                             scale_function=g, seed=args.seed, round_to_integer=True, workers=args.workers)
    start = time.perf_counter()
    est = estimate_dimension(source, config)
    elapsed = time.perf_counter() - start
    report = {"schema": SCHEMA_VERSION, **origin, "config": config.to_dict(), **est.to_dict(),
              "seconds": elapsed}
    if args.format == "csv":
        row = {k: v for k, v in report.items() if not isinstance(v, (list, dict))}
        _emit(dumps_csv([row], list(row)), args.out)
    else:
        _emit(dumps_json(report), args.out)
    return 0


def cmd_theory(args) -> int:
    DistributionSpec(args.dist, 1)
    d_values = range(args.d_min, args.d_max + 1)
    curve_fn = doubling_curve if args.curve == "doubling" else scaling_curve
    points = curve_fn(args.dist, d_values, args.epsilon, samples=args.samples, seed=args.seed,
                      method=args.method, workers=args.workers)
    rows = []
    for pt in points:
        row = {"d": pt.d, "value": pt.value, "stderr": pt.stderr, "flagged": pt.flagged}
        if args.curve == "scaling":
            row["log_bracket"] = pt.extra
        rows.append(row)
    if args.format == "json":
        _emit(dumps_json({"schema": SCHEMA_VERSION, "curve": args.curve, "dist": args.dist,
                          "epsilon": args.epsilon, "samples": args.samples, "seed": args.seed,
                          "points": rows}), args.out)
    else:
        _emit(dumps_csv(rows, list(rows[0]) if rows else ["d", "value", "stderr", "flagged"]), args.out)
    return 0


def cmd_experiment(args) -> int:
    if (args.generator is None) == (args.input is None):
        raise UsageError("experiment needs exactly one of --generator and --input")
    if args.generator is not None:
        args.kind = args.generator
        config = ExperimentConfig(generator=args.generator, generator_params=_generator_params(args),
                                  n_grid=args.n, m_rules=args.m_rules, eps_rule=args.eps_rule,
                                  correction=args.correction, blocks=args.blocks, reps=args.reps,
                                  seed=args.seed, d_true=args.d_true, scale_function=args.scale,
                                  workers=args.workers)
    else:
        config = ExperimentConfig(cloud=read_points(args.input), m_rules=args.m_rules,
                                  eps_rule=args.eps_rule, correction=args.correction, blocks=args.blocks,
                                  reps=args.reps, seed=args.seed, d_true=args.d_true,
                                  scale_function=args.scale, workers=args.workers)
    rows = run_experiment(config)
    if args.format == "json":
        _emit(dumps_json({"schema": SCHEMA_VERSION, "generator": args.generator,
                          "params": config.generator_params, "eps_rule": args.eps_rule,
                          "correction": config.correction.value, "reps": args.reps, "seed": args.seed,
                          "rows": [r.to_dict(with_values=args.values) for r in rows]}), args.out)
    else:
        _emit(dumps_csv([r.to_dict() for r in rows], REPORT_COLUMNS), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rcdim", description="Intrinsic dimension from random connection graphs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write synthetic design points as CSV")
    g.add_argument("kind", help=f"one of {', '.join(GENERATOR_KINDS)}")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.add_argument("--workers", type=int, default=1)
    _add_generator_flags(g)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", help="estimate the dimension of a point CSV or an edge-list pair")
    e.add_argument("--input", help="point CSV")
    e.add_argument("--edges-eps", help="edge list of the graph at the smaller radius")
    e.add_argument("--edges-2eps", help="edge list of the graph at twice the radius")
    e.add_argument("--epsilon", type=float)
    e.add_argument("--m", type=int)
    e.add_argument("--blocks", type=int, default=10)
    e.add_argument("--correction", type=Correction.parse, default=Correction.NONE,
                   help="none, mult, erf or 2sigma")
    e.add_argument("--scale", choices=("canonical", "erf"), default="canonical")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--format", choices=("json", "csv"), default="json")
    e.add_argument("--out")
    e.set_defaults(func=cmd_estimate)

    t = sub.add_parser("theory", help="emit doubling or variance-scaling curves")
    t.add_argument("--dist", required=True)
    t.add_argument("--curve", choices=("doubling", "scaling"), default="doubling")
    t.add_argument("--epsilon", type=float, required=True)
    t.add_argument("--d-min", type=int, default=1)
    t.add_argument("--d-max", type=int, default=15)
    t.add_argument("--samples", type=int, default=200_000)
    t.add_argument("--method", default="auto", choices=("auto", "indicator", "ball", "conditional"))
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--format", choices=("json", "csv"), default="csv")
    t.add_argument("--out")
    t.set_defaults(func=cmd_theory)

    x = sub.add_parser("experiment", help="repeat estimation over a grid and aggregate")
    x.add_argument("--generator", help=f"one of {', '.join(GENERATOR_KINDS)}")
    x.add_argument("--input", help="fixed point CSV instead of a generator")
    x.add_argument("--n", type=int, nargs="+", default=[1000])
    x.add_argument("--m-rules", nargs="+", default=["log"], help="log, 2log, n^a, n or an integer")
    x.add_argument("--eps-rule", default="sd", help="sd, gauss4, noise or a number")
    x.add_argument("--correction", type=Correction.parse, default=Correction.NONE)
    x.add_argument("--scale", choices=("canonical", "erf"), default="canonical")
    x.add_argument("--blocks", type=int, default=10)
    x.add_argument("--reps", type=int, default=1)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--d-true", type=float)
    x.add_argument("--workers", type=int, default=1)
    x.add_argument("--values", action="store_true", help="include per-run values in JSON output")
    x.add_argument("--format", choices=("json", "csv"), default="csv")
    x.add_argument("--out")
    _add_generator_flags(x)
    x.set_defaults(func=cmd_experiment)
    return parser


def _fail(code: str, message: str, exit_code: int) -> int:
    sys.stderr.write(dumps_json({"schema": SCHEMA_VERSION, "error": {"code": code, "message": message}}) + "\n")
    return exit_code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except RcdimError as exc:
        return _fail(exc.code, str(exc), exc.exit_code)
    except OSError as exc:
        return _fail("io_error", str(exc), IO_EXIT)


if __name__ == "__main__":
    sys.exit(main())
