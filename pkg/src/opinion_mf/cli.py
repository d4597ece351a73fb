"""Command-line front end: ``opinion-mf <subcommand> [options]``.

Exit status is 0 on success, 1 on invalid input and 2 when an acceptance
check fails (``verify`` and ``sweep --assert``).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from ._utils import RNG_DESCRIPTION, n_threads
from .dynamics import build_influence, stable_solve
from .explab import (
    OptDemoSpec,
    SweepConfig,
    opt_demo_affine,
    rung_config,
    run_sweep,
    trend_check,
    write_csv,
)
from .meanfield import MeanFieldSystem
from .montecarlo import Exact, MonteCarlo, NormSpec, gap_stable
from .rand_graph import ErModel, Graph, RegimeRule, enumerate_weighted, sample
from .verify import grid_failures, run_lemma_grid

EXIT_OK, EXIT_INVALID, EXIT_CHECK_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _global_flags(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="master seed (default 0)")
    p.add_argument("--out", default=d(None), help="write output here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=d(None))


def _model_flags(p):
    p.add_argument("--model", choices=("und", "dir"), default="und")
    p.add_argument("--n", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--p", type=float)
    g.add_argument("--regime", help="'c,a' for p = min(1, c log(n)^a / n)")


def _opinion_flags(p):
    p.add_argument("--alpha", default="const:0.5", help="'const:x' or 'random'")
    p.add_argument("--alpha-bar", type=float, default=None)
    p.add_argument("--x0", default="random", help="'random', 'ones' or 'file:PATH'")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opinion-mf", description="Mean-field approximations of opinion dynamics on random graphs.")
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw one graph")
    _model_flags(p)
    _global_flags(p, True)

    p = sub.add_parser("enumerate", help="list every graph of a tiny model with its probability")
    _model_flags(p)
    _global_flags(p, True)

    p = sub.add_parser("stable", help="stable opinion on a given graph")
    p.add_argument("--graph", required=True, help="graph file ('n directed' header, then 0/1 rows)")
    _opinion_flags(p)
    _global_flags(p, True)

    p = sub.add_parser("meanfield", help="expected influence matrix and mean-field stable opinion")
    _model_flags(p)
    _opinion_flags(p)
    _global_flags(p, True)

    p = sub.add_parser("gap", help="distance between expected and mean-field stable opinions")
    _model_flags(p)
    _opinion_flags(p)
    p.add_argument("--norm", default="inf", help="'inf' or 'rho=R'")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--exact", action="store_true", help="enumerate every graph instead of sampling")
    _global_flags(p, True)

    p = sub.add_parser("sweep", help="gap along a ladder of n")
    p.add_argument("--config", help="JSON file whose keys are SweepConfig fields")
    p.add_argument("--model", choices=("und", "dir"))
    p.add_argument("--ladder", help="comma separated n values")
    p.add_argument("--regime")
    p.add_argument("--alpha")
    p.add_argument("--alpha-bar", type=float)
    p.add_argument("--x0")
    p.add_argument("--norm")
    p.add_argument("--quantity")
    p.add_argument("--samples", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--seeds", help="comma separated master seeds")
    p.add_argument("--exact", action="store_true")
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit 2 unless median gaps strictly decrease and halve across the ladder")
    _global_flags(p, True)

    p = sub.add_parser("verify", help="run the bound checks on the tiny-model grid")
    p.add_argument("--n0", type=int, default=10, help="threshold above which asymptotic bounds are asserted")
    _global_flags(p, True)

    p = sub.add_parser("optdemo", help="affine objective demo on an enumerable model")
    _model_flags(p)
    _opinion_flags(p)
    p.add_argument("--thetas", type=int, default=20)
    p.add_argument("--lipschitz", type=float, default=None)
    _global_flags(p, True)
    return parser


# ------------------------------------------------------------------ helpers

def _model(args) -> ErModel:
    if args.p is not None:
        p = args.p
    else:
        p = RegimeRule(*(float(v) for v in args.regime.split(",")))(args.n)
    return ErModel(args.n, p, args.model == "dir")


def _emit_records(records, fmt, out, columns=None):
    if fmt == "json":
        out.write(json.dumps(records if len(records) != 1 else records[0], indent=2, default=_jsonable) + "\n")
        return
    columns = columns or list(records[0])
    w = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r)


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serialisable: {type(v).__name__}")


def _clean(v):
    """Non-finite floats become None so the JSON stays standard."""
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


# ------------------------------------------------------------------ commands

def cmd_sample(args, out):
    g = sample(_model(args), args.seed)
    if args.format == "json":
        out.write(json.dumps({"n": g.n, "directed": g.directed, "adjacency": g.adj.astype(int).tolist()}) + "\n")
    else:
        out.write(g.to_text())
    return EXIT_OK


def cmd_enumerate(args, out):
    model = _model(args)
    records = [
        {"index": i, "probability": pr, "edges": g.edge_count(), "rows": ";".join("".join("1" if b else "0" for b in row) for row in g.adj)}
        for i, (g, pr) in enumerate(enumerate_weighted(model))
    ]
    _emit_records(records, args.format or "csv", out)
    return EXIT_OK


def _vector_records(name, x):
    return [{"node": i, name: float(v)} for i, v in enumerate(x)]


def cmd_stable(args, out):
    with open(args.graph) as fh:
        g = Graph.from_text(fh.read())
    cfg = rung_config(g.n, args.alpha, args.alpha_bar, args.x0, args.seed)
    x = stable_solve(build_influence(g, cfg), cfg)
    if (args.format or "json") == "json":
        out.write(json.dumps({"n": g.n, "directed": g.directed, "stable": x.tolist()}) + "\n")
    else:
        _emit_records(_vector_records("stable", x), "csv", out)
    return EXIT_OK


def cmd_meanfield(args, out):
    model = _model(args)
    cfg = rung_config(model.n, args.alpha, args.alpha_bar, args.x0, args.seed)
    system = MeanFieldSystem.from_model(model, cfg)
    x = system.stable()
    if (args.format or "json") == "json":
        rec = {"model": model.kind, "n": model.n, "p": model.p,
               "expected_influence": system.expected_influence.tolist(), "meanfield_stable": x.tolist()}
        out.write(json.dumps(rec) + "\n")
    else:
        _emit_records(_vector_records("meanfield_stable", x), "csv", out)
    return EXIT_OK


def cmd_gap(args, out):
    model = _model(args)
    cfg = rung_config(model.n, args.alpha, args.alpha_bar, args.x0, args.seed)
    norm = NormSpec.parse(args.norm)
    est = Exact() if args.exact else MonteCarlo(args.samples, args.delta, args.seed)
    import time

    t0 = time.perf_counter()
    g, ci = gap_stable(model, cfg, norm, est)
    rec = {
        "model": model.kind,
        "n": model.n,
        "p": model.p,
        "alpha": args.alpha,
        "alpha_bar": cfg.alpha_bar,
        "x0": args.x0,
        "norm": norm.label(),
        "rho": None if norm.is_inf else norm.rho,
        "samples": 0 if args.exact else args.samples,
        "delta": args.delta,
        "exact": bool(args.exact),
        "master_seed": args.seed,
        "rng": RNG_DESCRIPTION,
        "threads": n_threads(),
        "gap": g,
        "ci": ci,
        "wall_ms": (time.perf_counter() - t0) * 1e3,
    }
    _emit_records([rec], args.format or "json", out)
    return EXIT_OK


def _sweep_config(args) -> SweepConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("sweep config must be a JSON object")
    overrides = {
        "model": args.model,
        "n_ladder": [int(v) for v in args.ladder.split(",")] if args.ladder else None,
        "regime": args.regime,
        "alpha_rule": args.alpha,
        "alpha_bar": args.alpha_bar,
        "x0_rule": args.x0,
        "norm": args.norm,
        "quantity": args.quantity,
        "samples": args.samples,
        "delta": args.delta,
        "master_seeds": [int(v) for v in args.seeds.split(",")] if args.seeds else None,
        "exact": True if args.exact else None,
        "output": None,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    data.pop("output", None)
    if "data_seed" not in data:
        data["data_seed"] = args.seed
    return SweepConfig.from_mapping(data)


def cmd_sweep(args, out):
    cfg = _sweep_config(args)
    rows = run_sweep(cfg)
    if (args.format or "csv") == "json":
        out.write(json.dumps({"config": cfg.to_mapping(), "rng": RNG_DESCRIPTION,
                              "rows": [r.as_row() for r in rows]}, default=_jsonable) + "\n")
    else:
        write_csv(rows, out)
    if args.check:
        report = trend_check(rows)
        print(f"trend: medians={list(report.medians)} decreasing={report.strictly_decreasing} "
              f"ratio={report.endpoint_ratio:.4g} {'PASS' if report.passed else 'FAIL'}", file=sys.stderr)
        if not report.passed:
            return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_verify(args, out):
    rows = run_lemma_grid(args.n0)
    records = [{k: _clean(v) for k, v in r.as_row().items()} for r in rows]
    _emit_records(records, args.format or "csv", out, ["lemma", "params", "lhs", "bound", "margin", "status"])
    failures = grid_failures(rows)
    print(f"verify: {len(rows)} checks, {len(failures)} failures", file=sys.stderr)
    return EXIT_CHECK_FAILED if failures else EXIT_OK


def cmd_optdemo(args, out):
    model = _model(args)
    cfg = rung_config(model.n, args.alpha, args.alpha_bar, args.x0, args.seed)
    spec = OptDemoSpec.random(args.thetas, model.n, args.seed)
    if args.lipschitz is not None:
        spec = OptDemoSpec(spec.theta_ids, spec.a, spec.b, args.lipschitz)
    report = opt_demo_affine(model, cfg, spec)
    _emit_records([dict(vars(report))], args.format or "json", out)
    return EXIT_OK


COMMANDS = {
    "sample": cmd_sample,
    "enumerate": cmd_enumerate,
    "stable": cmd_stable,
    "meanfield": cmd_meanfield,
    "gap": cmd_gap,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "optdemo": cmd_optdemo,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"opinion-mf: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        buf = io.StringIO()
        code = COMMANDS[args.command](args, buf)
        with _output(args.out) as fh:
            fh.write(buf.getvalue())
        return code
    except (ValueError, OSError, json.JSONDecodeError, np.linalg.LinAlgError) as exc:
        print(f"opinion-mf: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
