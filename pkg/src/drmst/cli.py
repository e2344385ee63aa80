"""drmst command line: gen, solve, bench.

Exit codes: 0 ok, 2 usage, 3 missing or malformed input, 4 guard violation
(enumeration cap, generation retries exhausted, unattainable target).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import instance as inst_io
from .baselines import TargetUnattainable, compute_target
from .experiments import CRITERIA, ExperimentConfig, run_sweep, write_reports
from .graph import EnumerationLimitError
from .instance import GenerationError, StatGen, STAT_GEN_POLICIES
from .rv import DEFAULT_TOL, DegenerateInstanceError
from .solvers import solve_benders, solve_bisection, solve_exhaustive, solve_rp

SCHEMA = "drmst/1"
EXIT_USAGE, EXIT_IO, EXIT_GUARD = 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _num(x: float):
    # JSON has no inf; the status field already says Infeasible
    return None if math.isinf(x) or math.isnan(x) else x


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def _load_graph(path: str):
    try:
        return inst_io.load(path)
    except FileNotFoundError as exc:
        raise CliError(EXIT_IO, f"graph file not found: {path}") from exc
    except (json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_IO, f"malformed graph file {path}: {exc}") from exc


def cmd_gen(args) -> int:
    inst = inst_io.gen_erdos_renyi(args.nodes, args.prob, args.seed, StatGen(name=args.stat_gen))
    inst_io.save(inst, args.out)
    n, m = inst.node_count, inst.edge_count
    density = 2 * m / (n * (n - 1))
    print(f"wrote {args.out}: n={n} m={m} density={density:.4f} weight_scale={inst.weight_scale:.6g}")
    return 0


def cmd_solve(args) -> int:
    inst = _load_graph(args.graph)
    tau = args.target if args.target is not None else compute_target(inst, args.beta)
    if args.solver == "rp":
        res = solve_rp(inst, tau, args.tol)
    elif args.solver == "bisect":
        res = solve_bisection(inst, tau, args.tol)
    elif args.solver == "benders":
        res = solve_benders(inst, tau, eps=args.eps, time_limit=args.time_limit,
                            master=args.master, tol=args.tol)
    else:
        res = solve_exhaustive(inst, tau, args.tol)
    doc = {
        "schema": SCHEMA,
        "solver": args.solver,
        "tau": tau,
        "tree": list(res.tree.sorted_ids),
        "status": res.status.value,
        "alpha": _num(res.alpha),
        "capped": res.value.capped,
        "iterations": res.iterations,
        "prim_calls": res.prim_calls,
    }
    if args.solver == "benders":
        doc.update(gap=_num(res.gap), cuts=res.cuts_generated, time_limited=res.time_limited)
    if args.timing:
        doc["wall_ms"] = res.wall_time * 1000.0
    _emit(doc, args.out)
    return 0


def _bench_config(args) -> ExperimentConfig:
    if args.config:
        try:
            text = Path(args.config).read_text()
        except FileNotFoundError as exc:
            raise CliError(EXIT_IO, f"config file not found: {args.config}") from exc
        try:
            cfg = ExperimentConfig.from_json(text)
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise CliError(EXIT_IO, f"malformed config {args.config}: {exc}") from exc
        if args.timing:
            cfg.timing = True
        return cfg
    if not args.nodes_list or not args.seeds:
        raise CliError(EXIT_USAGE, "bench needs --config or both --nodes-list and --seeds")
    try:
        return ExperimentConfig(
            nodes=args.nodes_list, p=args.prob, seeds=args.seeds, betas=args.beta,
            criteria=args.criteria, samples=args.samples, timing=args.timing,
            stat_gen={"name": args.stat_gen},
        )
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc


def cmd_bench(args) -> int:
    cfg = _bench_config(args)
    rows_path = args.out or cfg.output or "rows.csv"
    agg_path = args.agg_out or str(Path(rows_path).with_suffix("")) + "_agg.csv"
    rows, agg = run_sweep(cfg)
    write_reports(rows, agg, cfg, rows_path, agg_path)
    errors = sum(str(r.get("status", "")).startswith("error") for r in rows)
    print(f"wrote {rows_path} ({len(rows)} rows, {errors} errors) and {agg_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="drmst", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded G(n, p) instance")
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--prob", type=float, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--stat-gen", default="uniform-bounds", choices=STAT_GEN_POLICIES)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="minimize the RV index on a graph file")
    s.add_argument("--graph", required=True)
    target = s.add_mutually_exclusive_group(required=True)
    target.add_argument("--target", type=float)
    target.add_argument("--beta", type=float)
    s.add_argument("--solver", choices=("rp", "bisect", "benders", "exhaustive"), default="rp")
    s.add_argument("--master", choices=("enumeration", "milp"), default="enumeration",
                   help="Benders master backend")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.add_argument("--eps", type=float, default=1e-6)
    s.add_argument("--time-limit", type=float, default=60.0)
    s.add_argument("--timing", action="store_true", help="include wall_ms (not reproducible)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a seeded sweep and write CSV reports")
    b.add_argument("--config")
    b.add_argument("--nodes-list", type=int, nargs="+")
    b.add_argument("--prob", type=float, default=0.3)
    b.add_argument("--seeds", type=int, nargs="+")
    b.add_argument("--beta", type=float, nargs="+", default=[0.2])
    b.add_argument("--criteria", nargs="+", default=["mean", "budget", "rv"], choices=CRITERIA)
    b.add_argument("--samples", type=int, default=10_000)
    b.add_argument("--stat-gen", default="uniform-bounds", choices=STAT_GEN_POLICIES)
    b.add_argument("--timing", action="store_true")
    b.add_argument("--out")
    b.add_argument("--agg-out")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "beta", None) is not None and args.command == "solve" and not 0 <= args.beta <= 1:
        print("drmst: error: --beta must lie in [0, 1]", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except CliError as exc:
        print(f"drmst: error: {exc}", file=sys.stderr)
        return exc.code
    except (EnumerationLimitError, GenerationError, TargetUnattainable,
            DegenerateInstanceError) as exc:
        print(f"drmst: error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"drmst: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"drmst: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
