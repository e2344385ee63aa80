"""Monte-Carlo evaluation of selected trees and seeded instance sweeps with CSV reports."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import compute_target, saa_on_scenarios, solve_budget, solve_min_mean
from .graph import SpanningTree
from .instance import StatGen, UncertainGraph, gen_erdos_renyi
from .rv import DEFAULT_TOL, rv_index_of_tree
from .sampling import PiecewiseUniformSampler, sample_weights
from .solvers import solve_benders, solve_bisection, solve_exhaustive, solve_rp

RV_CRITERIA = ("rv", "rv_bisection", "rv_benders", "rv_exhaustive")
CRITERIA = RV_CRITERIA + ("mean", "budget", "saa")
RATIO_METRICS = ("mean", "stdev", "EL", "CEL")


@dataclass
class EvalMetrics:
    mean: float
    stdev: float
    failure_probability: float
    el: float
    cel: float
    var: dict
    sample_count: int
    no_failures: bool


def _quantile_index(gamma: float, k: int) -> int:
    # 1-based order statistic ceil(gamma * k), robust to float noise in gamma * k
    return min(k, max(1, math.ceil(gamma * k - 1e-9)))


def evaluate_tree(tree, samples: np.ndarray, tau: float, gammas=(0.95, 0.99)) -> EvalMetrics:
    """Plug-in cost statistics of ``tree`` over the rows of ``samples``.

    A failure is a cost strictly above ``tau``; CEL averages the excess over
    failures and is 0 (flagged) when none occur. VaR@g is the ceil(g*K)-th
    smallest cost.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or len(samples) == 0:
        raise ValueError("samples must be a nonempty (K, m) matrix")
    ids = list(tree.sorted_ids) if isinstance(tree, SpanningTree) else list(tree)
    cost = samples[:, ids].sum(axis=1)
    k = len(cost)
    excess = np.maximum(cost - tau, 0.0)
    fails = cost > tau
    n_fail = int(fails.sum())
    ordered = np.sort(cost)
    var = {g: float(ordered[_quantile_index(g, k) - 1]) for g in gammas}
    return EvalMetrics(
        mean=float(cost.mean()),
        stdev=float(cost.std(ddof=1)) if k > 1 else 0.0,
        failure_probability=n_fail / k,
        el=float(excess.mean()),
        cel=float(excess[fails].mean()) if n_fail else 0.0,
        var=var,
        sample_count=k,
        no_failures=n_fail == 0,
    )


@dataclass
class ExperimentConfig:
    nodes: list
    p: float
    seeds: list
    betas: list = field(default_factory=lambda: [0.2])
    criteria: list = field(default_factory=lambda: ["mean", "budget", "rv"])
    samples: int = 10_000
    gammas: list = field(default_factory=lambda: [0.95, 0.99])
    saa_samples: int = 200
    tol: float = DEFAULT_TOL
    timing: bool = False
    output: str | None = None
    stat_gen: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = [int(n) for n in _as_list(self.nodes)]
        self.seeds = [int(s) for s in _as_list(self.seeds)]
        self.betas = [float(b) for b in _as_list(self.betas)]
        self.criteria = [str(c) for c in _as_list(self.criteria)]
        self.gammas = [float(g) for g in _as_list(self.gammas)]
        bad = [c for c in self.criteria if c not in CRITERIA]
        if bad:
            raise ValueError(f"unknown criteria {bad}; choose from {list(CRITERIA)}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if not self.nodes or not self.seeds or not self.criteria:
            raise ValueError("nodes, seeds and criteria must be nonempty")
        if any(not 0 <= b <= 1 for b in self.betas):
            raise ValueError("beta values must lie in [0, 1]")
        if not 0 < self.p <= 1:
            raise ValueError("p must lie in (0, 1]")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        StatGen(**self.stat_gen)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        if "beta" in data and "betas" not in data:
            data["betas"] = data.pop("beta")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def var_column(gamma: float) -> str:
    return f"VaR{round(gamma * 100):d}"


def row_columns(cfg: ExperimentConfig) -> list[str]:
    return (["instance_seed", "n", "p", "beta", "criterion", "status", "rv_alpha",
             "tree_mean_cost", "mean", "stdev", "failure_prob", "EL", "CEL"]
            + [var_column(g) for g in cfg.gammas]
            + ["iterations", "prim_calls", "wall_ms"])


def _select(criterion: str, inst: UncertainGraph, tau: float, cfg: ExperimentConfig, seed: int):
    """Returns (tree, iterations, prim_calls)."""
    if criterion == "rv":
        r = solve_rp(inst, tau, cfg.tol)
    elif criterion == "rv_bisection":
        r = solve_bisection(inst, tau, cfg.tol)
    elif criterion == "rv_benders":
        r = solve_benders(inst, tau, tol=cfg.tol)
    elif criterion == "rv_exhaustive":
        r = solve_exhaustive(inst, tau, cfg.tol)
    elif criterion == "mean":
        return solve_min_mean(inst), 0, 1
    elif criterion == "budget":
        b = solve_budget(inst, tau)
        return b.tree, 0, b.prim_calls
    elif criterion == "saa":
        scen = sample_weights(PiecewiseUniformSampler.from_instance(inst), cfg.saa_samples,
                              np.random.SeedSequence([seed, 2]))
        tree, _ = saa_on_scenarios(inst, tau, scen)
        return tree, 0, 0
    else:
        raise ValueError(criterion)
    return r.tree, r.iterations, r.prim_calls


def _instance_rows(cfg: ExperimentConfig, n: int, seed: int) -> list[dict]:
    base = {"instance_seed": seed, "n": n, "p": cfg.p}
    try:
        inst = gen_erdos_renyi(n, cfg.p, seed, StatGen(**cfg.stat_gen))
        samples = sample_weights(PiecewiseUniformSampler.from_instance(inst), cfg.samples,
                                 np.random.SeedSequence([seed, 1]))
    except Exception as exc:  # recorded, sweep continues
        return [dict(base, beta=b, criterion=c, status=f"error: {exc}")
                for b in cfg.betas for c in cfg.criteria]
    rows = []
    for beta in cfg.betas:
        tau = compute_target(inst, beta)
        for crit in cfg.criteria:
            row = dict(base, beta=beta, criterion=crit)
            start = time.perf_counter()
            try:
                tree, its, calls = _select(crit, inst, tau, cfg, seed)
            except Exception as exc:
                row["status"] = f"error: {type(exc).__name__}: {exc}"
                rows.append(row)
                continue
            wall = (time.perf_counter() - start) * 1000.0
            rv = rv_index_of_tree(inst, tree, tau, cfg.tol)
            ev = evaluate_tree(tree, samples, tau, cfg.gammas)
            row.update(
                status=rv.status.value, rv_alpha=rv.value,
                tree_mean_cost=float(inst.means[list(tree.sorted_ids)].sum()),
                mean=ev.mean, stdev=ev.stdev, failure_prob=ev.failure_probability,
                EL=ev.el, CEL=ev.cel, iterations=its, prim_calls=calls,
                wall_ms=wall if cfg.timing else None, tree=tree.sorted_ids, tau=tau,
            )
            for g in cfg.gammas:
                row[var_column(g)] = ev.var[g]
            rows.append(row)
    return rows


def worker_count(tasks: int) -> int:
    env = os.environ.get("DRMST_THREADS")
    limit = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(limit, tasks))


def run_sweep(cfg: ExperimentConfig) -> tuple[list[dict], list[dict]]:
    """Per-row results in (n, seed, beta, criterion) order, plus per-group aggregates."""
    tasks = [(n, s) for n in cfg.nodes for s in cfg.seeds]
    with ThreadPoolExecutor(max_workers=worker_count(len(tasks))) as pool:
        chunks = list(pool.map(lambda t: _instance_rows(cfg, *t), tasks))
    rows = [r for chunk in chunks for r in chunk]
    return rows, aggregate(rows, cfg)


def _reference(criteria) -> str | None:
    for c in RV_CRITERIA:
        if c in criteria:
            return c
    return None


def aggregate(rows: list[dict], cfg: ExperimentConfig) -> list[dict]:
    """Arithmetic means over instances per (n, beta, criterion), with ratios to the RV row."""
    metrics = (["tree_mean_cost", "mean", "stdev", "failure_prob", "EL", "CEL"]
               + [var_column(g) for g in cfg.gammas] + ["iterations", "prim_calls"])
    if cfg.timing:
        metrics.append("wall_ms")
    ratio_metrics = list(RATIO_METRICS) + [var_column(g) for g in cfg.gammas]
    ref = _reference(cfg.criteria)
    out = []
    for n in cfg.nodes:
        for beta in cfg.betas:
            group = {}
            for crit in cfg.criteria:
                sel = [r for r in rows if r["n"] == n and r["beta"] == beta and r["criterion"] == crit]
                ok = [r for r in sel if not str(r.get("status", "")).startswith("error")]
                rec = {"n": n, "p": cfg.p, "beta": beta, "criterion": crit,
                       "instances": len(ok), "errors": len(sel) - len(ok)}
                for k in metrics:
                    rec[k] = float(np.mean([r[k] for r in ok])) if ok else None
                group[crit] = rec
            for crit, rec in group.items():
                for k in ratio_metrics:
                    rec[f"{k}_ratio"] = _ratio(rec[k], group[ref][k]) if ref else None
                out.append(rec)
    return out


def _ratio(num, den):
    if num is None or den is None:
        return None
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den


def aggregate_columns(cfg: ExperimentConfig) -> list[str]:
    cols = (["n", "p", "beta", "criterion", "instances", "errors", "tree_mean_cost", "mean",
             "stdev", "failure_prob", "EL", "CEL"] + [var_column(g) for g in cfg.gammas]
            + ["iterations", "prim_calls"])
    if cfg.timing:
        cols.append("wall_ms")
    return cols + [f"{k}_ratio" for k in list(RATIO_METRICS) + [var_column(g) for g in cfg.gammas]]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def to_csv(records: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def write_reports(rows, agg, cfg: ExperimentConfig, rows_path, agg_path) -> None:
    Path(rows_path).write_text(to_csv(rows, row_columns(cfg)))
    Path(agg_path).write_text(to_csv(agg, aggregate_columns(cfg)))
