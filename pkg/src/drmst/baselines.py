"""Comparison criteria: mean-weight MST, maximal budget of uncertainty, SAA arrival probability."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import DEFAULT_TREE_CAP, SpanningTree, prim, tree_matrix
from .instance import UncertainGraph
from .sampling import PiecewiseUniformSampler, sample_weights


class TargetUnattainable(ValueError):
    """No spanning tree meets the target even without protection (Gamma = 0)."""


def solve_min_mean(inst: UncertainGraph) -> SpanningTree:
    """MST under point means (midpoint of a mean interval)."""
    return prim(inst.graph, inst.means)


def compute_target(inst: UncertainGraph, beta: float) -> float:
    """tau = (1 - beta) * min_s mu's + beta * min_s zbar's, with worst means for mu."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    mu, up = inst.table.worst_mean, inst.table.upper
    low = prim(inst.graph, mu).weight(mu)
    high = prim(inst.graph, up).weight(up)
    return (1.0 - beta) * low + beta * high


@dataclass(frozen=True)
class BudgetResult:
    tree: SpanningTree
    gamma_star: float
    fully_protected: bool
    best_index: int
    prim_calls: int


def robust_cost(mu, dev, edge_ids, gamma: float) -> float:
    """max of w'y over {mu + c : 0 <= c <= dev, sum c/dev <= gamma} for one tree.

    The largest deviations are taken whole, the next one fractionally.
    """
    ids = list(edge_ids)
    base = float(np.sum(np.asarray(mu)[ids]))
    d = np.sort(np.asarray(dev)[ids])[::-1]
    d = d[d > 0]
    full = int(min(len(d), np.floor(gamma)))
    extra = float(d[:full].sum())
    if full < len(d):
        extra += (gamma - full) * float(d[full])
    return base + extra


def solve_budget(inst: UncertainGraph, tau: float) -> BudgetResult:
    """Largest protection level Gamma whose robust MST cost still meets ``tau``.

    Deviations d = upper - worst_mean are sorted in decreasing order with a
    trailing zero. For each l, C_l is the MST under weights mu_j + (d_j - d_l)
    for the first l sorted edges and mu_j for the rest, and
    Gamma* = max_l (tau - C_l) / d_l over d_l > 0. If the all-upper MST already
    meets tau the tree is fully protected and Gamma* is reported as m.
    """
    mu = inst.table.worst_mean
    dev = np.maximum(inst.table.upper - mu, 0.0)
    m = inst.edge_count
    order = sorted(range(m), key=lambda j: (-dev[j], j))
    d_sorted = np.append(dev[order], 0.0)
    calls = 0
    best = None
    for l in range(m + 1):
        dl = d_sorted[l]
        w = mu.copy()
        head = order[: l + 1] if l < m else order
        w[head] += dev[head] - dl
        tree = prim(inst.graph, w)
        calls += 1
        c_l = tree.weight(w)
        if dl > 0:
            ratio = (tau - c_l) / dl
            if best is None or ratio > best[0]:
                best = (ratio, l, tree, False)
        elif c_l <= tau:
            # zero deviation threshold: the tree meets tau at any protection level
            best = (float(m), l, tree, True)
            break
    if best is None or best[0] < 0:
        raise TargetUnattainable(f"no spanning tree meets tau={tau} even at Gamma = 0")
    ratio, l, tree, full = best
    return BudgetResult(tree, float(ratio), full, l, calls)


def solve_saa_probability(inst: UncertainGraph, tau: float, k: int, seed,
                          cap: int = DEFAULT_TREE_CAP):
    """Sample-average arrival probability: draw ``k`` piecewise-uniform scenarios and scan all trees."""
    if k < 1:
        raise ValueError("need at least one scenario")
    scenarios = sample_weights(PiecewiseUniformSampler.from_instance(inst), k, seed)
    return saa_on_scenarios(inst, tau, scenarios, cap)


def saa_on_scenarios(inst: UncertainGraph, tau: float, scenarios: np.ndarray,
                     cap: int = DEFAULT_TREE_CAP):
    """Tree meeting ``tau`` in the most scenarios, by enumeration of all trees.

    Ties go to the smaller point-mean cost, then to enumeration order.
    Returns (tree, achieved_fraction).
    """
    trees = tree_matrix(inst.graph, cap)
    w = np.asarray(scenarios, dtype=float)
    if w.ndim != 2 or w.shape[1] != inst.edge_count or len(w) == 0:
        raise ValueError("scenarios must be a nonempty (K, m) matrix")
    hits = np.zeros(len(trees), dtype=np.int64)
    step = max(1, (1 << 22) // (len(w) * max(1, trees.shape[1])))
    for start in range(0, len(trees), step):
        cost = w[:, trees[start:start + step]].sum(axis=2)
        hits[start:start + step] = (cost <= tau).sum(axis=0)
    mean_cost = inst.means[trees].sum(axis=1)
    k = int(np.lexsort((mean_cost, -hits))[0])
    return SpanningTree.of(trees[k], inst.edge_count), hits[k] / len(w)
