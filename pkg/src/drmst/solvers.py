"""Exact solvers for the RV-index minimum spanning tree problem.

* :func:`solve_rp` - repeated Prim: reweight edges by their certainty
  equivalent at the current tree's RV index until the tree stops changing.
* :func:`solve_bisection` - bisection on alpha, one Prim call per probe.
* :func:`solve_benders` - cutting planes on the convex RV index, with a
  pluggable master problem (tree enumeration or a small MILP).
* :func:`solve_exhaustive` - evaluate every spanning tree (ground truth).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .graph import DEFAULT_TREE_CAP, SpanningTree, prim, tree_matrix
from .instance import UncertainGraph
from .rv import (
    DEFAULT_TOL,
    RvValue,
    Status,
    _bracket_and_bisect,
    rv_index_many,
    rv_index_of_tree,
    rv_subgradient,
)


@dataclass
class RvSolveResult:
    tree: SpanningTree
    value: RvValue
    iterations: int
    prim_calls: int
    wall_time: float
    cuts_generated: int = 0
    gap: float = math.nan
    time_limited: bool = False
    trace: list[float] = field(default_factory=list)
    lower_bounds: list[float] = field(default_factory=list)

    @property
    def status(self) -> Status:
        return self.value.status

    @property
    def alpha(self) -> float:
        return self.value.value


def solve_rp(inst: UncertainGraph, tau: float, tol: float = DEFAULT_TOL,
             max_iter: int = 1000) -> RvSolveResult:
    """Repeated Prim, started from the worst-mean tree.

    Stops when Prim returns the same edge set, or a different tree whose RV
    index is not smaller (a tie between optima).
    """
    start = time.perf_counter()
    g, table = inst.graph, inst.table
    s = prim(g, table.worst_mean)
    prim_calls = 1
    val = rv_index_of_tree(inst, s, tau, tol)
    trace = [val.value]
    slack = tol * table.scale
    while val.status is Status.FINITE and len(trace) < max_iter:
        s_new = prim(g, table.ce(val.alpha))
        prim_calls += 1
        if s_new.edge_ids == s.edge_ids:
            break
        val_new = rv_index_of_tree(inst, s_new, tau, tol)
        trace.append(val_new.value)
        if val_new.value >= val.value - slack:
            break
        s, val = s_new, val_new
    return RvSolveResult(s, val, len(trace), prim_calls, time.perf_counter() - start, trace=trace)


def solve_bisection(inst: UncertainGraph, tau: float, tol: float = DEFAULT_TOL) -> RvSolveResult:
    """Bisection on alpha over min_y C_alpha(w'y) - tau, Prim for the inner minimum."""
    start = time.perf_counter()
    g, table = inst.graph, inst.table
    calls = 0

    def done(tree, iterations):
        val = rv_index_of_tree(inst, tree, tau, tol)
        return RvSolveResult(tree, val, iterations, calls, time.perf_counter() - start,
                             trace=[val.value])

    s0 = prim(g, table.upper)
    calls += 1
    if s0.weight(table.upper) <= tau:
        return done(s0, 0)
    s_inf = prim(g, table.worst_mean)
    calls += 1
    if s_inf.weight(table.worst_mean) > tau:
        return done(s_inf, 0)

    witness = {"tree": s_inf}
    probes = 0

    def feasible(alpha):
        nonlocal calls, probes
        w = table.ce(alpha)
        tree = prim(g, w)
        calls += 1
        probes += 1
        if tree.weight(w) <= tau:
            witness["tree"] = tree
            return True
        return False

    _bracket_and_bisect(feasible, table.scale, tol)
    return done(witness["tree"], probes)


# ---------------------------------------------------------------------------
# Benders


@dataclass(frozen=True)
class BendersCut:
    anchor: np.ndarray
    f_value: float
    subgrad: np.ndarray

    @property
    def constant(self) -> float:
        return float(self.f_value - self.subgrad @ self.anchor)

    def __call__(self, y) -> float:
        """Cut value at an incidence vector or a SpanningTree."""
        if isinstance(y, SpanningTree):
            return self.constant + float(self.subgrad[list(y.sorted_ids)].sum())
        return float(self.f_value + self.subgrad @ (np.asarray(y, dtype=float) - self.anchor))


def make_cut(inst: UncertainGraph, tree: SpanningTree, tau: float, value: RvValue) -> BendersCut:
    return BendersCut(tree.incidence(), value.value, rv_subgradient(inst, tree, tau, value))


class MasterBackend(Protocol):
    def add_cut(self, cut: BendersCut) -> None: ...

    def exclude(self, tree: SpanningTree) -> None: ...

    def solve(self) -> tuple[SpanningTree, float] | None: ...


class EnumerationMaster:
    """min over all spanning trees of the max of the cuts, by enumeration.

    With ``tau`` set, only trees whose worst-mean cost is at most ``tau``
    (i.e. with a finite RV index) are admissible.
    """

    def __init__(self, inst: UncertainGraph, tau: float | None = None, cap: int = DEFAULT_TREE_CAP):
        self.trees = tree_matrix(inst.graph, cap)
        self.m = inst.edge_count
        self.bound = np.full(len(self.trees), -np.inf)
        self.allowed = np.ones(len(self.trees), dtype=bool)
        if tau is not None:
            self.allowed &= inst.table.worst_mean[self.trees].sum(axis=1) <= tau
        self.n_cuts = 0

    def add_cut(self, cut: BendersCut) -> None:
        np.maximum(self.bound, cut.constant + cut.subgrad[self.trees].sum(axis=1), out=self.bound)
        self.n_cuts += 1

    def exclude(self, tree: SpanningTree) -> None:
        hit = np.all(self.trees == np.array(tree.sorted_ids), axis=1)
        self.allowed &= ~hit

    def solve(self):
        if self.n_cuts == 0:
            raise ValueError("master needs at least one cut")
        if not self.allowed.any():
            return None
        masked = np.where(self.allowed, self.bound, np.inf)
        k = int(np.argmin(masked))
        return SpanningTree.of(self.trees[k], self.m), float(masked[k])


def master_solve_enumeration(inst: UncertainGraph, cuts, tau: float | None = None,
                             cap: int = DEFAULT_TREE_CAP):
    """(tree, w*) minimizing the max over ``cuts`` across all spanning trees."""
    master = EnumerationMaster(inst, tau, cap)
    for c in cuts:
        master.add_cut(c)
    return master.solve()


class MilpMaster:
    """Master problem as a MILP over edge indicators with lazy subtour elimination.

    Solved with scipy's HiGHS interface; a subtour constraint
    ``sum_{e in E(S)} y_e <= |S| - 1`` is added for every cycle-carrying
    component of an incumbent until the solution is a spanning tree.
    """

    def __init__(self, inst: UncertainGraph, tau: float | None = None):
        self.inst = inst
        self.n = inst.node_count
        self.m = inst.edge_count
        self.rows: list[np.ndarray] = []
        self.ub: list[float] = []
        self.cuts: list[BendersCut] = []
        if tau is not None:
            self.rows.append(np.append(inst.table.worst_mean, 0.0))
            self.ub.append(float(tau))

    def add_cut(self, cut: BendersCut) -> None:
        self.cuts.append(cut)
        self.rows.append(np.append(cut.subgrad, -1.0))
        self.ub.append(-cut.constant)

    def exclude(self, tree: SpanningTree) -> None:
        row = np.append(tree.incidence(), 0.0)
        self.rows.append(row)
        self.ub.append(self.n - 2.0)

    def _subtours(self, y) -> list[np.ndarray]:
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        chosen = [j for j in range(self.m) if y[j] > 0.5]
        for j in chosen:
            u, v = self.inst.graph.edges[j]
            parent[find(u)] = find(v)
        comps: dict[int, list[int]] = {}
        for v in range(self.n):
            comps.setdefault(find(v), []).append(v)
        out = []
        for nodes in comps.values():
            s = set(nodes)
            inside = [j for j, (u, v) in enumerate(self.inst.graph.edges) if u in s and v in s]
            if sum(1 for j in inside if y[j] > 0.5) > len(nodes) - 1:
                row = np.zeros(self.m + 1)
                row[inside] = 1.0
                out.append((row, len(nodes) - 1.0))
        return out

    def solve(self):
        from scipy.optimize import Bounds, LinearConstraint, milp

        if not self.cuts:
            raise ValueError("master needs at least one cut")
        c = np.zeros(self.m + 1)
        c[-1] = 1.0
        integrality = np.append(np.ones(self.m), 0)
        bounds = Bounds(np.append(np.zeros(self.m), -np.inf), np.append(np.ones(self.m), np.inf))
        card = LinearConstraint(np.append(np.ones(self.m), 0.0)[None, :], self.n - 1, self.n - 1)
        while True:
            cons = [card]
            if self.rows:
                cons.append(LinearConstraint(np.vstack(self.rows), -np.inf, np.array(self.ub)))
            res = milp(c, constraints=cons, integrality=integrality, bounds=bounds,
                       options={"mip_rel_gap": 1e-12, "presolve": True})
            if res.status == 2:
                return None
            if res.x is None:
                raise RuntimeError(f"MILP master failed: {res.message}")
            y = res.x[: self.m]
            extra = self._subtours(y)
            if not extra:
                break
            for row, rhs in extra:
                self.rows.append(row)
                self.ub.append(rhs)
        tree = SpanningTree.of([j for j in range(self.m) if y[j] > 0.5], self.m)
        return tree, max(cut(tree) for cut in self.cuts)


def solve_benders(inst: UncertainGraph, tau: float, eps: float = 1e-6, time_limit: float = 60.0,
                  master: str | MasterBackend = "enumeration", tol: float = DEFAULT_TOL,
                  max_iter: int | None = None) -> RvSolveResult:
    """Cutting-plane (Benders) method seeded with the worst-mean Prim tree.

    The loop gap is f(y) - w* for the master's latest tree y; the incumbent
    keeps the smallest RV index seen.
    """
    start = time.perf_counter()
    seed = prim(inst.graph, inst.table.worst_mean)
    f_seed = rv_index_of_tree(inst, seed, tau, tol)
    if f_seed.status is Status.INFEASIBLE:
        return RvSolveResult(seed, f_seed, 1, 1, time.perf_counter() - start,
                             gap=0.0, trace=[f_seed.value])
    if isinstance(master, str):
        if master == "enumeration":
            master = EnumerationMaster(inst, tau)
        elif master == "milp":
            master = MilpMaster(inst, tau)
        else:
            raise ValueError(f"unknown master backend {master!r}")
    master.add_cut(make_cut(inst, seed, tau, f_seed))
    best_tree, best_val = seed, f_seed
    trace = [f_seed.value]
    lower = []
    gap = math.inf
    iterations = 1
    cuts = 1
    limited = False
    while gap > eps:
        if time.perf_counter() - start >= time_limit:
            limited = True
            break
        if max_iter is not None and iterations >= max_iter:
            limited = True
            break
        sol = master.solve()
        if sol is None:
            break
        y, w_star = sol
        lower.append(w_star)
        f_y = rv_index_of_tree(inst, y, tau, tol)
        iterations += 1
        trace.append(f_y.value)
        if f_y.status is Status.INFEASIBLE:
            master.exclude(y)
            continue
        master.add_cut(make_cut(inst, y, tau, f_y))
        cuts += 1
        gap = f_y.value - w_star
        if f_y.value < best_val.value:
            best_tree, best_val = y, f_y
    return RvSolveResult(best_tree, best_val, iterations, 1, time.perf_counter() - start,
                         cuts_generated=cuts, gap=gap, time_limited=limited, trace=trace,
                         lower_bounds=lower)


def solve_exhaustive(inst: UncertainGraph, tau: float, tol: float = DEFAULT_TOL,
                     cap: int = DEFAULT_TREE_CAP) -> RvSolveResult:
    """Minimum RV index over every spanning tree; ties go to the lexicographically smallest."""
    start = time.perf_counter()
    trees = tree_matrix(inst.graph, cap)
    vals = rv_index_many(inst, trees, tau, tol)
    if np.isinf(vals).all():
        k = int(np.argmin(inst.table.worst_mean[trees].sum(axis=1)))
    else:
        k = int(np.argmin(vals))
    tree = SpanningTree.of(trees[k], inst.edge_count)
    val = rv_index_of_tree(inst, tree, tau, tol)
    return RvSolveResult(tree, val, len(trees), 0, time.perf_counter() - start, trace=[val.value])
