"""Requirements Violation index of a fixed tree and its subgradient in the incidence vector."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .graph import SpanningTree
from .instance import UncertainGraph
from .uncertainty import ce_alpha_derivative, ce_gradient_edge

DEFAULT_TOL = 1e-12
ALPHA_CAP_REL = 1e12
_MAX_BISECT = 400


class Status(str, Enum):
    ZERO = "Zero"
    FINITE = "Finite"
    INFEASIBLE = "Infeasible"


class DegenerateInstanceError(ValueError):
    """The tree's certainty equivalent does not depend on alpha at the point of interest."""


@dataclass(frozen=True)
class RvValue:
    status: Status
    alpha: float = 0.0
    capped: bool = False

    @property
    def value(self) -> float:
        if self.status is Status.ZERO:
            return 0.0
        if self.status is Status.INFEASIBLE:
            return math.inf
        return self.alpha

    @classmethod
    def zero(cls):
        return cls(Status.ZERO, 0.0)

    @classmethod
    def infeasible(cls):
        return cls(Status.INFEASIBLE, math.inf)


def _ids(tree) -> np.ndarray:
    if isinstance(tree, SpanningTree):
        return np.array(tree.sorted_ids, dtype=np.int64)
    return np.asarray(tree, dtype=np.int64)


def rv_index_of_tree(inst: UncertainGraph, tree, tau: float, tol: float = DEFAULT_TOL) -> RvValue:
    """Smallest alpha >= 0 with tree certainty equivalent <= tau.

    Zero when the worst support sum meets tau, Infeasible when the worst mean
    sum exceeds it. Otherwise the root is bracketed from alpha = weight scale
    by doubling/halving and bisected to a width of ``tol * weight_scale``; the
    feasible bracket end is returned. At sum(worst mean) == tau the root is at
    infinity and the result is capped at ``1e12 * weight_scale``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    table = inst.table
    ids = _ids(tree)
    if float(table.upper[ids].sum()) <= tau:
        return RvValue.zero()
    if float(table.worst_mean[ids].sum()) > tau:
        return RvValue.infeasible()
    scale = table.scale

    def h(a):
        return float(table.ce(a, ids).sum())

    return RvValue(*_bracket_and_bisect(lambda a: h(a) <= tau, scale, tol))


def _bracket_and_bisect(feasible, scale: float, tol: float):
    """Threshold of a monotone predicate on (0, inf) as (status, alpha, capped)."""
    cap = ALPHA_CAP_REL * scale
    hi = scale
    if feasible(hi):
        lo = hi / 2
        while feasible(lo):
            hi = lo
            lo /= 2
            if lo < 1e-300:
                return Status.FINITE, hi, False
    else:
        lo = hi
        hi *= 2
        while not feasible(hi):
            lo = hi
            hi *= 2
            if hi >= cap:
                return Status.FINITE, cap, True
    width = tol * scale
    for _ in range(_MAX_BISECT):
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return Status.FINITE, hi, False


def rv_subgradient(inst: UncertainGraph, tree, tau: float, value: RvValue) -> np.ndarray:
    """Subgradient of the RV index w.r.t. the incidence vector at ``tree``.

    Zero when the index is 0. For a finite index, edge ``a`` gets
    ``-dC/dp_a / dC/dalpha`` at (alpha*, p), with the multiplier
    ``-1 / dC/dalpha`` from the stationarity condition of the Lagrangian.
    """
    if value.status is Status.INFEASIBLE:
        raise ValueError("an infeasible tree has no finite subgradient")
    m = inst.edge_count
    if value.status is Status.ZERO:
        return np.zeros(m)
    alpha = value.alpha
    ids = set(_ids(tree).tolist())
    d_alpha = sum(ce_alpha_derivative(inst.unc[e], alpha, 1.0) for e in ids)
    if d_alpha == 0.0:
        raise DegenerateInstanceError(
            "certainty equivalent is flat in alpha (all selected edges constant)"
        )
    multiplier = -1.0 / d_alpha
    dp = np.array([ce_gradient_edge(inst.unc[a], alpha, 1.0 if a in ids else 0.0) for a in range(m)])
    return multiplier * dp


def rv_index_many(inst: UncertainGraph, trees: np.ndarray, tau: float,
                  tol: float = DEFAULT_TOL, chunk: int = 1 << 15) -> np.ndarray:
    """RV index of many trees at once (rows of edge ids); +inf marks Infeasible.

    Same bracketing and bisection as :func:`rv_index_of_tree`, vectorized over rows.
    """
    table = inst.table
    out = np.empty(len(trees))
    upper = table.upper[trees].sum(axis=1)
    mean = table.worst_mean[trees].sum(axis=1)
    out[upper <= tau] = 0.0
    out[(upper > tau) & (mean > tau)] = math.inf
    todo = np.flatnonzero((upper > tau) & (mean <= tau))
    scale = table.scale
    cap = ALPHA_CAP_REL * scale
    for start in range(0, len(todo), chunk):
        rows = todo[start:start + chunk]
        t = trees[rows]

        def feas(a):
            return table.ce_rows(t, a) <= tau

        lo = np.full(len(rows), scale)
        hi = np.full(len(rows), scale)
        ok = feas(hi)
        # bracket: shrink lo for feasible rows, grow hi for the others
        need_lo = ok.copy()
        lo[need_lo] = scale / 2
        need_hi = ~ok
        hi[need_hi] = 2 * scale
        capped = np.zeros(len(rows), dtype=bool)
        while need_lo.any() or need_hi.any():
            if need_lo.any():
                f = feas(lo)
                shrink = need_lo & f
                hi[shrink] = lo[shrink]
                lo[shrink] /= 2
                need_lo &= f
            if need_hi.any():
                f = feas(hi)
                grow = need_hi & ~f
                lo[grow] = hi[grow]
                hi[grow] *= 2
                over = grow & (hi >= cap)
                capped |= over
                need_hi &= ~f & ~over
        hi[capped] = cap
        width = tol * scale
        for _ in range(_MAX_BISECT):
            active = (hi - lo > width) & ~capped
            mid = 0.5 * (lo + hi)
            active &= (mid > lo) & (mid < hi)
            if not active.any():
                break
            f = feas(mid)
            take = active & f
            hi[take] = mid[take]
            drop = active & ~f
            lo[drop] = mid[drop]
        out[rows] = hi
    return out
