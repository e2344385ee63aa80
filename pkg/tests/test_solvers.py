import math

import numpy as np
import pytest

from conftest import small_instances
from drmst.baselines import compute_target
from drmst.graph import SpanningTree, tree_matrix
from drmst.instance import from_arrays, gen_erdos_renyi
from drmst.rv import Status, rv_index_many, rv_index_of_tree
from drmst.solvers import (
    EnumerationMaster,
    MilpMaster,
    make_cut,
    master_solve_enumeration,
    solve_benders,
    solve_bisection,
    solve_exhaustive,
    solve_rp,
)


def brute_min(inst, tau):
    return rv_index_many(inst, tree_matrix(inst.graph), tau).min()


@pytest.mark.parametrize("beta", [0.1, 0.5])
def test_solvers_agree_with_brute_force(beta):
    for inst, _, _ in small_instances(25, seed=7):
        tau = compute_target(inst, beta)
        ref = brute_min(inst, tau)
        ex = solve_exhaustive(inst, tau)
        assert ex.alpha == pytest.approx(ref, abs=1e-9)
        for res in (solve_rp(inst, tau), solve_bisection(inst, tau), solve_benders(inst, tau)):
            assert res.tree.is_valid(inst.graph)
            assert res.alpha == pytest.approx(ref, abs=1e-6)
            assert rv_index_of_tree(inst, res.tree, tau).value == pytest.approx(res.alpha)


def test_rp_trace_nonincreasing():
    for inst, _, _ in small_instances(30, seed=8):
        res = solve_rp(inst, compute_target(inst, 0.2))
        # every evaluated tree but a final rejected tie strictly improves
        kept = res.trace[:-1]
        assert all(b < a for a, b in zip(kept, kept[1:]))
        assert res.alpha <= min(res.trace) + 1e-12 * inst.weight_scale
        assert res.iterations <= 10


def test_beta_one_is_zero_and_infeasible_target():
    inst = gen_erdos_renyi(7, 0.6, 1)
    for solver in (solve_rp, solve_bisection, solve_benders, solve_exhaustive):
        assert solver(inst, compute_target(inst, 1.0)).status is Status.ZERO
        res = solver(inst, compute_target(inst, 0.0) - 1.0)
        assert res.status is Status.INFEASIBLE and math.isinf(res.alpha)


def test_benders_bounds_and_cuts():
    for inst, _, _ in small_instances(20, seed=9):
        tau = compute_target(inst, 0.2)
        res = solve_benders(inst, tau, eps=1e-6)
        assert res.gap <= 1e-6
        lb = res.lower_bounds
        assert all(b >= a - 1e-12 for a, b in zip(lb, lb[1:]))
        assert lb[-1] <= res.alpha + 1e-6


def test_cut_underestimates_everywhere():
    inst = gen_erdos_renyi(6, 0.7, 12)
    tau = compute_target(inst, 0.2)
    trees = tree_matrix(inst.graph)
    vals = rv_index_many(inst, trees, tau)
    ys = np.zeros((len(trees), inst.edge_count))
    np.put_along_axis(ys, trees, 1.0, axis=1)
    for k in range(0, len(trees), 37):
        s = SpanningTree.of(trees[k], inst.edge_count)
        v = rv_index_of_tree(inst, s, tau)
        if v.status is Status.INFEASIBLE:
            continue
        cut = make_cut(inst, s, tau, v)
        pred = cut.constant + ys @ cut.subgrad
        finite = np.isfinite(vals)
        assert (vals[finite] - pred[finite]).min() >= -1e-9


def test_enumeration_master_matches_direct_max():
    inst = gen_erdos_renyi(6, 0.7, 2)
    tau = compute_target(inst, 0.2)
    trees = tree_matrix(inst.graph)
    vals = rv_index_many(inst, trees, tau)
    finite = np.flatnonzero(np.isfinite(vals))
    picks = [SpanningTree.of(trees[k], inst.edge_count) for k in finite[[0, len(finite) // 2, -1]]]
    cuts = [make_cut(inst, s, tau, rv_index_of_tree(inst, s, tau)) for s in picks]
    tree, w = master_solve_enumeration(inst, cuts)
    ys = np.zeros((len(trees), inst.edge_count))
    np.put_along_axis(ys, trees, 1.0, axis=1)
    bound = np.max([c.constant + ys @ c.subgrad for c in cuts], axis=0)
    assert w == pytest.approx(bound.min())
    master = EnumerationMaster(inst)
    for c in cuts:
        master.add_cut(c)
    assert master.solve()[1] == pytest.approx(w)


def test_milp_master_small():
    for inst, _, _ in small_instances(6, n_range=(5, 7), seed=10):
        tau = compute_target(inst, 0.2)
        ref = solve_exhaustive(inst, tau)
        res = solve_benders(inst, tau, master="milp")
        assert res.alpha == pytest.approx(ref.alpha, abs=1e-6)
        assert res.gap <= 1e-6


def test_milp_master_n20():
    # the enumeration master is out of reach at this size
    inst = gen_erdos_renyi(20, 0.3, 2)
    tau = compute_target(inst, 0.2)
    res = solve_benders(inst, tau, master="milp", time_limit=120)
    assert not res.time_limited
    assert res.alpha == pytest.approx(solve_rp(inst, tau).alpha, rel=1e-6)


def test_time_limit_and_iteration_cap():
    inst = gen_erdos_renyi(8, 0.8, 4)
    tau = compute_target(inst, 0.2)
    res = solve_benders(inst, tau, max_iter=1)
    assert res.time_limited and res.iterations == 1
    res = solve_benders(inst, tau, time_limit=0.0)
    assert res.time_limited


def test_unknown_master():
    inst = gen_erdos_renyi(5, 0.8, 4)
    with pytest.raises(ValueError):
        solve_benders(inst, compute_target(inst, 0.2), master="simplex")


def test_deterministic_edges_mixed_in():
    edges = [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]
    inst = from_arrays(edges, lo=[1, 2, 2, 1, 3], hi=[4, 2, 6, 5, 3], mean=[2, 2, 3, 3, 3])
    tau = compute_target(inst, 0.3)
    ref = solve_exhaustive(inst, tau)
    assert solve_rp(inst, tau).alpha == pytest.approx(ref.alpha, abs=1e-6)
    assert solve_benders(inst, tau).alpha == pytest.approx(ref.alpha, abs=1e-6)
