import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from conftest import small_instances
from drmst.baselines import (
    TargetUnattainable,
    compute_target,
    robust_cost,
    saa_on_scenarios,
    solve_budget,
    solve_min_mean,
    solve_saa_probability,
)
from drmst.graph import tree_matrix
from drmst.instance import gen_erdos_renyi
from drmst.sampling import PiecewiseUniformSampler, sample_weights
from oracles import min_robust_cost_over_trees


def test_target_endpoints_and_min_mean():
    for inst, _, _ in small_instances(10, seed=20):
        trees = tree_matrix(inst.graph)
        assert compute_target(inst, 0.0) == pytest.approx(inst.worst_means[trees].sum(axis=1).min())
        assert compute_target(inst, 1.0) == pytest.approx(inst.uppers[trees].sum(axis=1).min())
        tree = solve_min_mean(inst)
        assert tree.weight(inst.means) == pytest.approx(inst.means[trees].sum(axis=1).min())
    with pytest.raises(ValueError):
        compute_target(inst, 1.5)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 5)), min_size=1, max_size=8),
       st.floats(0, 9))
def test_robust_cost_matches_lp(pairs, gamma):
    mu = np.array([a for a, _ in pairs])
    dev = np.array([b for _, b in pairs])
    ids = list(range(len(pairs)))
    # inner max over 0 <= c <= 1, sum c <= gamma of sum mu + dev * c
    r = linprog(-dev, A_ub=[np.ones(len(ids))], b_ub=[gamma], bounds=(0, 1), method="highs")
    assert robust_cost(mu, dev, ids, gamma) == pytest.approx(mu.sum() - r.fun, abs=1e-8)


def test_budget_gamma_is_maximal():
    for inst, _, _ in small_instances(25, seed=21):
        tau = compute_target(inst, 0.2)
        res = solve_budget(inst, tau)
        mu = inst.worst_means
        dev = inst.uppers - mu
        assert res.tree.is_valid(inst.graph)
        assert robust_cost(mu, dev, res.tree.sorted_ids, res.gamma_star) <= tau + 1e-8
        trees = tree_matrix(inst.graph)
        for g in np.arange(0, inst.edge_count + 0.05, 0.1):
            feasible = min_robust_cost_over_trees(inst, g, trees) <= tau + 1e-9
            assert feasible == (g <= res.gamma_star + 1e-9)


def test_budget_fully_protected_and_unattainable():
    inst = gen_erdos_renyi(6, 0.6, 5)
    full = solve_budget(inst, compute_target(inst, 1.0))
    assert full.fully_protected and full.gamma_star == inst.edge_count
    with pytest.raises(TargetUnattainable):
        solve_budget(inst, compute_target(inst, 0.0) - 1.0)


def test_saa_matches_double_loop():
    inst = gen_erdos_renyi(5, 0.7, 6)
    tau = compute_target(inst, 0.2)
    scen = sample_weights(PiecewiseUniformSampler.from_instance(inst), 40, 3)
    tree, frac = saa_on_scenarios(inst, tau, scen)
    best = None
    for row in tree_matrix(inst.graph):
        hits = sum(1 for w in scen if sum(w[e] for e in row) <= tau)
        key = (-hits, float(inst.means[row].sum()))
        if best is None or key < best[0]:
            best = (key, tuple(row))
    assert tree.sorted_ids == best[1]
    assert frac == -best[0][0] / 40
    again, _ = solve_saa_probability(inst, tau, 40, 3)
    assert again == tree
    with pytest.raises(ValueError):
        solve_saa_probability(inst, tau, 0, 3)
