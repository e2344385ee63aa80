import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drmst.experiments import (
    ExperimentConfig,
    aggregate_columns,
    evaluate_tree,
    row_columns,
    run_sweep,
    to_csv,
)


def test_no_failures():
    m = evaluate_tree([0, 1], np.array([[1.0, 2.0], [0.5, 0.5]]), 10.0)
    assert m.failure_probability == 0 and m.el == 0 and m.cel == 0 and m.no_failures


def test_two_sample_hand_computation():
    tau = 5.0
    samples = np.array([[tau - 1.0], [tau + 1.0]])
    m = evaluate_tree([0], samples, tau)
    assert (m.failure_probability, m.el, m.cel) == (0.5, 0.5, 1.0)
    assert not m.no_failures


def test_var_is_order_statistic():
    rng = np.random.default_rng(0)
    samples = rng.normal(size=(10_000, 3))
    m = evaluate_tree([0, 2], samples, 0.0)
    cost = sorted(samples[:, 0] + samples[:, 2])
    assert m.var[0.95] == cost[9500 - 1]
    assert m.var[0.99] == cost[9900 - 1]
    assert m.sample_count == 10_000


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=60), st.floats(-50, 50))
def test_metric_invariants(costs, tau):
    m = evaluate_tree([0], np.array(costs)[:, None], tau)
    assert 0 <= m.failure_probability <= 1
    assert m.el >= 0
    assert m.var[0.99] >= m.var[0.95]
    if m.failure_probability > 0:
        assert m.cel >= m.el - 1e-9
        assert m.el == pytest.approx(m.failure_probability * m.cel, rel=1e-9, abs=1e-12)


def test_empty_samples_rejected():
    with pytest.raises(ValueError):
        evaluate_tree([0], np.zeros((0, 1)), 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(nodes=[5], p=0.5, seeds=[1, 1])
    with pytest.raises(ValueError):
        ExperimentConfig(nodes=[5], p=0.5, seeds=[1], criteria=["fastest"])
    cfg = ExperimentConfig.from_json('{"nodes": 6, "p": 0.5, "seeds": [1, 2], "beta": 0.3}')
    assert cfg.nodes == [6] and cfg.betas == [0.3]
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


def small_cfg(**kw):
    base = dict(nodes=[7], p=0.6, seeds=[0, 1, 2], betas=[0.2], samples=500)
    base.update(kw)
    return ExperimentConfig(**base)


def test_rv_only_ratios_are_one():
    cfg = small_cfg(criteria=["rv"])
    _, agg = run_sweep(cfg)
    for rec in agg:
        assert all(rec[k] == 1.0 for k in rec if k.endswith("_ratio"))


def test_rows_shared_samples_and_determinism():
    cfg = small_cfg(criteria=["mean", "budget", "rv", "rv_exhaustive", "saa"], saa_samples=50)
    rows, agg = run_sweep(cfg)
    assert len(rows) == 3 * 5
    assert [r["instance_seed"] for r in rows] == [0] * 5 + [1] * 5 + [2] * 5
    by = {(r["instance_seed"], r["criterion"]): r for r in rows}
    for s in cfg.seeds:
        # identical trees evaluated on the shared matrix give identical metrics
        a, b = by[(s, "rv")], by[(s, "rv_exhaustive")]
        if a["tree"] == b["tree"]:
            assert a["EL"] == b["EL"] and a["VaR95"] == b["VaR95"]
    again, agg2 = run_sweep(cfg)
    assert to_csv(rows, row_columns(cfg)) == to_csv(again, row_columns(cfg))
    assert to_csv(agg, aggregate_columns(cfg)) == to_csv(agg2, aggregate_columns(cfg))


def test_csv_header_and_blank_timing():
    cfg = small_cfg(criteria=["rv"])
    rows, _ = run_sweep(cfg)
    text = to_csv(rows, row_columns(cfg))
    assert text.splitlines()[0] == ("instance_seed,n,p,beta,criterion,status,rv_alpha,tree_mean_cost,"
                                    "mean,stdev,failure_prob,EL,CEL,VaR95,VaR99,iterations,prim_calls,wall_ms")
    assert all(line.endswith(",") for line in text.splitlines()[1:])
    timed, _ = run_sweep(small_cfg(criteria=["rv"], timing=True))
    assert all(r["wall_ms"] >= 0 for r in timed)


def test_error_rows_do_not_stop_the_sweep():
    # at p = 0.02 no connected draw exists, so every instance errors
    cfg = ExperimentConfig(nodes=[6], p=0.02, seeds=[0, 1], criteria=["rv"], samples=10)
    rows, agg = run_sweep(cfg)
    assert all(r["status"].startswith("error") for r in rows)
    assert agg[0]["errors"] == 2 and agg[0]["mean"] is None


def test_thread_count_does_not_change_output(monkeypatch):
    cfg = small_cfg(criteria=["mean", "rv"])
    monkeypatch.setenv("DRMST_THREADS", "1")
    one = to_csv(run_sweep(cfg)[0], row_columns(cfg))
    monkeypatch.setenv("DRMST_THREADS", "4")
    assert to_csv(run_sweep(cfg)[0], row_columns(cfg)) == one
