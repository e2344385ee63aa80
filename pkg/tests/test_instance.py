import json

import numpy as np
import pytest

from drmst import instance as inst_io
from drmst.instance import GenerationError, StatGen, gen_erdos_renyi
from drmst.uncertainty import Deterministic, MeanIntervalSupport, Normalized, worst_case_ce


def test_mixed_json_round_trip():
    doc = {"nodes": 3, "edges": [
        {"id": 1, "u": 1, "v": 2, "lo": 2.0, "hi": 6.0, "mean": 3.0, "mad": 0.8},
        {"id": 0, "u": 0, "v": 1, "lo": 1.0, "hi": 1.0, "mean": 1.0},
        {"id": 2, "u": 0, "v": 2, "lo": 1.0, "hi": 5.0, "mean_lo": 2.0, "mean_hi": 3.0},
        {"id": 3, "u": 0, "v": 2, "lo": 0.0, "hi": 2.0, "mean": 0.5, "var": 0.2},
    ]}
    with pytest.raises(ValueError):
        inst_io.from_json_dict(doc)  # parallel edge
    doc["nodes"] = 4
    doc["edges"][3]["v"] = 3
    inst = inst_io.from_json_dict(doc)
    assert isinstance(inst.unc[0], Deterministic)
    assert isinstance(inst.unc[1], Normalized) and isinstance(inst.unc[2], MeanIntervalSupport)
    back = inst_io.from_json_dict(json.loads(inst_io.dumps(inst)))
    for a, b in zip(inst.unc, back.unc):
        assert worst_case_ce(a, 1.7) == pytest.approx(worst_case_ce(b, 1.7), rel=1e-12)


def test_bad_documents():
    with pytest.raises(ValueError):
        inst_io.from_json_dict({"edges": []})
    with pytest.raises(ValueError):
        inst_io.from_json_dict({"nodes": 2, "edges": [{"id": 3, "u": 0, "v": 1, "lo": 0, "hi": 1, "mean": 0.5}]})
    with pytest.raises(ValueError):
        inst_io.from_json_dict({"nodes": 2, "edges": [{"id": 0, "u": 0, "v": 1, "lo": 1, "hi": 1, "mean": 2}]})


@pytest.mark.parametrize("name", ["uniform-bounds", "mean-centered"])
def test_generator_policies(name):
    inst = gen_erdos_renyi(12, 0.4, 3, StatGen(name=name))
    assert (inst.lowers < inst.means).all() and (inst.means < inst.uppers).all()
    again = gen_erdos_renyi(12, 0.4, 3, StatGen(name=name))
    assert inst_io.dumps(inst) == inst_io.dumps(again)


def test_generator_errors():
    with pytest.raises(GenerationError):
        gen_erdos_renyi(6, 0.01, 0, max_attempts=5)
    with pytest.raises(ValueError):
        StatGen(name="gaussian")
    with pytest.raises(ValueError):
        gen_erdos_renyi(1, 0.5, 0)


def test_weight_scale_is_mean_width():
    inst = gen_erdos_renyi(8, 0.5, 1)
    assert inst.weight_scale == pytest.approx(float(np.mean(inst.uppers - inst.lowers)))
