import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndsr.core import (
    BrokenChainError,
    DimensionError,
    Instance,
    InstanceError,
    NegativeValueError,
    ParseError,
    instance_to_dict,
    load_instance,
    loads_instance,
    path_metrics,
    save_instance,
    validate_instance,
)
from ndsr.gen import ScenarioSpec, generate
from ndsr.oracles import dfs_enumerate
from toys import random_toy


def test_figure1_document_loads(fig1):
    doc = save_instance(fig1)
    inst = loads_instance(doc)
    assert inst.num_nodes == 3 and inst.num_arcs == 3 and inst.num_commodities == 1
    assert inst.num_metrics == 1
    assert list(inst.activation_cost) == [0, 1, 0]
    assert list(inst.weights[0, :, 0]) == [2, 1, 1]
    assert inst.limits[0, 0] == 2
    assert inst == fig1


def test_minimal_instance():
    doc = {
        "name": "minimal",
        "num_nodes": 2,
        "num_metrics": 0,
        "arcs": [{"tail": 0, "head": 1, "F": 0}],
        "commodities": [{"source": 0, "sink": 1, "W": []}],
        "flow_costs": {"shared": True, "c": [0]},
        "weights": {"shared": True, "w": [[]]},
    }
    inst = load_instance(json.dumps(doc).encode())
    assert inst.num_arcs == 1
    assert validate_instance(inst).ok


def test_empty_commodity_list():
    inst = Instance(2, ((0, 1),), np.zeros(1), (), 0, np.zeros((0, 1)), np.zeros((0, 1, 0)), np.zeros((0, 0)))
    doc = json.loads(save_instance(inst))
    assert doc["commodities"] == []
    assert loads_instance(save_instance(inst)) == inst


def test_golden_file_round_trip(golden_path):
    with open(golden_path, "rb") as fh:
        raw = fh.read()
    inst = load_instance(raw)
    assert save_instance(inst).encode() == raw


def test_generator_matches_golden(golden_path):
    inst = generate(ScenarioSpec.from_levels(30, 120, 90, "MMMM", 1))
    with open(golden_path) as fh:
        assert save_instance(inst) == fh.read()


def test_save_to_stream(fig1):
    buf = io.StringIO()
    text = save_instance(fig1, buf)
    assert buf.getvalue() == text


@pytest.mark.parametrize(
    "mutate, err",
    [
        (lambda d: d.pop("arcs"), ParseError),
        (lambda d: d["arcs"].append({"tail": 0, "head": 9, "F": 1}), DimensionError),
        (lambda d: d["arcs"][0].update(F=-1), NegativeValueError),
        (lambda d: d["commodities"][0].update(W=[1, 2]), DimensionError),
    ],
)
def test_load_errors(fig1, mutate, err):
    doc = instance_to_dict(fig1)
    mutate(doc)
    with pytest.raises(err):
        load_instance(json.dumps(doc).encode())


def test_malformed_json():
    with pytest.raises(InstanceError):
        load_instance(b"{not json")


def test_path_metrics_figure1(fig1):
    assert path_metrics(fig1, 0, [1]) == (0.0, (1.0,), True)
    cost, w, ok = path_metrics(fig1, 0, [0, 2])
    assert w == (3.0,) and not ok


def test_path_metrics_broken_chain(fig1):
    with pytest.raises(BrokenChainError):
        path_metrics(fig1, 0, [2])
    with pytest.raises(BrokenChainError):
        path_metrics(fig1, 0, [0])


def test_path_metrics_no_metrics(fig2):
    assert path_metrics(fig2, 0, [0, 12, 6])[2]


def test_validate_figure1(fig1):
    assert validate_instance(fig1).ok
    tight = fig1.replace(limits=np.zeros((1, 1)))
    assert validate_instance(tight).infeasible_commodities == [0]


def test_validate_unreachable_sink():
    inst = random_toy(3, max_nodes=8)
    k = 0
    t = inst.commodities[k][1]
    keep = [a for a, (u, v) in enumerate(inst.arcs) if v != t]
    cut = Instance(
        inst.num_nodes,
        tuple(inst.arcs[a] for a in keep),
        inst.activation_cost[keep],
        inst.commodities,
        inst.num_metrics,
        inst.flow_cost[:, keep],
        inst.weights[:, keep, :],
        inst.limits,
    )
    assert k in validate_instance(cut).infeasible_commodities


def test_validate_structural():
    inst = Instance(2, ((0, 0), (0, 1)), np.zeros(2), ((0, 1),), 0, np.zeros((1, 2)), np.zeros((1, 2, 0)), np.zeros((1, 0)))
    assert any("self-loop" in m for m in validate_instance(inst).structural)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_round_trip_property(seed):
    inst = random_toy(seed, shared=seed % 2 == 0)
    assert loads_instance(save_instance(inst)) == inst


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 100))
def test_path_metrics_matches_loop(seed, pick):
    inst = random_toy(seed)
    for k in range(inst.num_commodities):
        for p in dfs_enumerate(inst, k)[pick % 3 :: 3]:
            cost = sum(inst.flow_cost[k, a] for a in p.arcs)
            w = [sum(inst.weights[k, a, m] for a in p.arcs) for m in range(inst.num_metrics)]
            got = path_metrics(inst, k, p.arcs)
            assert got[0] == pytest.approx(cost)
            assert got[1] == pytest.approx(tuple(w))
            assert got[2]


def test_validate_matches_dfs():
    for seed in range(60):
        inst = random_toy(seed)
        rep = validate_instance(inst)
        assert rep.feasible == [bool(dfs_enumerate(inst, k)) for k in range(inst.num_commodities)]


def test_instance_arrays_read_only(fig1):
    with pytest.raises(ValueError):
        fig1.activation_cost[0] = 5
