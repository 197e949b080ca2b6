import networkx as nx
import numpy as np
import pytest

from ndsr.arcflow import arcflow_violation, build, build_and_solve, lift_path_solution, objective
from ndsr.colgen import build_initial_master, solve_lp_by_colgen
from ndsr.core import Instance
from toys import feasible_toys, random_toy


def test_figure1(fig1):
    res = build_and_solve(fig1)
    assert res.value == pytest.approx(0.5)
    assert res.y[0] == pytest.approx([0.5, 0.5, 0.5])


def test_figure2(fig2):
    assert build_and_solve(fig2).value <= 1.5 + 1e-6


def test_structure(fig1):
    af = build(fig1)
    V, A, K, M = 3, 3, 1, 1
    assert af.model.num_cols == A + K * A
    assert af.model.num_rows == K * V + K * M + K * A
    assert all(af.model.sense[r] == "=" for r in af.flow_row.ravel())
    assert all(af.model.sense[r] == "<=" for r in af.link_row.ravel())
    assert all(af.model.ub[j] == 1 for j in range(af.model.num_cols))


def test_single_commodity_no_metrics_is_shortest_path():
    checked = 0
    for seed in range(40):
        inst = random_toy(seed, metrics=0, max_commodities=1)
        if inst.num_commodities != 1:
            continue
        s, t = inst.commodities[0]
        g = nx.DiGraph()
        g.add_nodes_from(range(inst.num_nodes))
        for a, (u, v) in enumerate(inst.arcs):
            g.add_edge(u, v, weight=float(inst.activation_cost[a] + inst.flow_cost[0, a]))
        try:
            d = nx.shortest_path_length(g, s, t, weight="weight")
        except nx.NetworkXNoPath:
            continue
        assert build_and_solve(inst).value == pytest.approx(d, abs=1e-6)
        checked += 1
    assert checked >= 10


def test_lifted_path_solution_is_feasible_with_same_cost():
    for inst in feasible_toys(15, max_nodes=9, max_commodities=4):
        m = build_initial_master(inst)
        res = solve_lp_by_colgen(m)
        x = m.x_values(res.solution)
        z = m.z_values(res.solution)
        y = lift_path_solution(inst, m.paths, x)
        assert arcflow_violation(inst, z, y) <= 1e-6
        assert objective(inst, z, y) == pytest.approx(res.value, abs=1e-6)


def test_arcflow_lp_below_path_lp_on_toys():
    for inst in feasible_toys(20, max_nodes=10, max_commodities=5):
        path_lp = solve_lp_by_colgen(build_initial_master(inst)).value
        assert build_and_solve(inst).value <= path_lp + 1e-6


def test_infeasible_instance():
    inst = Instance(2, ((1, 0),), np.zeros(1), ((0, 1),), 0, np.zeros((1, 1)), np.zeros((1, 1, 0)), np.zeros((1, 0)))
    assert build_and_solve(inst).value == np.inf
