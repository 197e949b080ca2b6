import json
import math

import numpy as np
import pytest

from ndsr.bnp import (
    BnpNode,
    Params,
    check_integral_x,
    rel_gap,
    select_branch_variable,
    solve,
)
from ndsr.colgen import MasterModel, build_initial_master, solve_lp_by_colgen
from ndsr.core import Instance, make_path, path_metrics
from ndsr.enumerate import EnumerationLimitError
from ndsr.fixtures import ARC_36
from ndsr.lp import LpSolution, Status
from ndsr.oracles import exact_toy_solver
from toys import feasible_toys, triangle_gadget


@pytest.mark.parametrize("mode", ["allpath", "bnp", "bcp"])
def test_figure1(fig1, mode):
    res = solve(fig1, mode)
    assert res.status == "optimal"
    assert res.value == pytest.approx(1.0)
    assert res.incumbent.open_arcs == (1,)


@pytest.mark.parametrize("mode", ["allpath", "bnp", "bcp"])
def test_figure2(fig2, mode):
    res = solve(fig2, mode)
    assert res.status == "optimal"
    assert res.value == pytest.approx(2.0)
    assert res.gap == 0


def test_matches_exact_solver():
    for inst in feasible_toys(15, start=300, max_nodes=10, max_commodities=4):
        ref, _ = exact_toy_solver(inst)
        for mode in ("allpath", "bnp", "bcp"):
            res = solve(inst, mode)
            assert res.status == "optimal"
            assert res.value == pytest.approx(ref, abs=1e-6), (inst.name, mode)


def test_gadgets_match_exact_solver():
    for seed in range(15):
        inst = triangle_gadget(seed)
        ref, _ = exact_toy_solver(inst)
        for mode in ("bnp", "bcp"):
            res = solve(inst, mode)
            assert res.value == pytest.approx(ref, abs=1e-6)
            assert res.stats.bound_decreases == 0
            assert res.stats.integral_x_anomalies == 0


def test_select_branch_variable(fig2):
    assert select_branch_variable(np.array([0.0, 1.0, 1.0]), np.ones(3)) is None
    assert select_branch_variable(np.array([0.2, 0.7]), np.array([5.0, 5.0])) == 1
    assert select_branch_variable(np.array([0.5, 0.5]), np.array([1.0, 3.0])) == 1

    m = build_initial_master(fig2)
    res = solve_lp_by_colgen(m)
    z = m.z_values(res.solution)
    assert select_branch_variable(z, fig2.activation_cost) == ARC_36


def _two_path_instance():
    # s=0 -> {1,2} -> t=3, all arcs F=1, flow cost 1 per arc: two equal-cost paths
    arcs = ((0, 1), (0, 2), (1, 3), (2, 3))
    return Instance(4, arcs, np.ones(4), ((0, 3),), 0, np.ones((1, 4)), np.zeros((1, 4, 0)), np.zeros((1, 0)))


def test_check_integral_x_rounding():
    inst = _two_path_instance()
    m = MasterModel(inst)
    m.add_path(make_path(inst, 0, [0, 2]))
    m.add_path(make_path(inst, 0, [1, 3]))
    m.set_node(fixed_open={0, 1, 2, 3})
    sol = m.solve()
    # a fractional (non-vertex) optimum with the same objective
    primal = sol.primal.copy()
    primal[m.path_col] = 0.5
    obj = np.asarray(m.lp.obj)
    assert float(obj @ primal) == pytest.approx(sol.objective)
    frac = LpSolution(Status.OPTIMAL, sol.objective, primal, sol.duals)
    integral, paths = check_integral_x(m, frac)
    assert not integral
    assert len(paths) == 1
    rounded = primal.copy()
    rounded[m.path_col] = [1.0 if q is paths[0] else 0.0 for q in m.paths]
    assert float(obj @ rounded) == pytest.approx(sol.objective)


def test_check_integral_x_vertex(fig1):
    m = build_initial_master(fig1)
    res = solve_lp_by_colgen(m)
    integral, paths = check_integral_x(m, res.solution)
    assert integral and paths[0].arcs == (1,)


def test_incumbent_revalidated():
    for inst in feasible_toys(10, start=50, max_nodes=9, max_commodities=4):
        res = solve(inst, "bnp")
        inc = res.incumbent
        opened = set()
        total = 0.0
        for k, p in enumerate(inc.paths):
            cost, _, ok = path_metrics(inst, k, p.arcs)
            assert ok
            total += cost
            opened |= set(p.arcs)
        total += sum(inst.activation_cost[a] for a in opened)
        assert total == pytest.approx(res.value)
        assert res.bound <= res.value + 1e-9 and res.gap >= 0


def test_gap_limit_honest():
    for inst in feasible_toys(10, start=400, max_nodes=10, max_commodities=5):
        ref, _ = exact_toy_solver(inst)
        res = solve(inst, "bnp", Params(gap_limit=0.1))
        if res.status == "optimal" and res.value > 0:
            assert 100 * (res.value - ref) / res.value <= 0.1 + 1e-9
        assert res.bound <= ref + 1e-6


def test_time_limit_status(fig2):
    res = solve(fig2, "bnp", Params(time_limit=1e-9))
    assert res.status == "time-limit"
    assert res.bound <= res.value or math.isinf(res.value)


def test_node_limit(fig2):
    res = solve(fig2, "bnp", Params(node_limit=1))
    assert res.status == "time-limit"
    assert res.bound == pytest.approx(1.5)
    assert res.value == pytest.approx(2.0)
    assert res.gap == pytest.approx(25.0)


def test_infeasible_instance():
    inst = Instance(2, ((1, 0),), np.zeros(1), ((0, 1),), 0, np.zeros((1, 1)), np.zeros((1, 1, 0)), np.zeros((1, 0)))
    assert solve(inst, "bnp").status == "infeasible"


def test_enumeration_cap(fig2):
    with pytest.raises(EnumerationLimitError):
        solve(fig2, "allpath", Params(label_cap=2))


def test_bad_mode(fig1):
    with pytest.raises(ValueError):
        solve(fig1, "dfs")


def test_node_invariant():
    with pytest.raises(ValueError):
        BnpNode(frozenset({1}), frozenset({1}), 0.0)


def test_branch_closed_arcs_have_zero_bounds(fig2):
    m = build_initial_master(fig2)
    solve_lp_by_colgen(m)
    m.set_node(fixed_closed={ARC_36})
    for idx, p in enumerate(m.paths):
        if ARC_36 in p.arcs:
            assert not m.active(idx)
    assert m.lp.ub[m.z_col[ARC_36]] == 0


def test_report_json(fig2):
    res = solve(fig2, "bcp")
    doc = json.loads(json.dumps(res.to_dict()))
    assert doc["opt"] is True and doc["value"] == 2.0
    assert doc["stats"]["cuts"] == 1
    assert len(doc["cuts"]) == 1


def test_rel_gap():
    assert rel_gap(2.0, 1.5) == pytest.approx(25.0)
    assert rel_gap(0.0, 0.0) == 0.0
    assert math.isinf(rel_gap(math.inf, 0.0))
