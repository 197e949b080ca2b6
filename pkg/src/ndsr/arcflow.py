"""Linear relaxation of the arc-flow formulation.

Variables ``z_a`` and ``y_a^k`` in ``[0, 1]``; rows are flow conservation per
``(node, commodity)``, one metric budget per ``(commodity, metric)`` and the
linking rows ``y_a^k - z_a <= 0``.  Only the relaxation is built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Instance
from .lp import LpModel, Status, get_engine


class ArcFlowError(RuntimeError):
    pass


@dataclass
class ArcFlowLp:
    model: LpModel
    z_col: list[int]
    y_col: np.ndarray  # (K, A) column index of y_a^k
    flow_row: np.ndarray  # (K, V)
    metric_row: np.ndarray  # (K, M)
    link_row: np.ndarray  # (K, A)


@dataclass
class ArcFlowResult:
    status: Status
    value: float
    z: np.ndarray
    y: np.ndarray  # (K, A)


def build(inst: Instance) -> ArcFlowLp:
    lp = LpModel()
    A, K, V, M = inst.num_arcs, inst.num_commodities, inst.num_nodes, inst.num_metrics
    z_col = [lp.add_column(float(inst.activation_cost[a]), 0.0, 1.0, name=f"z{a}") for a in range(A)]
    y_col = np.zeros((K, A), dtype=int)
    for k in range(K):
        for a in range(A):
            y_col[k, a] = lp.add_column(float(inst.flow_cost[k, a]), 0.0, 1.0, name=f"y{a}_{k}")

    flow_row = np.zeros((K, V), dtype=int)
    metric_row = np.zeros((K, M), dtype=int)
    link_row = np.zeros((K, A), dtype=int)
    for k, (s, t) in enumerate(inst.commodities):
        for v in range(V):
            coefs = {int(y_col[k, a]): 1.0 for a in inst.out_arcs[v]}
            for a in inst.in_arcs[v]:
                coefs[int(y_col[k, a])] = -1.0
            rhs = 1.0 if v == s else -1.0 if v == t else 0.0
            flow_row[k, v] = lp.add_row("=", rhs, coefs, name=f"flow{v}_{k}")
        for m in range(M):
            coefs = {int(y_col[k, a]): float(inst.weights[k, a, m]) for a in range(A) if inst.weights[k, a, m]}
            metric_row[k, m] = lp.add_row("<=", float(inst.limits[k, m]), coefs, name=f"metric{k}_{m}")
        for a in range(A):
            link_row[k, a] = lp.add_row("<=", 0.0, {int(y_col[k, a]): 1.0, z_col[a]: -1.0}, name=f"link{a}_{k}")
    return ArcFlowLp(lp, z_col, y_col, flow_row, metric_row, link_row)


def build_and_solve(inst: Instance, engine: str = "builtin") -> ArcFlowResult:
    """Optimal value of the arc-flow relaxation.

    Raises:
        ArcFlowError: if the engine stops for any reason other than
            optimality or infeasibility.
    """
    af = build(inst)
    sol = get_engine(engine).solve(af.model)
    if sol.status is Status.INFEASIBLE:
        return ArcFlowResult(sol.status, np.inf, np.zeros(inst.num_arcs), np.zeros(af.y_col.shape))
    if sol.status is not Status.OPTIMAL:
        raise ArcFlowError(f"arc-flow LP ended with status {sol.status.value}")
    z = sol.primal[af.z_col]
    y = sol.primal[af.y_col] if af.y_col.size else np.zeros(af.y_col.shape)
    return ArcFlowResult(sol.status, float(sol.objective), z, y)


def lift_path_solution(inst: Instance, paths, x) -> np.ndarray:
    """Arc flows ``y_a^k = sum of x_p over paths p of k through a``."""
    y = np.zeros((inst.num_commodities, inst.num_arcs))
    for p, v in zip(paths, x):
        for a in p.arcs:
            y[p.commodity, a] += float(v)
    return y


def arcflow_violation(inst: Instance, z, y) -> float:
    """Largest constraint violation of ``(z, y)`` in the arc-flow relaxation."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    worst = 0.0
    worst = max(worst, float(np.max(-z, initial=0.0)), float(np.max(z - 1, initial=0.0)))
    worst = max(worst, float(np.max(-y, initial=0.0)), float(np.max(y - 1, initial=0.0)))
    for k, (s, t) in enumerate(inst.commodities):
        for v in range(inst.num_nodes):
            net = sum(y[k, a] for a in inst.out_arcs[v]) - sum(y[k, a] for a in inst.in_arcs[v])
            rhs = 1.0 if v == s else -1.0 if v == t else 0.0
            worst = max(worst, abs(net - rhs))
        for m in range(inst.num_metrics):
            worst = max(worst, float(inst.weights[k, :, m] @ y[k]) - float(inst.limits[k, m]))
        worst = max(worst, float(np.max(y[k] - z, initial=0.0)))
    return worst


def objective(inst: Instance, z, y) -> float:
    return float(np.dot(inst.activation_cost, z) + np.sum(inst.flow_cost * np.asarray(y)))
