"""Brute-force reference implementations used as test oracles.

Nothing here imports the labeling, LP or branch-and-price modules; the
oracles share only the instance type with the code they check.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .core import EPS, Instance, Path

DEFAULT_COMBINATION_CAP = 1_000_000


class SizeCapError(ValueError):
    pass


def dfs_enumerate(inst: Instance, k: int, forbidden=frozenset()) -> list[Path]:
    """All simple feasible ``s^k -> t^k`` paths by plain recursion."""
    s, t = inst.commodities[k]
    M = inst.num_metrics
    W = [float(x) for x in inst.limits[k]]
    found: list[Path] = []

    def rec(node, visited, arcs, cost, weights):
        if node == t:
            found.append(Path(k, tuple(arcs), cost, tuple(weights)))
            return
        for a, (u, v) in enumerate(inst.arcs):
            if u != node or v in visited or a in forbidden:
                continue
            nw = [weights[m] + float(inst.weights[k, a, m]) for m in range(M)]
            if any(nw[m] > W[m] + EPS for m in range(M)):
                continue
            visited.add(v)
            arcs.append(a)
            rec(v, visited, arcs, cost + float(inst.flow_cost[k, a]), nw)
            arcs.pop()
            visited.remove(v)

    if s != t:
        rec(s, {s}, [], 0.0, [0.0] * M)
    found.sort(key=lambda p: p.arcs)
    return found


def min_cost_path(inst: Instance, k: int, arc_costs=None, forbidden=frozenset()):
    """Cheapest feasible path by exhaustive enumeration, or ``None``."""
    costs = inst.flow_cost[k] if arc_costs is None else np.asarray(arc_costs, dtype=float)
    best = None
    best_cost = math.inf
    for p in dfs_enumerate(inst, k, forbidden):
        c = float(sum(costs[a] for a in p.arcs))
        if c < best_cost:
            best, best_cost = p, c
    return best, best_cost


def bellman_ford(num_nodes: int, arcs, lengths, source: int) -> list[float]:
    """Label-correcting single-source distances; ``inf`` when unreachable."""
    dist = [math.inf] * num_nodes
    dist[source] = 0.0
    for _ in range(num_nodes):
        changed = False
        for (u, v), w in zip(arcs, lengths):
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                changed = True
        if not changed:
            break
    return dist


def reversed_distances(inst: Instance, lengths, sink: int) -> list[float]:
    """Distance from every node to ``sink`` via Bellman-Ford on the reversed graph."""
    rev = [(v, u) for u, v in inst.arcs]
    return bellman_ford(inst.num_nodes, rev, lengths, sink)


def exact_toy_solver(inst: Instance, cap: int = DEFAULT_COMBINATION_CAP):
    """Optimal value and one optimal path choice, by search over path tuples.

    Returns ``(value, choice)`` where ``choice`` lists one Path per commodity,
    or ``(inf, None)`` when some commodity has no feasible path.
    """
    per_k = [dfs_enumerate(inst, k) for k in range(inst.num_commodities)]
    if any(not ps for ps in per_k):
        return math.inf, None
    size = math.prod(len(ps) for ps in per_k)
    if size > cap:
        raise SizeCapError(f"{size} path combinations exceed cap {cap}")
    F = [float(x) for x in inst.activation_cost]
    best = [math.inf, None]

    def rec(k, opened, cost, chosen):
        if cost >= best[0] - 1e-12:
            return
        if k == len(per_k):
            best[0], best[1] = cost, list(chosen)
            return
        for p in per_k[k]:
            new = [a for a in set(p.arcs) if a not in opened]
            add = sum(F[a] for a in new) + p.cost
            opened.update(new)
            chosen.append(p)
            rec(k + 1, opened, cost + add, chosen)
            chosen.pop()
            opened.difference_update(new)

    rec(0, set(), 0.0, [])
    return best[0], best[1]


def integer_solutions(inst: Instance, cap: int = DEFAULT_COMBINATION_CAP):
    """Yield every minimal integer solution as ``(open_arcs, choice)``.

    Only designs that open exactly the arcs used are produced; any design
    that opens more arcs is a superset of one of these.
    """
    per_k = [dfs_enumerate(inst, k) for k in range(inst.num_commodities)]
    size = math.prod(len(ps) for ps in per_k) if per_k else 1
    if size > cap:
        raise SizeCapError(f"{size} path combinations exceed cap {cap}")
    for choice in itertools.product(*per_k):
        opened = set()
        for p in choice:
            opened.update(p.arcs)
        yield frozenset(opened), choice


def lp_vertex_oracle(c, A_rows, senses, rhs, lb, ub) -> float:
    """Minimum of a small bounded LP by enumerating basic solutions.

    All variable bounds must be finite. Returns ``inf`` when infeasible.
    """
    n = len(c)
    G, h = [], []
    for row, s, b in zip(A_rows, senses, rhs):
        row = [float(x) for x in row]
        if s in ("<=", "="):
            G.append(row)
            h.append(b)
        if s in (">=", "="):
            G.append([-x for x in row])
            h.append(-b)
    for j in range(n):
        e = [0.0] * n
        e[j] = 1.0
        G.append(e)
        h.append(ub[j])
        G.append([-x for x in e])
        h.append(-lb[j])
    G = np.array(G)
    h = np.array(h, dtype=float)
    best = math.inf
    for idx in itertools.combinations(range(len(G)), n):
        sub = G[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, h[list(idx)])
        if np.all(G @ x <= h + 1e-9):
            best = min(best, float(np.dot(c, x)))
    return best
