"""Enumeration of all metric-feasible simple paths of a commodity.

Labels are expanded node by node from a FIFO work set; a label is only
created when the extended path stays simple and within every weight limit.
With ``prune=True`` the per-metric shortest distance to the sink is added to
the feasibility test, so labels that cannot reach the sink are never built.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import EPS, Instance, Path

DEFAULT_LABEL_CAP = 50_000_000


class EnumerationLimitError(RuntimeError):
    """Raised when enumeration exceeds its live-label cap."""


class Label:
    """Partial path ``s^k -> node`` with its cost and weight totals."""

    __slots__ = ("node", "cost", "weights", "pred", "arc_in", "visited", "marked", "seq", "mask")

    def __init__(self, node, cost, weights, pred=None, arc_in=None, visited=0, seq=0, mask=0):
        self.node = node
        self.cost = cost
        self.weights = weights
        self.pred = pred
        self.arc_in = arc_in
        # bitset of nodes on the path; the O(1) simplicity test
        self.visited = visited
        self.marked = False
        self.seq = seq
        self.mask = mask

    def arcs(self) -> tuple[int, ...]:
        out = []
        lab = self
        while lab.arc_in is not None:
            out.append(lab.arc_in)
            lab = lab.pred
        return tuple(reversed(out))

    def __repr__(self):
        return f"Label(node={self.node}, cost={self.cost}, weights={self.weights})"


def sink_bounds(inst: Instance, k: int, forbidden=()) -> np.ndarray:
    """Shortest distance from every node to ``t^k`` under each metric.

    Returns an array ``d[node, metric]``; unreachable nodes get ``inf``.
    """
    n, M = inst.num_nodes, inst.num_metrics
    t = inst.commodities[k][1]
    d = np.full((n, M), math.inf)
    banned = set(forbidden)
    w = inst.weights[k]
    for m in range(M):
        dist = [math.inf] * n
        dist[t] = 0.0
        heap = [(0.0, t)]
        while heap:
            dv, v = heapq.heappop(heap)
            if dv > dist[v]:
                continue
            for a in inst.in_arcs[v]:
                if a in banned:
                    continue
                u = inst.arcs[a][0]
                nd = dv + w[a, m]
                if nd < dist[u]:
                    dist[u] = nd
                    heapq.heappush(heap, (nd, u))
        d[:, m] = dist
    return d


def _reachable_to(inst: Instance, t: int) -> list[bool]:
    seen = [False] * inst.num_nodes
    seen[t] = True
    stack = [t]
    while stack:
        v = stack.pop()
        for a in inst.in_arcs[v]:
            u = inst.arcs[a][0]
            if not seen[u]:
                seen[u] = True
                stack.append(u)
    return seen


def label_to_path(inst: Instance, k: int, lab: Label) -> Path:
    return Path(k, lab.arcs(), float(lab.cost), tuple(float(x) for x in lab.weights))


def enumerate_feasible_paths(
    inst: Instance, k: int, prune: bool = True, label_cap: int = DEFAULT_LABEL_CAP
) -> list[Path]:
    """All simple ``s^k -> t^k`` paths within the weight limits of ``k``.

    Paths are returned sorted by their arc-id sequence.

    Raises:
        EnumerationLimitError: when more than ``label_cap`` labels are created.
    """
    s, t = inst.commodities[k]
    M = inst.num_metrics
    W = tuple(float(x) for x in inst.limits[k])
    cost = inst.flow_cost[k].tolist()
    wk = [tuple(row) for row in inst.weights[k].tolist()]
    heads = [v for _, v in inst.arcs]
    if prune:
        dist = [tuple(row) for row in sink_bounds(inst, k).tolist()]
        if M == 0:
            ok = _reachable_to(inst, t)
            dist = [() if ok[v] else None for v in range(inst.num_nodes)]
    else:
        dist = None
    if s == t:
        return []

    root = Label(s, 0.0, (0.0,) * M, visited=1 << s)
    unmarked: list[list[Label]] = [[] for _ in range(inst.num_nodes)]
    unmarked[s].append(root)
    in_T = [False] * inst.num_nodes
    T = deque([s])
    in_T[s] = True
    at_sink: list[Label] = []
    created = 1
    out_arcs = inst.out_arcs

    while T:
        u = T.popleft()
        in_T[u] = False
        batch, unmarked[u] = unmarked[u], []
        for lab in batch:
            lab.marked = True
            w0 = lab.weights
            for a in out_arcs[u]:
                v = heads[a]
                bit = 1 << v
                if lab.visited & bit:
                    continue
                wa = wk[a]
                nw = tuple(w0[m] + wa[m] for m in range(M))
                if dist is not None:
                    dv = dist[v]
                    if dv is None:
                        continue
                    if any(nw[m] + dv[m] > W[m] + EPS for m in range(M)):
                        continue
                elif any(nw[m] > W[m] + EPS for m in range(M)):
                    continue
                new = Label(v, lab.cost + cost[a], nw, lab, a, lab.visited | bit)
                created += 1
                if created > label_cap:
                    raise EnumerationLimitError(
                        f"commodity {k}: more than {label_cap} labels; use column generation"
                    )
                if v == t:
                    at_sink.append(new)
                else:
                    unmarked[v].append(new)
                    if not in_T[v]:
                        in_T[v] = True
                        T.append(v)

    paths = [label_to_path(inst, k, lab) for lab in at_sink]
    paths.sort(key=lambda p: p.arcs)
    return paths


@dataclass
class PathCounts:
    per_commodity: list[int]

    @property
    def total(self) -> int:
        return sum(self.per_commodity)


def enumerate_all(inst: Instance, prune: bool = True, label_cap: int = DEFAULT_LABEL_CAP) -> list[list[Path]]:
    return [enumerate_feasible_paths(inst, k, prune, label_cap) for k in range(inst.num_commodities)]


def count_all_paths(inst: Instance, prune: bool = True, label_cap: int = DEFAULT_LABEL_CAP) -> PathCounts:
    return PathCounts([len(p) for p in enumerate_all(inst, prune, label_cap)])
