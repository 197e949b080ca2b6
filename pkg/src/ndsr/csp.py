"""Budget-constrained shortest path by labeling with dominance.

This is both the feasibility validator and the pricing oracle. Branching
decisions reach it only as ``forbidden_arcs`` and cuts only as modified
``arc_costs``; the algorithm itself never changes.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import EPS, Instance, Path
from .enumerate import Label, label_to_path, sink_bounds

#: Dual-adjusted costs below this are treated as a caller bug, not rounding.
NEGATIVE_COST_TOL = 1e-7


@dataclass
class CspQuery:
    """One constrained shortest path request for commodity ``k``.

    ``arc_costs`` defaults to the flow costs of ``k`` and ``limits`` to
    ``W^k``. ``required_arcs`` (at most a handful) must all lie on the
    returned path; it is used by relationship detection.
    """

    k: int
    arc_costs: Optional[Sequence[float]] = None
    forbidden_arcs: frozenset = field(default_factory=frozenset)
    limits: Optional[Sequence[float]] = None
    required_arcs: tuple = ()
    cost_cutoff: float = float("inf")
    dominance: bool = True


class NodeMismatchError(ValueError):
    pass


def dominates(l1: Label, l2: Label) -> bool:
    """True when ``l1`` dominates ``l2`` at the same node.

    Identical labels are ordered by creation sequence so exactly one of the
    two survives.
    """
    if l1.node != l2.node:
        raise NodeMismatchError(f"labels at nodes {l1.node} and {l2.node}")
    if l1.cost > l2.cost or (l1.mask & l2.mask) != l2.mask:
        return False
    strict = l1.cost < l2.cost or l1.mask != l2.mask
    for a, b in zip(l1.weights, l2.weights):
        if a > b:
            return False
        if a < b:
            strict = True
    return strict or l1.seq < l2.seq


def _weakly_dominates(l1: Label, l2: Label) -> bool:
    if l1.cost > l2.cost or (l1.mask & l2.mask) != l2.mask:
        return False
    for a, b in zip(l1.weights, l2.weights):
        if a > b:
            return False
    return True


def constrained_shortest_path(inst: Instance, q: CspQuery) -> Optional[Path]:
    """Minimum-cost feasible simple path for ``q.k``, or ``None``.

    Ties between optimal paths are broken by the lexicographically smallest
    arc-id sequence among the surviving sink labels.
    """
    k = q.k
    s, t = inst.commodities[k]
    if s == t:
        return None
    M = inst.num_metrics
    W = tuple(float(x) for x in (inst.limits[k] if q.limits is None else q.limits))
    if q.arc_costs is None:
        cost = inst.flow_cost[k].tolist()
    else:
        arr = np.asarray(q.arc_costs, dtype=float)
        if arr.size and arr.min() < -NEGATIVE_COST_TOL:
            raise ValueError(f"negative arc cost {arr.min()} in pricing query")
        cost = np.maximum(arr, 0.0).tolist()
    wk = [tuple(row) for row in inst.weights[k].tolist()]
    heads = [v for _, v in inst.arcs]
    forbidden = q.forbidden_arcs
    req_bit = {a: 1 << i for i, a in enumerate(q.required_arcs)}
    full_mask = (1 << len(q.required_arcs)) - 1
    if any(a in forbidden for a in q.required_arcs):
        return None

    if M:
        dist = [tuple(r) for r in sink_bounds(inst, k, forbidden).tolist()]
    else:
        dist = None
    cutoff = q.cost_cutoff

    seq = 0
    root = Label(s, 0.0, (0.0,) * M, visited=1 << s, seq=seq)
    bucket: list[list[Label]] = [[] for _ in range(inst.num_nodes)]
    keys: list[list[float]] = [[] for _ in range(inst.num_nodes)]
    bucket[s].append(root)
    keys[s].append(0.0)
    unmarked: list[list[Label]] = [[] for _ in range(inst.num_nodes)]
    unmarked[s].append(root)
    in_T = [False] * inst.num_nodes
    T = deque([s])
    in_T[s] = True
    # cost/weight dominance ignores which required arcs a prefix may still
    # reach, so required-arc queries search exhaustively
    use_dom = q.dominance and not q.required_arcs

    while T:
        u = T.popleft()
        in_T[u] = False
        batch, unmarked[u] = unmarked[u], []
        for lab in batch:
            if lab.marked:
                continue
            lab.marked = True
            w0 = lab.weights
            for a in inst.out_arcs[u]:
                if a in forbidden:
                    continue
                v = heads[a]
                bit = 1 << v
                if lab.visited & bit:
                    continue
                wa = wk[a]
                nw = tuple(w0[m] + wa[m] for m in range(M))
                if dist is not None:
                    dv = dist[v]
                    if any(nw[m] + dv[m] > W[m] + EPS for m in range(M)):
                        continue
                nc = lab.cost + cost[a]
                if nc >= cutoff:
                    continue
                seq += 1
                new = Label(v, nc, nw, lab, a, lab.visited | bit, seq, lab.mask | req_bit.get(a, 0))
                bl, kl = bucket[v], keys[v]
                if use_dom:
                    pos = bisect_right(kl, nc)
                    dominated = False
                    for i in range(pos):
                        if _weakly_dominates(bl[i], new):
                            dominated = True
                            break
                    if dominated:
                        continue
                    kill = [i for i in range(len(bl)) if kl[i] >= nc and _weakly_dominates(new, bl[i])]
                    if kill:
                        for i in kill:
                            bl[i].marked = True
                        dead = set(kill)
                        bl[:] = [x for i, x in enumerate(bl) if i not in dead]
                        kl[:] = [x for i, x in enumerate(kl) if i not in dead]
                        pos = bisect_right(kl, nc)
                    bl.insert(pos, new)
                    kl.insert(pos, nc)
                else:
                    bl.append(new)
                if v != t:
                    unmarked[v].append(new)
                    if not in_T[v]:
                        in_T[v] = True
                        T.append(v)

    best = None
    for lab in bucket[t]:
        if lab.mask != full_mask or lab.marked:
            continue
        if best is None or lab.cost < best.cost - 1e-12:
            best = lab
        elif abs(lab.cost - best.cost) <= 1e-12 and lab.arcs() < best.arcs():
            best = lab
    if best is None:
        return None
    path = label_to_path(inst, k, best)
    if q.arc_costs is not None:
        # cost field always carries the true flow cost
        path = Path(k, path.arcs, float(inst.flow_cost[k, list(path.arcs)].sum()), path.weight_total)
    return path


def path_value(costs: Sequence[float], arcs: Sequence[int]) -> float:
    return float(sum(costs[a] for a in arcs))
