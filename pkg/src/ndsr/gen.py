"""Random benchmark instances and service-limit scaling.

Scenario levels (L/M/H) map to numbers through ``LEVELS``.  Every
generation stage draws from its own PCG64 stream derived from the seed as
``SeedSequence(seed, spawn_key=(stage,))``, so inserting a new stage never
changes the numbers drawn by the existing ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import islice

import networkx as nx
import numpy as np

from .core import Instance

LEVELS = {
    "beta": {"L": 0.5, "M": 1.0, "H": 2.0},
    "gamma": {"L": 0.1, "M": 0.5, "H": 1.0},
    "q_avg": {"L": 3, "M": 6, "H": 12},
    "delta_q": {"L": 0, "M": 4, "H": 8},
}

NUM_METRICS = 2

# stage ids for the per-stage random streams; append only
STAGE_COORDS = 0
STAGE_TREE = 1
STAGE_AUGMENT = 2
STAGE_ACTIVATION = 3
STAGE_FLOW = 4
STAGE_WEIGHTS = 5
STAGE_COMMODITIES = 6
STAGE_RANKS = 7


class InfeasibleSpecError(ValueError):
    pass


class NoPathError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    num_nodes: int
    num_arcs: int
    num_commodities: int
    beta: str = "M"
    gamma: str = "M"
    q_avg: str = "M"
    delta_q: str = "M"
    seed: int = 0
    grid: tuple[float, float] = (100.0, 100.0)

    def __post_init__(self):
        for key in ("beta", "gamma", "q_avg", "delta_q"):
            if getattr(self, key) not in ("L", "M", "H"):
                raise InfeasibleSpecError(f"{key} level must be L, M or H")
        if self.num_nodes < 2:
            raise InfeasibleSpecError("need at least 2 nodes")
        if self.num_arcs < self.num_nodes:
            raise InfeasibleSpecError("need |A| >= |V|")
        if self.num_commodities < 0 or self.seed < 0:
            raise InfeasibleSpecError("commodity count and seed must be non-negative")

    @classmethod
    def from_levels(cls, num_nodes, num_arcs, num_commodities, levels: str, seed: int = 0, **kw) -> "ScenarioSpec":
        levels = levels.upper()
        if len(levels) != 4:
            raise InfeasibleSpecError(f"levels must be 4 letters (beta gamma Qavg dQ), got {levels!r}")
        b, g, q, d = levels
        return cls(num_nodes, num_arcs, num_commodities, b, g, q, d, seed, **kw)

    @property
    def levels(self) -> str:
        return self.beta + self.gamma + self.q_avg + self.delta_q

    @property
    def name(self) -> str:
        return f"{self.num_nodes}/{self.num_arcs}/{self.num_commodities}/{self.levels}"

    def rank_interval(self) -> tuple[int, int]:
        """Integer interval of width ``delta_q`` centred on ``q_avg``, clipped at 1."""
        q = LEVELS["q_avg"][self.q_avg]
        half = LEVELS["delta_q"][self.delta_q] // 2
        return max(1, q - half), max(1, q + half)


def _stream(seed: int, stage: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stage,))))


def _digraph(arcs, lengths) -> nx.DiGraph:
    g = nx.DiGraph()
    for (u, v), w in zip(arcs, lengths):
        g.add_edge(u, v, weight=float(w))
    return g


def _kth_path_weight(g: nx.DiGraph, s: int, t: int, q: int) -> float:
    try:
        paths = list(islice(nx.shortest_simple_paths(g, s, t, weight="weight"), q))
    except (nx.NetworkXNoPath, nx.NodeNotFound) as exc:
        raise NoPathError(f"no path {s}->{t}") from exc
    if not paths:
        raise NoPathError(f"no path {s}->{t}")
    last = paths[-1]
    return float(sum(g[u][v]["weight"] for u, v in zip(last, last[1:])))


def kth_shortest_weight(inst: Instance, k: int, m: int, q: int) -> float:
    """Length of the ``q``-th shortest simple ``s^k -> t^k`` path under metric ``m``.

    Falls back to the last path found when fewer than ``q`` simple paths exist.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    s, t = inst.commodities[k]
    g = _digraph(inst.arcs, inst.weights[k, :, m])
    g.add_nodes_from(range(inst.num_nodes))
    return _kth_path_weight(g, s, t, q)


def _build_arcs(spec: ScenarioSpec) -> list[tuple[int, int]]:
    n, A = spec.num_nodes, spec.num_arcs
    if A < 2 * (n - 1):
        raise InfeasibleSpecError(
            f"|A|={A} cannot hold the arborescence plus its reverse arcs ({2 * (n - 1)})"
        )
    if A > n * (n - 1):
        raise InfeasibleSpecError(f"|A|={A} exceeds the {n * (n - 1)} possible arcs")
    rng = _stream(spec.seed, STAGE_TREE)
    order = rng.permutation(n)
    tree = []
    for i in range(1, n):
        parent = int(order[rng.integers(0, i)])
        tree.append((parent, int(order[i])))
    arcs = set(tree)
    arcs.update((v, u) for u, v in tree)
    rng = _stream(spec.seed, STAGE_AUGMENT)
    while len(arcs) < A:
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u != v:
            arcs.add((u, v))
    return sorted(arcs)


def generate(spec: ScenarioSpec) -> Instance:
    """Generate one random instance of ``spec``; a pure function of the spec."""
    n, K = spec.num_nodes, spec.num_commodities
    coords = _stream(spec.seed, STAGE_COORDS).uniform((0.0, 0.0), spec.grid, size=(n, 2))
    arcs = _build_arcs(spec)
    A = len(arcs)

    rng = _stream(spec.seed, STAGE_ACTIVATION)
    dist = np.array([np.hypot(*(coords[u] - coords[v])) for u, v in arcs])
    F = np.round(dist * rng.uniform(0.8, 1.2, size=A))

    rng = _stream(spec.seed, STAGE_FLOW)
    gamma = LEVELS["gamma"][spec.gamma]
    c = np.round(gamma * F * rng.uniform(0.8, 1.2, size=A), 2)

    rng = _stream(spec.seed, STAGE_WEIGHTS)
    beta = LEVELS["beta"][spec.beta]
    F_max = float(F.max()) if A else 0.0
    base = beta * F_max / (1.0 + F)
    w = np.maximum(1.0, np.round(base[:, None] * rng.uniform(0.8, 1.2, size=(A, NUM_METRICS))))

    rng = _stream(spec.seed, STAGE_COMMODITIES)
    if K > n * (n - 1):
        raise InfeasibleSpecError(f"|K|={K} exceeds the number of distinct node pairs")
    pairs: list[tuple[int, int]] = []
    seen = set()
    while len(pairs) < K:
        s, t = (int(x) for x in rng.integers(0, n, size=2))
        if s != t and (s, t) not in seen:
            seen.add((s, t))
            pairs.append((s, t))

    rng = _stream(spec.seed, STAGE_RANKS)
    lo, hi = spec.rank_interval()
    graphs = [_digraph(arcs, w[:, m]) for m in range(NUM_METRICS)]
    W = np.zeros((K, NUM_METRICS))
    for k, (s, t) in enumerate(pairs):
        for m in range(NUM_METRICS):
            q = int(rng.integers(lo, hi + 1))
            W[k, m] = _kth_path_weight(graphs[m], s, t, q)

    inst = Instance(
        num_nodes=n,
        arcs=tuple(arcs),
        activation_cost=F,
        commodities=tuple(pairs),
        num_metrics=NUM_METRICS,
        flow_cost=np.broadcast_to(c, (K, A)),
        weights=np.broadcast_to(w, (K, A, NUM_METRICS)),
        limits=W,
        name=f"{spec.name}/s{spec.seed}",
    )
    return _repair_limits(inst, graphs)


def _repair_limits(inst: Instance, graphs) -> Instance:
    """Guarantee a feasible path per commodity.

    Limits come from each metric separately, so no single path need satisfy
    all of them; when that happens the limits are raised to the weights of
    the shortest path under the first metric.
    """
    from .csp import CspQuery, constrained_shortest_path

    zero = np.zeros(inst.num_arcs)
    W = inst.limits.copy()
    changed = False
    for k, (s, t) in enumerate(inst.commodities):
        if constrained_shortest_path(inst, CspQuery(k, arc_costs=zero)) is not None:
            continue
        nodes = nx.shortest_path(graphs[0], s, t, weight="weight")
        arc_id = {a: i for i, a in enumerate(inst.arcs)}
        ids = [arc_id[(u, v)] for u, v in zip(nodes, nodes[1:])]
        W[k] = np.maximum(W[k], inst.weights[k, ids, :].sum(axis=0))
        changed = True
    return inst.replace(limits=W) if changed else inst


def scale_limits(inst: Instance, alpha: float) -> Instance:
    """Multiply every service limit by ``alpha >= 1``."""
    if not alpha >= 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    if alpha == 1:
        return inst
    return inst.replace(limits=inst.limits * alpha)
