"""Branch-and-bound over arc variables with column generation at every node.

Three modes share one tree search:

``allpath``
    every feasible path is enumerated up front and pricing is switched off;
``bnp``
    column generation at every node;
``bcp``
    as ``bnp`` plus up to 25 rounds of cut separation at the root.

Branching always picks an arc variable.  ``z_a = 0`` forbids ``a`` in pricing
and zeroes the bounds of pool columns through ``a``; ``z_a = 1`` only fixes
the bound.  Nodes are explored best-bound first, FIFO among equal bounds.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .colgen import MasterModel, build_initial_master, solve_lp_by_colgen
from .core import EPS, Instance, Path, path_metrics, validate_instance
from .csp import CspQuery, constrained_shortest_path
from .cuts import MAX_ROUNDS as MAX_CUT_ROUNDS
from .cuts import RelationshipCache, separate, violation
from .enumerate import DEFAULT_LABEL_CAP, enumerate_all
from .lp import AT_LOWER, BASIC, EPS_INT, Status

log = logging.getLogger(__name__)

MODES = ("allpath", "bnp", "bcp")
#: relative gap under which a run counts as optimal when ``gap_limit`` is 0
MIN_REL_GAP = 1e-6

#: process-wide tally of integral-z nodes and of fractional x seen at them
INTEGRALITY_TALLY = {"integral_z_nodes": 0, "fractional_x": 0}


@dataclass
class Params:
    time_limit: float = 3600.0
    gap_limit: float = 0.0  # percent
    engine: str = "builtin"
    heuristic_every: int = 50
    max_cut_rounds: int = MAX_CUT_ROUNDS
    label_cap: int = DEFAULT_LABEL_CAP
    node_limit: Optional[int] = None


@dataclass
class BnpNode:
    fixed_open: frozenset
    fixed_closed: frozenset
    lp_bound: float
    depth: int = 0
    basis: Optional[tuple] = None  # (states, num_cols, num_rows) of the parent

    def __post_init__(self):
        if self.fixed_open & self.fixed_closed:
            raise ValueError("an arc cannot be fixed both open and closed")


@dataclass
class Incumbent:
    value: float
    open_arcs: tuple[int, ...]
    paths: list[Path]


@dataclass
class Stats:
    nodes: int = 0
    columns: int = 0
    cuts: int = 0
    paths: Optional[int] = None
    lp_time: float = 0.0
    pricing_time: float = 0.0
    wall_time: float = 0.0
    root_lp: float = math.nan
    root_lp_cuts: float = math.nan
    integral_x_anomalies: int = 0
    integral_z_nodes: int = 0
    bound_decreases: int = 0
    relationship_queries: int = 0


@dataclass
class SolveResult:
    status: str
    value: float
    bound: float
    gap: float
    incumbent: Optional[Incumbent]
    stats: Stats
    mode: str
    cut_log: list = field(default_factory=list)

    def summary_line(self) -> str:
        s = self.stats
        paths = "-" if s.paths is None else str(s.paths)
        return (
            f"{self.status} {_fmt(self.value)} {_fmt(self.bound)} {self.gap:.2f} "
            f"{s.wall_time:.2f} {s.nodes} {s.columns} {s.cuts} {paths}"
        )

    def to_dict(self) -> dict:
        inc = None
        if self.incumbent is not None:
            inc = {
                "open_arcs": list(self.incumbent.open_arcs),
                "paths": [{"commodity": p.commodity, "arcs": list(p.arcs)} for p in self.incumbent.paths],
            }
        return {
            "mode": self.mode,
            "status": self.status,
            "opt": self.status == "optimal",
            "value": _json_num(self.value),
            "bound": _json_num(self.bound),
            "gap_percent": _json_num(self.gap),
            "stats": {k: _json_num(v) if isinstance(v, float) else v for k, v in asdict(self.stats).items()},
            "cuts": list(self.cut_log),
            "incumbent": inc,
        }


TIMING_FIELDS = ("lp_time", "pricing_time", "wall_time")


def _fmt(x: float) -> str:
    if x is None or not math.isfinite(x):
        return "inf" if x == math.inf else "nan"
    return f"{x:.6g}"


def _json_num(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None
    return x


def rel_gap(upper: float, lower: float) -> float:
    """Percentage gap ``100 (U - L) / U``; 0 when both are 0."""
    if not math.isfinite(upper):
        return math.inf
    diff = max(0.0, upper - lower)
    if diff <= 1e-9 * max(1.0, abs(upper)):
        return 0.0
    if upper <= 0:
        return math.inf
    return 100.0 * diff / upper


def select_branch_variable(z: np.ndarray, F: np.ndarray) -> Optional[int]:
    """Most fractional arc, ties by larger activation cost then smaller id."""
    best, key = None, None
    for a, v in enumerate(z):
        if min(v, 1.0 - v) <= EPS_INT:
            continue
        k = (round(abs(v - 0.5), 12), -float(F[a]), a)
        if key is None or k < key:
            best, key = a, k
    return best


def check_integral_x(master: MasterModel, sol) -> tuple[bool, list[Path]]:
    """Pick one path per commodity from an LP solution with integral ``z``.

    Returns ``(integral, paths)``. When some ``x`` is fractional the largest
    one per commodity is taken; the paths selected this way all have the
    same cost when the LP was optimal, so the objective does not change.
    """
    x = master.x_values(sol)
    integral = bool(np.all(np.minimum(np.abs(x), np.abs(x - 1.0)) <= EPS_INT)) if x.size else True
    chosen = []
    for k in range(master.inst.num_commodities):
        cand = [i for i in master.cols_of[k] if master.active(i)]
        if not cand:
            return integral, []
        best = max(cand, key=lambda i: (x[i], -master.paths[i].cost, -i))
        chosen.append(master.paths[best])
    return integral, chosen


def make_incumbent(inst: Instance, paths: list[Path]) -> Incumbent:
    """Validate ``paths`` against the instance and price the design exactly."""
    opened: set[int] = set()
    flow = 0.0
    for k, p in enumerate(paths):
        if p.commodity != k:
            raise ValueError("paths must be listed in commodity order")
        cost, _, feasible = path_metrics(inst, k, p.arcs)
        if not feasible:
            raise ValueError(f"incumbent path for commodity {k} is infeasible")
        flow += cost
        opened.update(p.arcs)
    value = float(sum(inst.activation_cost[a] for a in opened)) + flow
    return Incumbent(value, tuple(sorted(opened)), list(paths))


def primal_heuristic(inst: Instance, z: np.ndarray) -> Optional[Incumbent]:
    """Round ``z >= 0.5`` up, route on open arcs, open arcs greedily when stuck."""
    opened = {a for a, v in enumerate(z) if v >= 0.5 - EPS_INT}
    closed = frozenset(a for a in range(inst.num_arcs) if a not in opened)
    paths: list[Optional[Path]] = [None] * inst.num_commodities
    stuck = []
    for k in range(inst.num_commodities):
        p = constrained_shortest_path(inst, CspQuery(k, forbidden_arcs=closed))
        if p is None:
            stuck.append(k)
        else:
            paths[k] = p
    for k in stuck:
        costs = inst.flow_cost[k] + np.array(
            [0.0 if a in opened else inst.activation_cost[a] for a in range(inst.num_arcs)]
        )
        p = constrained_shortest_path(inst, CspQuery(k, arc_costs=costs))
        if p is None:
            return None
        paths[k] = p
        opened.update(p.arcs)
    return make_incumbent(inst, paths)  # type: ignore[arg-type]


def _extend_basis(snapshot, master: MasterModel):
    if snapshot is None:
        return None
    states, n0, m0 = snapshot
    n, m = master.lp.num_cols, master.lp.num_rows
    structural = list(states[:n0]) + [AT_LOWER] * (n - n0)
    logical = list(states[n0:]) + [BASIC] * (m - m0)
    return (tuple(structural + logical),)


def _snapshot(master: MasterModel):
    if master.lp.basis is None:
        return None
    return (master.lp.basis[0], master.lp.num_cols, master.lp.num_rows)


class _Search:
    def __init__(self, inst: Instance, mode: str, params: Params):
        self.inst = inst
        self.mode = mode
        self.params = params
        self.pricing = mode != "allpath"
        self.stats = Stats()
        self.incumbent: Optional[Incumbent] = None
        self.cut_log: list[dict] = []
        self.start = time.perf_counter()
        self.deadline = self.start + params.time_limit
        self.gap_pruned_bound = math.inf

    @property
    def upper(self) -> float:
        return self.incumbent.value if self.incumbent else math.inf

    def offer(self, inc: Optional[Incumbent]) -> None:
        if inc is not None and inc.value < self.upper - 1e-9:
            self.incumbent = inc
            log.info("incumbent %.6f", inc.value)

    def prune_threshold(self) -> float:
        U = self.upper
        if not math.isfinite(U):
            return math.inf
        tol = max(1e-6, MIN_REL_GAP * abs(U), self.params.gap_limit / 100.0 * abs(U))
        return U - tol

    def build_master(self) -> MasterModel:
        if self.mode == "allpath":
            per_k = enumerate_all(self.inst, True, self.params.label_cap)
            master = MasterModel(self.inst, self.params.engine)
            for ps in per_k:
                for p in ps:
                    master.add_path(p)
            self.stats.paths = master.num_paths
            return master
        return build_initial_master(self.inst, self.params.engine)

    def evaluate(self, master: MasterModel, node: BnpNode, root: bool = False):
        """Solve the node LP; returns the LP solution or ``None`` if infeasible."""
        master.set_node(node.fixed_open, node.fixed_closed)
        master.lp.basis = _extend_basis(node.basis, master)
        for k in master.commodities_without_columns():
            if not self.pricing:
                return None
            p = constrained_shortest_path(self.inst, CspQuery(k, forbidden_arcs=node.fixed_closed))
            if p is None:
                return None
            master.add_path(p)
        res = solve_lp_by_colgen(master, node.fixed_closed, self.pricing, deadline=self.deadline)
        self._account(res)
        if res.status is Status.INFEASIBLE:
            return None
        if res.status is not Status.OPTIMAL:
            raise _TimeUp
        sol = res.solution
        if root:
            self.stats.root_lp = sol.objective
            self.stats.root_lp_cuts = sol.objective
            if self.mode == "bcp":
                sol = self.separate_root(master, sol)
        return sol

    def _account(self, res) -> None:
        self.stats.lp_time += res.lp_time
        self.stats.pricing_time += res.pricing_time

    def separate_root(self, master: MasterModel, sol):
        cache = RelationshipCache(self.inst)
        for _ in range(self.params.max_cut_rounds):
            if time.perf_counter() > self.deadline:
                break
            found = separate(master, sol, cache, master.cuts)
            if not found:
                break
            for cut in found:
                z = master.z_values(sol)
                self.cut_log.append(
                    {
                        "family": cut.family,
                        "members": [list(m) for m in cut.members],
                        "z_arcs": list(cut.z_arcs),
                        "q": cut.rhs,
                        "violation": violation(cut, z),
                    }
                )
                master.add_cut(cut)
            res = solve_lp_by_colgen(master, master.fixed_closed, self.pricing, deadline=self.deadline)
            self._account(res)
            if res.status is not Status.OPTIMAL:
                raise _TimeUp
            sol = res.solution
        self.stats.cuts = len(master.cuts)
        self.stats.relationship_queries = cache.queries
        self.stats.root_lp_cuts = sol.objective
        return sol

    def run(self) -> SolveResult:
        inst = self.inst
        report = validate_instance(inst)
        if report.structural:
            raise ValueError("invalid instance: " + "; ".join(report.structural))
        if not all(report.feasible):
            return self.finish("infeasible", math.inf, [])
        master = self.build_master()
        n_initial = master.num_paths
        open_nodes: list = []
        seq = 0
        root = BnpNode(frozenset(), frozenset(), -math.inf)
        heapq.heappush(open_nodes, (root.lp_bound, seq, root))
        timed_out = False
        try:
            while open_nodes:
                if time.perf_counter() > self.deadline:
                    raise _TimeUp
                if self.params.node_limit is not None and self.stats.nodes >= self.params.node_limit:
                    raise _TimeUp
                bound, _, node = heapq.heappop(open_nodes)
                if bound >= self.upper:
                    continue
                if bound >= self.prune_threshold():
                    self.gap_pruned_bound = min(self.gap_pruned_bound, bound)
                    continue
                is_root = self.stats.nodes == 0
                self.stats.nodes += 1
                sol = self.evaluate(master, node, root=is_root)
                if sol is None:
                    continue
                value = sol.objective
                if value < node.lp_bound - 1e-6:
                    self.stats.bound_decreases += 1
                    log.warning("child bound %.9f below parent %.9f", value, node.lp_bound)
                value = max(value, node.lp_bound)
                z = master.z_values(sol)
                if is_root or (self.params.heuristic_every and self.stats.nodes % self.params.heuristic_every == 0):
                    self.offer(primal_heuristic(inst, z))
                a = select_branch_variable(z, inst.activation_cost)
                if a is not None and value >= self.upper:
                    continue
                if a is None:
                    self.stats.integral_z_nodes += 1
                    INTEGRALITY_TALLY["integral_z_nodes"] += 1
                    integral, paths = check_integral_x(master, sol)
                    if not integral:
                        self.stats.integral_x_anomalies += 1
                        INTEGRALITY_TALLY["fractional_x"] += 1
                        log.warning("fractional x at an integral-z node")
                    if paths:
                        inc = make_incumbent(inst, paths)
                        if not integral and inc.value > value + 1e-6 * max(1.0, abs(value)):
                            # cannot happen at an optimal vertex; fall back to the heuristic
                            log.warning("rounded x changed the objective: %.9f vs %.9f", inc.value, value)
                            self.offer(primal_heuristic(inst, z))
                        else:
                            self.offer(inc)
                    continue
                if value >= self.prune_threshold():
                    self.gap_pruned_bound = min(self.gap_pruned_bound, value)
                    continue
                snap = _snapshot(master)
                for child in (
                    BnpNode(node.fixed_open, node.fixed_closed | {a}, value, node.depth + 1, snap),
                    BnpNode(node.fixed_open | {a}, node.fixed_closed, value, node.depth + 1, snap),
                ):
                    seq += 1
                    heapq.heappush(open_nodes, (value, seq, child))
        except _TimeUp:
            timed_out = True
        self.stats.columns = master.num_paths - n_initial
        self.stats.cuts = len(master.cuts)
        lower = min([self.upper, self.gap_pruned_bound] + [b for b, _, _ in open_nodes])
        if timed_out and not open_nodes and self.stats.nodes == 0:
            lower = -math.inf
        if timed_out:
            return self.finish("time-limit", lower, open_nodes)
        if self.incumbent is None:
            return self.finish("infeasible", lower, open_nodes)
        gap = rel_gap(self.upper, lower)
        limit = max(self.params.gap_limit, 100.0 * MIN_REL_GAP)
        return self.finish("optimal" if gap <= limit else "feasible", lower, open_nodes)

    def finish(self, status: str, lower: float, open_nodes) -> SolveResult:
        self.stats.wall_time = time.perf_counter() - self.start
        U = self.upper
        if status == "infeasible":
            return SolveResult(status, math.inf, math.inf, math.inf, None, self.stats, self.mode, self.cut_log)
        lower = min(lower, U)
        return SolveResult(status, U, lower, rel_gap(U, lower), self.incumbent, self.stats, self.mode, self.cut_log)


class _TimeUp(Exception):
    pass


def solve(inst: Instance, mode: str = "bnp", params: Optional[Params] = None) -> SolveResult:
    """Solve ``inst`` to optimality (or until a limit) in the given mode.

    Raises:
        EnumerationLimitError: in ``allpath`` mode when enumeration exceeds
            ``params.label_cap`` labels.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return _Search(inst, mode, params or Params()).run()
