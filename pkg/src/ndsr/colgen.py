"""Restricted master of the path formulation and the column-generation loop.

Master rows:

* linking ``z_a - sum_{p of k, a in p} x_p >= 0`` for every ``(a, k)`` that
  some column of ``k`` uses.  Rows for pairs no column touches would read
  ``z_a >= 0`` and are implied by the bounds, so they are created lazily and
  their dual is taken as zero;
* convexity ``sum_{p of k} x_p >= 1``;
* cut rows added by :mod:`ndsr.cuts`.

Columns are ``z_a`` in ``[0, 1]`` (objective ``F_a``) and ``x_p >= 0``
(objective ``c_p``).  ``x_p <= 1`` is implied by ``z_a <= 1`` through any
linking row of the path; an explicit bound would let pool columns sit at
their upper bound with negative reduced cost, which pricing cannot see.
The path pool only grows; branching deactivates a column by setting its
upper bound to 0.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .core import Instance, Path
from .csp import CspQuery, constrained_shortest_path
from .lp import EPS_OPT, INF, LpModel, LpSolution, Status, get_engine

log = logging.getLogger(__name__)

DUAL_SIGN_TOL = 1e-6
MAX_ROUNDS = 10_000


class InfeasibleCommodityError(RuntimeError):
    pass


class DualSignError(RuntimeError):
    pass


class ColgenLimitError(RuntimeError):
    pass


@dataclass
class Duals:
    gamma: np.ndarray  # (K, A), linking-row duals
    rho: np.ndarray  # (K,), convexity duals
    phi: np.ndarray  # (num_cuts,)
    cut_increment: np.ndarray  # (K, A), sum of phi over cuts containing (a, k)

    def arc_costs(self, inst: Instance, k: int) -> np.ndarray:
        return inst.flow_cost[k] + self.gamma[k] + self.cut_increment[k]


class MasterModel:
    """LP over all ``z`` columns and a growing pool of path columns."""

    def __init__(self, inst: Instance, engine: str = "builtin"):
        self.inst = inst
        self.lp = LpModel()
        self.engine = get_engine(engine)
        A, K = inst.num_arcs, inst.num_commodities
        self.z_col = [
            self.lp.add_column(float(inst.activation_cost[a]), 0.0, 1.0, name=f"z{a}") for a in range(A)
        ]
        self.conv_row = [self.lp.add_row(">=", 1.0, name=f"conv{k}") for k in range(K)]
        self.link_row: dict[tuple[int, int], int] = {}
        self.paths: list[Path] = []  # pool, in creation order
        self.path_col: list[int] = []
        self.cols_of: list[list[int]] = [[] for _ in range(K)]  # pool indices per commodity
        self.registry: dict[tuple[int, tuple[int, ...]], int] = {}
        self.cuts: list = []
        self.cut_row: list[int] = []
        self.fixed_open: frozenset = frozenset()
        self.fixed_closed: frozenset = frozenset()

    # ------------------------------------------------------------------
    @property
    def num_paths(self) -> int:
        return len(self.paths)

    def add_path(self, path: Path) -> int:
        """Add a path column (no-op for a duplicate); returns its pool index."""
        key = (path.commodity, path.arcs)
        if key in self.registry:
            return self.registry[key]
        k = path.commodity
        coefs = {self.conv_row[k]: 1.0}
        new_arcs = []
        for a in path.arcs:
            r = self.link_row.get((a, k))
            if r is None:
                new_arcs.append(a)
            else:
                coefs[r] = -1.0
        for cut, row in zip(self.cuts, self.cut_row):
            n = sum(1 for a in path.arcs if (a, k) in cut.x_pairs)
            if n:
                coefs[row] = -float(n)
        closed = any(a in self.fixed_closed for a in path.arcs)
        j = self.lp.add_column(path.cost, 0.0, 0.0 if closed else INF, coefs, name=f"x{len(self.paths)}_k{k}")
        for a in new_arcs:
            self.link_row[(a, k)] = self.lp.add_row(">=", 0.0, {self.z_col[a]: 1.0, j: -1.0}, name=f"link{a}_{k}")
        idx = len(self.paths)
        self.paths.append(path)
        self.path_col.append(j)
        self.cols_of[k].append(idx)
        self.registry[key] = idx
        return idx

    def add_cut(self, cut) -> int:
        """Materialise a cut as an LP row; returns the row index."""
        coefs: dict[int, float] = {}
        for a, mult in cut.z_coefs().items():
            coefs[self.z_col[a]] = coefs.get(self.z_col[a], 0.0) + mult
        if cut.x_pairs:
            for idx, p in enumerate(self.paths):
                n = sum(1 for a in p.arcs if (a, p.commodity) in cut.x_pairs)
                if n:
                    coefs[self.path_col[idx]] = -float(n)
        row = self.lp.add_row(">=", float(cut.rhs), coefs, name=f"cut{len(self.cuts)}")
        self.cuts.append(cut)
        self.cut_row.append(row)
        return row

    def set_node(self, fixed_open: Iterable[int] = (), fixed_closed: Iterable[int] = ()) -> None:
        """Apply branching fixings as column bounds."""
        self.fixed_open = frozenset(fixed_open)
        self.fixed_closed = frozenset(fixed_closed)
        for a, j in enumerate(self.z_col):
            if a in self.fixed_closed:
                self.lp.set_bounds(j, 0.0, 0.0)
            elif a in self.fixed_open:
                self.lp.set_bounds(j, 1.0, 1.0)
            else:
                self.lp.set_bounds(j, 0.0, 1.0)
        closed = self.fixed_closed
        for p, j in zip(self.paths, self.path_col):
            ub = 0.0 if closed and any(a in closed for a in p.arcs) else INF
            self.lp.set_bounds(j, 0.0, ub)

    def active(self, idx: int) -> bool:
        return self.lp.ub[self.path_col[idx]] > 0

    def commodities_without_columns(self) -> list[int]:
        return [k for k in range(self.inst.num_commodities) if not any(self.active(i) for i in self.cols_of[k])]

    # ------------------------------------------------------------------
    def solve(self) -> LpSolution:
        return self.engine.solve(self.lp)

    def duals(self, sol: LpSolution, check: bool = True) -> Duals:
        inst = self.inst
        K, A = inst.num_commodities, inst.num_arcs
        y = sol.duals
        gamma = np.zeros((K, A))
        for (a, k), r in self.link_row.items():
            gamma[k, a] = y[r]
        rho = np.array([y[r] for r in self.conv_row]) if K else np.zeros(0)
        phi = np.array([y[r] for r in self.cut_row])
        if check:
            worst = min(
                float(gamma.min()) if gamma.size else 0.0,
                float(rho.min()) if rho.size else 0.0,
                float(phi.min()) if phi.size else 0.0,
            )
            if worst < -DUAL_SIGN_TOL:
                raise DualSignError(f"negative master dual {worst}")
        gamma = np.maximum(gamma, 0.0)
        rho = np.maximum(rho, 0.0)
        phi = np.maximum(phi, 0.0)
        inc = np.zeros((K, A))
        for cut, f in zip(self.cuts, phi):
            if f:
                for a, k in cut.x_pairs:
                    inc[k, a] += f
        return Duals(gamma, rho, phi, inc)

    def x_values(self, sol: LpSolution) -> np.ndarray:
        return sol.primal[self.path_col] if self.paths else np.zeros(0)

    def z_values(self, sol: LpSolution) -> np.ndarray:
        return sol.primal[self.z_col] if self.z_col else np.zeros(0)


def build_initial_master(inst: Instance, engine: str = "builtin") -> MasterModel:
    """Master with all ``z`` columns and one cheapest feasible path per commodity."""
    master = MasterModel(inst, engine)
    for k in range(inst.num_commodities):
        p = constrained_shortest_path(inst, CspQuery(k))
        if p is None:
            raise InfeasibleCommodityError(f"commodity {k} has no feasible path")
        master.add_path(p)
    return master


def reduced_cost(master: MasterModel, k: int, path: Path, duals: Duals) -> float:
    costs = duals.arc_costs(master.inst, k)
    return float(sum(costs[a] for a in path.arcs)) - float(duals.rho[k])


def price_all(master: MasterModel, duals: Duals, forbidden_arcs: Iterable[int] = ()) -> list[Path]:
    """Best negative-reduced-cost path per commodity (at most one each)."""
    inst = master.inst
    forbidden = frozenset(forbidden_arcs)
    found = []
    for k in range(inst.num_commodities):
        rho = float(duals.rho[k])
        if rho <= EPS_OPT:
            # arc costs are non-negative, so no path can price out
            continue
        costs = duals.arc_costs(inst, k)
        p = constrained_shortest_path(
            inst, CspQuery(k, arc_costs=costs, forbidden_arcs=forbidden, cost_cutoff=rho - EPS_OPT)
        )
        if p is None:
            continue
        rc = float(sum(costs[a] for a in p.arcs)) - rho
        if rc < -EPS_OPT:
            if (k, p.arcs) in master.registry:
                raise RuntimeError(f"pricing regenerated pool column for commodity {k}")
            found.append(p)
    return found


@dataclass
class ColgenResult:
    status: Status
    value: float
    solution: Optional[LpSolution]
    generated: int = 0
    rounds: int = 0
    lp_time: float = 0.0
    pricing_time: float = 0.0
    history: list = field(default_factory=list)


def solve_lp_by_colgen(
    master: MasterModel,
    forbidden_arcs: Iterable[int] = (),
    pricing: bool = True,
    max_rounds: int = MAX_ROUNDS,
    deadline: float = math.inf,
) -> ColgenResult:
    """Alternate master solves and pricing until no column prices out.

    Returns status ``INFEASIBLE`` when the master is infeasible under the
    current fixings and ``ITERATION_LIMIT`` when the deadline passes.
    """
    forbidden = frozenset(forbidden_arcs) | master.fixed_closed
    res = ColgenResult(Status.OPTIMAL, math.nan, None)
    while True:
        t0 = time.perf_counter()
        sol = master.solve()
        res.lp_time += time.perf_counter() - t0
        res.solution = sol
        if sol.status is not Status.OPTIMAL:
            res.status = sol.status
            return res
        res.value = sol.objective
        res.history.append(sol.objective)
        if not pricing:
            return res
        if res.rounds >= max_rounds:
            raise ColgenLimitError(f"column generation exceeded {max_rounds} rounds")
        if time.perf_counter() > deadline:
            res.status = Status.ITERATION_LIMIT
            return res
        t0 = time.perf_counter()
        new = price_all(master, master.duals(sol), forbidden)
        res.pricing_time += time.perf_counter() - t0
        res.rounds += 1
        if not new:
            return res
        for p in new:
            master.add_path(p)
        res.generated += len(new)
        log.debug("colgen round %d: value %.6f, %d new columns", res.rounds, sol.objective, len(new))
