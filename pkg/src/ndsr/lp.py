"""Bounded-variable primal simplex for the master and arc-flow LPs.

Every row ``i`` gets a logical variable ``r_i = a_i x`` whose bounds encode
the row sense, so the working system is ``A x - r = 0`` with bounds on all
variables.  Phase 1 minimises the sum of bound violations of the basic
variables from whatever (warm) basis is given; phase 2 then optimises the
true objective.  Entering variables follow Dantzig's rule until 1000
consecutive degenerate pivots, after which Bland's rule is used until the
next non-degenerate step.

The basis inverse is a sparse LU factorisation of the basis matrix followed
by an eta file of product-form updates, refactorised every 100 pivots.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

EPS_FEAS = 1e-7
EPS_OPT = 1e-7
EPS_INT = 1e-6
PIVOT_TOL = 1e-9
MAX_PIVOTS = 200_000
REFACTOR_EVERY = 100
BLAND_AFTER = 1000

INF = math.inf


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


# variable states in a basis snapshot
BASIC, AT_LOWER, AT_UPPER, FREE = 0, 1, 2, 3


class LpDimensionError(ValueError):
    pass


@dataclass
class LpSolution:
    status: Status
    objective: float
    primal: np.ndarray
    duals: np.ndarray
    basis: Optional[tuple] = None
    reduced_costs: Optional[np.ndarray] = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class LpModel:
    """A minimisation LP ``min c x : rows, lb <= x <= ub``.

    Rows have a sense in ``{">=", "<=", "="}``. The matrix is stored column by
    column as ``{row: coef}`` dicts so columns and rows can be appended cheaply.
    ``basis`` holds the warm start used by :func:`solve`; it is kept valid
    across :meth:`add_columns` and :meth:`add_rows`.
    """

    def __init__(self):
        self.obj: list[float] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.cols: list[dict[int, float]] = []
        self.sense: list[str] = []
        self.rhs: list[float] = []
        self.basis: Optional[tuple] = None
        self.col_names: list[str] = []
        self.row_names: list[str] = []

    @property
    def num_cols(self) -> int:
        return len(self.obj)

    @property
    def num_rows(self) -> int:
        return len(self.rhs)

    def add_column(self, obj: float, lb: float = 0.0, ub: float = INF, coefs=None, name: str = "") -> int:
        coefs = dict(coefs or {})
        for i in coefs:
            if not 0 <= i < self.num_rows:
                raise LpDimensionError(f"column references row {i} of {self.num_rows}")
        if lb > ub:
            raise ValueError(f"column bounds {lb} > {ub}")
        self.obj.append(float(obj))
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.cols.append({i: float(v) for i, v in coefs.items() if v != 0})
        self.col_names.append(name or f"x{len(self.obj) - 1}")
        if self.basis is not None:
            n = self.num_cols - 1
            st = list(self.basis[0])
            st.insert(n, AT_LOWER if math.isfinite(lb) else (AT_UPPER if math.isfinite(ub) else FREE))
            self.basis = (tuple(st),)
        return self.num_cols - 1

    def add_columns(self, cols: Iterable) -> list[int]:
        """Append ``(obj, lb, ub, {row: coef})`` tuples; new columns are nonbasic."""
        return [self.add_column(*c) for c in cols]

    def add_row(self, sense: str, rhs: float, coefs=None, name: str = "") -> int:
        if sense not in (">=", "<=", "="):
            raise ValueError(f"unknown row sense {sense!r}")
        if not math.isfinite(rhs):
            raise ValueError("row rhs must be finite")
        coefs = dict(coefs or {})
        for j in coefs:
            if not 0 <= j < self.num_cols:
                raise LpDimensionError(f"row references column {j} of {self.num_cols}")
        i = self.num_rows
        self.sense.append(sense)
        self.rhs.append(float(rhs))
        self.row_names.append(name or f"r{i}")
        for j, v in coefs.items():
            if v != 0:
                self.cols[j][i] = float(v)
        if self.basis is not None:
            # the new logical enters the basis, keeping it square and nonsingular
            self.basis = (self.basis[0] + (BASIC,),)
        return i

    def add_rows(self, rows: Iterable) -> list[int]:
        """Append ``(sense, rhs, {col: coef})`` tuples."""
        return [self.add_row(*r) for r in rows]

    def set_bounds(self, j: int, lb: float, ub: float) -> None:
        if lb > ub:
            raise ValueError(f"column bounds {lb} > {ub}")
        self.lb[j] = float(lb)
        self.ub[j] = float(ub)

    def matrix(self) -> sp.csc_matrix:
        indptr = [0]
        indices, data = [], []
        for col in self.cols:
            for i in sorted(col):
                indices.append(i)
                data.append(col[i])
            indptr.append(len(indices))
        return sp.csc_matrix(
            (np.array(data, dtype=float), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
            shape=(self.num_rows, self.num_cols),
        )

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([r if s in (">=", "=") else -INF for s, r in zip(self.sense, self.rhs)], dtype=float)
        hi = np.array([r if s in ("<=", "=") else INF for s, r in zip(self.sense, self.rhs)], dtype=float)
        return lo, hi

    def copy(self) -> "LpModel":
        m = LpModel()
        m.obj, m.lb, m.ub = list(self.obj), list(self.lb), list(self.ub)
        m.cols = [dict(c) for c in self.cols]
        m.sense, m.rhs = list(self.sense), list(self.rhs)
        m.basis = self.basis
        m.col_names, m.row_names = list(self.col_names), list(self.row_names)
        return m


def add_columns(model: LpModel, cols) -> LpModel:
    model.add_columns(cols)
    return model


def add_rows(model: LpModel, rows) -> LpModel:
    model.add_rows(rows)
    return model


class _Factor:
    """Sparse LU of the basis plus an eta file."""

    def __init__(self, B: sp.csc_matrix):
        self.lu = splu(B.tocsc(), permc_spec="COLAMD")
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        x = self.lu.solve(a)
        for r, d in self.etas:
            xr = x[r] / d[r]
            x -= d * xr
            x[r] = xr
        return x

    def btran(self, c: np.ndarray) -> np.ndarray:
        u = np.array(c, dtype=float)
        for r, d in reversed(self.etas):
            ur = u[r]
            u[r] = (ur - (u @ d - ur * d[r])) / d[r]
        return self.lu.solve(u, trans="T")

    def update(self, r: int, d: np.ndarray) -> None:
        self.etas.append((r, d.copy()))


class _Simplex:
    def __init__(self, model: LpModel, max_pivots: int):
        self.m = model.num_rows
        self.n = model.num_cols
        self.max_pivots = max_pivots
        A = model.matrix()
        # full matrix [A  -I]
        self.K = sp.hstack([A, -sp.identity(self.m, format="csc")], format="csc")
        self.cost = np.concatenate([np.array(model.obj, dtype=float), np.zeros(self.m)])
        rlo, rhi = model.row_bounds()
        self.lo = np.concatenate([np.array(model.lb, dtype=float), rlo])
        self.hi = np.concatenate([np.array(model.ub, dtype=float), rhi])
        N = self.n + self.m
        self.fixed = self.lo == self.hi
        self.x = np.zeros(N)
        self.state = np.empty(N, dtype=np.int8)
        self.head: list[int] = []
        self._init_basis(model.basis)
        self.pivots = 0

    def _init_basis(self, basis) -> None:
        N = self.n + self.m
        st = None
        if basis is not None and len(basis[0]) == N:
            st = np.array(basis[0], dtype=np.int8)
            if int((st == BASIC).sum()) != self.m:
                st = None
        if st is None:
            st = np.empty(N, dtype=np.int8)
            st[: self.n] = AT_LOWER
            st[self.n :] = BASIC
        for j in range(N):
            if st[j] == BASIC:
                continue
            lo, hi = self.lo[j], self.hi[j]
            if st[j] == AT_LOWER and not math.isfinite(lo):
                st[j] = AT_UPPER if math.isfinite(hi) else FREE
            elif st[j] == AT_UPPER and not math.isfinite(hi):
                st[j] = AT_LOWER if math.isfinite(lo) else FREE
            elif st[j] == FREE and (math.isfinite(lo) or math.isfinite(hi)):
                st[j] = AT_LOWER if math.isfinite(lo) else AT_UPPER
        self.state = st
        self.head = [j for j in range(N) if st[j] == BASIC]
        try:
            self._refactor()
        except RuntimeError:
            # singular warm start: fall back to the slack basis
            st[: self.n] = [AT_LOWER if math.isfinite(self.lo[j]) else (AT_UPPER if math.isfinite(self.hi[j]) else FREE) for j in range(self.n)]
            st[self.n :] = BASIC
            self.state = st
            self.head = list(range(self.n, N))
            self._refactor()

    def _nonbasic_value(self, j: int) -> float:
        s = self.state[j]
        if s == AT_LOWER:
            return self.lo[j]
        if s == AT_UPPER:
            return self.hi[j]
        return 0.0

    def _refactor(self) -> None:
        N = self.n + self.m
        B = self.K[:, self.head]
        self.factor = _Factor(B)
        xn = np.zeros(N)
        nb = self.state != BASIC
        for j in np.nonzero(nb)[0]:
            xn[j] = self._nonbasic_value(j)
        rhs = -(self.K @ xn)
        xb = self.factor.ftran(rhs)
        self.x = xn
        self.x[self.head] = xb
        self.since_refactor = 0

    def _phase_costs(self) -> tuple[np.ndarray, bool]:
        xb = self.x[self.head]
        lo = self.lo[self.head]
        hi = self.hi[self.head]
        below = xb < lo - EPS_FEAS
        above = xb > hi + EPS_FEAS
        if below.any() or above.any():
            cb = np.zeros(self.m)
            cb[below] = -1.0
            cb[above] = 1.0
            return cb, True
        return self.cost[self.head], False

    def run(self) -> Status:
        degenerate = 0
        head_pos = {j: i for i, j in enumerate(self.head)}
        while True:
            if self.pivots >= self.max_pivots:
                return Status.ITERATION_LIMIT
            if self.since_refactor >= REFACTOR_EVERY:
                self._refactor()
            cb, phase1 = self._phase_costs()
            y = self.factor.btran(cb)
            if phase1:
                d = -(self.K.T @ y)
            else:
                d = self.cost - self.K.T @ y
            st = self.state
            cand = np.zeros_like(d)
            at_lo = (st == AT_LOWER) & ~self.fixed
            at_hi = (st == AT_UPPER) & ~self.fixed
            free = st == FREE
            cand[at_lo] = np.where(d[at_lo] < -EPS_OPT, -d[at_lo], 0.0)
            cand[at_hi] = np.where(d[at_hi] > EPS_OPT, d[at_hi], 0.0)
            cand[free] = np.where(np.abs(d[free]) > EPS_OPT, np.abs(d[free]), 0.0)
            if not cand.any():
                if phase1:
                    return Status.INFEASIBLE
                self.y = y
                self.d = d
                return Status.OPTIMAL
            bland = degenerate >= BLAND_AFTER
            q = int(np.flatnonzero(cand)[0]) if bland else int(np.argmax(cand))
            direction = 1.0 if d[q] < 0 else -1.0
            col = self.K[:, [q]].toarray().ravel()
            alpha = self.factor.ftran(col)
            # basic variable i changes at rate -direction*alpha_i per unit step
            rate = -direction * alpha
            t_best = self.hi[q] - self.lo[q] if not self.fixed[q] else 0.0
            leave = -1
            leave_to = None
            best_piv = 0.0
            xb = self.x[self.head]
            for i in np.flatnonzero(np.abs(alpha) > PIVOT_TOL):
                ri = rate[i]
                j = self.head[i]
                xi, lo, hi = xb[i], self.lo[j], self.hi[j]
                if ri < 0:
                    if xi > hi + EPS_FEAS:
                        lim, bound = (xi - hi) / -ri, AT_UPPER
                    elif math.isfinite(lo) and xi >= lo - EPS_FEAS:
                        lim, bound = max(xi - lo, 0.0) / -ri, AT_LOWER
                    else:
                        continue
                else:
                    if xi < lo - EPS_FEAS:
                        lim, bound = (lo - xi) / ri, AT_LOWER
                    elif math.isfinite(hi) and xi <= hi + EPS_FEAS:
                        lim, bound = max(hi - xi, 0.0) / ri, AT_UPPER
                    else:
                        continue
                piv = abs(alpha[i])
                if lim < t_best - 1e-12:
                    better = True
                elif lim <= t_best + 1e-12 and leave >= 0:
                    better = (j < self.head[leave]) if bland else piv > best_piv
                elif lim <= t_best + 1e-12 and leave < 0:
                    better = False
                else:
                    better = False
                if better:
                    t_best, leave, leave_to, best_piv = lim, i, bound, piv
            if not math.isfinite(t_best):
                if phase1:
                    # cannot happen for a bounded-below phase 1; treat as numerical trouble
                    self._refactor()
                    self.pivots += 1
                    continue
                return Status.UNBOUNDED
            step = t_best
            self.pivots += 1
            degenerate = degenerate + 1 if step <= 1e-12 else 0
            self.x[self.head] = xb + step * rate
            if leave < 0:
                # bound flip of the entering variable
                self.state[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[q] = self._nonbasic_value(q)
                continue
            self.x[q] = self._nonbasic_value(q) + direction * step
            j_out = self.head[leave]
            self.state[j_out] = leave_to
            self.x[j_out] = self.lo[j_out] if leave_to == AT_LOWER else self.hi[j_out]
            self.state[q] = BASIC
            self.head[leave] = q
            self.factor.update(leave, alpha)
            self.since_refactor += 1


def solve(model: LpModel, max_pivots: int = MAX_PIVOTS, warm_start: bool = True) -> LpSolution:
    """Solve ``model`` from its stored basis (or a slack basis).

    On return ``model.basis`` holds the final basis for the next warm start.
    """
    n, m = model.num_cols, model.num_rows
    if m == 0:
        # bounds only: each column sits at its cheaper finite bound
        x = np.zeros(n)
        for j in range(n):
            c = model.obj[j]
            if c > 0:
                x[j] = model.lb[j]
            elif c < 0:
                x[j] = model.ub[j]
            else:
                x[j] = model.lb[j] if math.isfinite(model.lb[j]) else (model.ub[j] if math.isfinite(model.ub[j]) else 0.0)
            if not math.isfinite(x[j]):
                return LpSolution(Status.UNBOUNDED, -INF, x, np.zeros(0))
        obj = float(np.dot(model.obj, x)) if n else 0.0
        return LpSolution(Status.OPTIMAL, obj, x, np.zeros(0), None, np.array(model.obj, dtype=float))
    if not warm_start:
        model.basis = None
    simplex = _Simplex(model, max_pivots)
    status = simplex.run()
    model.basis = (tuple(int(s) for s in simplex.state),)
    x = simplex.x[:n].copy()
    if status is not Status.OPTIMAL:
        return LpSolution(status, math.nan, x, np.zeros(m), model.basis, None, simplex.pivots)
    # clean refactor for accurate final values
    simplex._refactor()
    cb = simplex.cost[simplex.head]
    y = simplex.factor.btran(cb)
    d = simplex.cost - simplex.K.T @ y
    x = simplex.x[:n].copy()
    obj = float(np.dot(model.obj, x))
    return LpSolution(Status.OPTIMAL, obj, x, y, model.basis, d[:n], simplex.pivots)


def dual_objective(model: LpModel, sol: LpSolution) -> float:
    """Objective of the dual solution implied by ``sol`` (duals + bound terms)."""
    y = sol.duals
    lo, hi = model.row_bounds()
    total = 0.0
    for i, yi in enumerate(y):
        if abs(yi) <= 1e-11:
            continue
        if yi > 0:
            total += yi * lo[i]
        elif yi < 0:
            total += yi * hi[i]
    d = sol.reduced_costs
    for j in range(model.num_cols):
        if abs(d[j]) <= 1e-11:
            continue
        if d[j] > 0:
            total += d[j] * model.lb[j]
        elif d[j] < 0:
            total += d[j] * model.ub[j]
    return float(total)


def write_lp(model: LpModel) -> str:
    """Render ``model`` in CPLEX LP text format.

    Syntax: ``Minimize`` / ``obj: <terms>``, ``Subject To`` with one
    ``<name>: <terms> <sense> <rhs>`` line per row, ``Bounds`` with
    ``<lb> <= <col> <= <ub>`` lines, then ``End``.
    """

    def term(coef: float, name: str, first: bool) -> str:
        sign = "-" if coef < 0 else ("" if first else "+")
        mag = abs(coef)
        s = f"{sign} {mag:.12g} {name}" if not first or sign else f"{mag:.12g} {name}"
        return s.strip()

    lines = ["Minimize"]
    obj_terms = [term(c, model.col_names[j], i == 0) for i, (j, c) in enumerate((j, c) for j, c in enumerate(model.obj) if c != 0)]
    lines.append(" obj: " + (" ".join(obj_terms) if obj_terms else "0 " + (model.col_names[0] if model.num_cols else "")))
    lines.append("Subject To")
    rows: list[list[tuple[int, float]]] = [[] for _ in range(model.num_rows)]
    for j, col in enumerate(model.cols):
        for i, v in col.items():
            rows[i].append((j, v))
    for i, entries in enumerate(rows):
        terms = [term(v, model.col_names[j], idx == 0) for idx, (j, v) in enumerate(sorted(entries))]
        lhs = " ".join(terms) if terms else "0 " + model.col_names[0]
        lines.append(f" {model.row_names[i]}: {lhs} {model.sense[i]} {model.rhs[i]:.12g}")
    lines.append("Bounds")
    for j in range(model.num_cols):
        lo, hi = model.lb[j], model.ub[j]
        lo_s = "-inf" if not math.isfinite(lo) else f"{lo:.12g}"
        hi_s = "+inf" if not math.isfinite(hi) else f"{hi:.12g}"
        lines.append(f" {lo_s} <= {model.col_names[j]} <= {hi_s}")
    lines.append("End")
    return "\n".join(lines) + "\n"


class BuiltinEngine:
    """The bundled simplex, behind the same interface as external engines."""

    name = "builtin"

    def solve(self, model: LpModel) -> LpSolution:
        return solve(model)


class HighsEngine:
    """HiGHS via :func:`scipy.optimize.linprog`; no warm start."""

    name = "highs"

    def solve(self, model: LpModel) -> LpSolution:
        from scipy.optimize import linprog

        n, m = model.num_cols, model.num_rows
        A = model.matrix().tocsr()
        ub_rows = [i for i, s in enumerate(model.sense) if s in (">=", "<=")]
        eq_rows = [i for i, s in enumerate(model.sense) if s == "="]
        sign = np.array([-1.0 if model.sense[i] == ">=" else 1.0 for i in ub_rows])
        A_ub = A[ub_rows].multiply(sign[:, None]).tocsr() if ub_rows else None
        b_ub = np.array([model.rhs[i] for i in ub_rows]) * sign if ub_rows else None
        A_eq = A[eq_rows] if eq_rows else None
        b_eq = np.array([model.rhs[i] for i in eq_rows]) if eq_rows else None
        bounds = [(lo if math.isfinite(lo) else None, hi if math.isfinite(hi) else None) for lo, hi in zip(model.lb, model.ub)]
        res = linprog(model.obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status == 2:
            return LpSolution(Status.INFEASIBLE, math.nan, np.zeros(n), np.zeros(m))
        if res.status == 3:
            return LpSolution(Status.UNBOUNDED, -INF, np.zeros(n), np.zeros(m))
        if res.status != 0:
            return LpSolution(Status.ITERATION_LIMIT, math.nan, np.zeros(n), np.zeros(m))
        y = np.zeros(m)
        if ub_rows:
            y[ub_rows] = res.ineqlin.marginals * sign
        if eq_rows:
            y[eq_rows] = res.eqlin.marginals
        d = np.array(model.obj, dtype=float) - A.T @ y
        return LpSolution(Status.OPTIMAL, float(res.fun), np.array(res.x), y, None, d)


ENGINES = {"builtin": BuiltinEngine, "highs": HighsEngine}


def get_engine(name: str = "builtin"):
    try:
        return ENGINES[name]()
    except KeyError:
        raise ValueError(f"unknown LP engine {name!r}; choose from {sorted(ENGINES)}") from None
