"""Arc-pair relationships and root-node valid inequalities.

All cuts share the row template

    sum_{(a,k) in C} z_a - sum_{(a,k) in C} sum_{p of k, a in p} x_p >= q

and reach pricing only through per-``(arc, commodity)`` dual increments
(:attr:`Cut.x_pairs`), so the labeling algorithm is untouched.

Two families are separated, both implied by CUT relationships
(every feasible path of ``k`` uses ``a`` or ``b``):

* ``cut-pair``: ``z_a + z_b >= 1``.  Commodity ``k`` must open ``a`` or ``b``.
* ``cut-cover``: ``z_a + z_b + z_c >= 2`` when the pairs ``{a,b}``, ``{a,c}``
  and ``{b,c}`` are each a CUT pair of some commodity.  Each pair needs an
  open arc, so at most one of the three can stay closed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np

from .core import Instance
from .csp import CspQuery, constrained_shortest_path

VIOLATION_TOL = 1e-6
FRACTIONAL_TOL = 1e-6
MAX_ROUNDS = 25

OR, IF, CUT = "OR", "IF", "CUT"


@dataclass(frozen=True)
class Relationship:
    kind: str
    k: int
    a: int
    b: int


@dataclass(frozen=True)
class Cut:
    """One inequality of the template; ``z_arcs`` may repeat an arc."""

    family: str
    z_arcs: tuple[int, ...]
    x_pairs: frozenset = field(default_factory=frozenset)
    rhs: float = 1.0
    members: tuple = ()

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]], rhs: float, family: str = "template") -> "Cut":
        pairs = tuple(sorted(set(pairs)))
        return cls(family, tuple(a for a, _ in pairs), frozenset(pairs), float(rhs), pairs)

    def z_coefs(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for a in self.z_arcs:
            out[a] = out.get(a, 0.0) + 1.0
        return out

    def lhs(self, z, x_by_pair=None) -> float:
        """Left-hand side for arc values ``z`` and aggregated flows ``y[(a,k)]``."""
        val = sum(float(z[a]) for a in self.z_arcs)
        if self.x_pairs and x_by_pair is not None:
            val -= sum(x_by_pair.get(pair, 0.0) for pair in self.x_pairs)
        return val

    def describe(self) -> str:
        terms = " + ".join(f"z{a}" for a in self.z_arcs)
        if self.x_pairs:
            terms += " - " + " - ".join(f"y{a}^{k}" for a, k in sorted(self.x_pairs))
        return f"{self.family}: {terms} >= {self.rhs:g}"


def detect_relationship(inst: Instance, k: int, a: int, b: int, kind: str) -> bool:
    """Exact OR / IF(a->b) / CUT test for commodity ``k`` via feasibility queries."""
    if a == b:
        raise ValueError("relationship needs two distinct arcs")
    zero = np.zeros(inst.num_arcs)
    if kind == CUT:
        q = CspQuery(k, arc_costs=zero, forbidden_arcs=frozenset((a, b)))
    elif kind == IF:
        q = CspQuery(k, arc_costs=zero, forbidden_arcs=frozenset((b,)), required_arcs=(a,))
    elif kind == OR:
        q = CspQuery(k, arc_costs=zero, required_arcs=(a, b))
    else:
        raise ValueError(f"unknown relationship kind {kind!r}")
    return constrained_shortest_path(inst, q) is None


class RelationshipCache:
    """Memoised CUT-pair detection, computed lazily on demand."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self._cut: dict[tuple[int, int, int], bool] = {}
        self.queries = 0

    def is_cut_pair(self, k: int, a: int, b: int) -> bool:
        key = (k, min(a, b), max(a, b))
        if key not in self._cut:
            self.queries += 1
            self._cut[key] = detect_relationship(self.inst, k, key[1], key[2], CUT)
        return self._cut[key]


def _cut_pairs(master, cache: RelationshipCache, frac: set[int]) -> dict[tuple[int, int], int]:
    """CUT pairs among fractional arcs, mapped to one witnessing commodity."""
    out: dict[tuple[int, int], int] = {}
    for k in range(master.inst.num_commodities):
        cols = [master.paths[i].arcs for i in master.cols_of[k]]
        used = sorted({a for arcs in cols for a in arcs if a in frac})
        for a, b in combinations(used, 2):
            if (a, b) in out:
                continue
            # cheap necessary condition: every known path of k uses a or b
            if not all(a in arcs or b in arcs for arcs in cols):
                continue
            if cache.is_cut_pair(k, a, b):
                out[(a, b)] = k
    return out


def separate(master, sol, cache: RelationshipCache, existing: Iterable[Cut] = ()) -> list[Cut]:
    """Return the first violated cut (as a one-element list) or ``[]``."""
    z = master.z_values(sol)
    frac = {a for a, v in enumerate(z) if FRACTIONAL_TOL < v < 1 - FRACTIONAL_TOL}
    if len(frac) < 2:
        return []
    seen = {(c.family, c.z_arcs) for c in existing}
    pairs = _cut_pairs(master, cache, frac)
    for (a, b), k in sorted(pairs.items()):
        viol = 1.0 - (z[a] + z[b])
        if viol > VIOLATION_TOL and ("cut-pair", (a, b)) not in seen:
            return [Cut("cut-pair", (a, b), frozenset(), 1.0, (("CUT", k, a, b),))]
    adj: dict[int, set[int]] = {}
    for a, b in pairs:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    for a in sorted(adj):
        for b in sorted(x for x in adj[a] if x > a):
            for c in sorted(x for x in adj[a] & adj[b] if x > b):
                viol = 2.0 - (z[a] + z[b] + z[c])
                if viol > VIOLATION_TOL and ("cut-cover", (a, b, c)) not in seen:
                    members = (
                        ("CUT", pairs[(a, b)], a, b),
                        ("CUT", pairs[(a, c)], a, c),
                        ("CUT", pairs[(b, c)], b, c),
                    )
                    return [Cut("cut-cover", (a, b, c), frozenset(), 2.0, members)]
    return []


def violation(cut: Cut, z, y=None) -> float:
    return float(cut.rhs - cut.lhs(z, y))


def cut_validity_oracle(inst: Instance, cut: Cut, cap: int = 1_000_000) -> bool:
    """True iff every integer solution satisfies ``cut`` (brute force).

    Designs are enumerated as the exact arc set used by a path choice;
    opening extra arcs only raises the left-hand side since ``z``
    coefficients in the template are non-negative.
    """
    from .oracles import integer_solutions

    for opened, choice in integer_solutions(inst, cap):
        z = np.zeros(inst.num_arcs)
        z[list(opened)] = 1.0
        y: dict[tuple[int, int], float] = {}
        for p in choice:
            for a in p.arcs:
                y[(a, p.commodity)] = 1.0
        if cut.lhs(z, y) < cut.rhs - 1e-9:
            return False
    return True
