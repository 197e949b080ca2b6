"""Instance and path data model, JSON I/O, validation and path arithmetic."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

#: Absolute tolerance used on every weight-limit comparison.
EPS = 1e-9


class InstanceError(ValueError):
    """Raised when an instance document is malformed or inconsistent."""


class ParseError(InstanceError):
    pass


class DimensionError(InstanceError):
    pass


class NegativeValueError(InstanceError):
    pass


class BrokenChainError(ValueError):
    """Raised when an arc list does not chain from source to sink."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    """A Network Design with Service Requirements instance.

    Arcs are referenced everywhere by their 0-based position in ``arcs``.

    Attributes:
        num_nodes: number of nodes, ids ``0..num_nodes-1``.
        arcs: tuple of ``(tail, head)`` pairs.
        activation_cost: ``F[a]``, shape ``(A,)``.
        commodities: tuple of ``(source, sink)`` pairs.
        num_metrics: number of service metrics.
        flow_cost: ``c[k][a]``, shape ``(K, A)``.
        weights: ``w[k][a][m]``, shape ``(K, A, M)``.
        limits: ``W[k][m]``, shape ``(K, M)``.
    """

    num_nodes: int
    arcs: tuple[tuple[int, int], ...]
    activation_cost: np.ndarray
    commodities: tuple[tuple[int, int], ...]
    num_metrics: int
    flow_cost: np.ndarray
    weights: np.ndarray
    limits: np.ndarray
    name: str = ""
    out_arcs: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    in_arcs: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        A, K, M = len(self.arcs), len(self.commodities), self.num_metrics
        object.__setattr__(self, "arcs", tuple((int(u), int(v)) for u, v in self.arcs))
        object.__setattr__(
            self, "commodities", tuple((int(s), int(t)) for s, t in self.commodities)
        )
        F = _frozen(np.reshape(self.activation_cost, (A,)))
        c = _frozen(np.reshape(self.flow_cost, (K, A)))
        w = _frozen(np.reshape(self.weights, (K, A, M)))
        W = _frozen(np.reshape(self.limits, (K, M)))
        object.__setattr__(self, "activation_cost", F)
        object.__setattr__(self, "flow_cost", c)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "limits", W)
        out: list[list[int]] = [[] for _ in range(self.num_nodes)]
        inn: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for a, (u, v) in enumerate(self.arcs):
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise DimensionError(f"arc {a} references a node outside 0..{self.num_nodes - 1}")
            out[u].append(a)
            inn[v].append(a)
        object.__setattr__(self, "out_arcs", tuple(tuple(x) for x in out))
        object.__setattr__(self, "in_arcs", tuple(tuple(x) for x in inn))

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    @property
    def num_commodities(self) -> int:
        return len(self.commodities)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.num_nodes == other.num_nodes
            and self.arcs == other.arcs
            and self.commodities == other.commodities
            and self.num_metrics == other.num_metrics
            and np.array_equal(self.activation_cost, other.activation_cost)
            and np.array_equal(self.flow_cost, other.flow_cost)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.limits, other.limits)
        )

    __hash__ = None  # type: ignore[assignment]

    def replace(self, **changes) -> "Instance":
        kw = dict(
            num_nodes=self.num_nodes,
            arcs=self.arcs,
            activation_cost=self.activation_cost,
            commodities=self.commodities,
            num_metrics=self.num_metrics,
            flow_cost=self.flow_cost,
            weights=self.weights,
            limits=self.limits,
            name=self.name,
        )
        kw.update(changes)
        return Instance(**kw)


@dataclass(frozen=True)
class Path:
    """A simple source-to-sink arc sequence for one commodity."""

    commodity: int
    arcs: tuple[int, ...]
    cost: float
    weight_total: tuple[float, ...]

    def __len__(self):
        return len(self.arcs)


def make_path(inst: Instance, k: int, arcs: Sequence[int]) -> Path:
    cost, weights, _ = path_metrics(inst, k, arcs)
    return Path(k, tuple(int(a) for a in arcs), cost, weights)


def path_metrics(inst: Instance, k: int, arcs: Sequence[int]) -> tuple[float, tuple[float, ...], bool]:
    """Cost, per-metric weight totals and feasibility of an arc sequence.

    Raises:
        BrokenChainError: if ``arcs`` does not chain from ``s^k`` to ``t^k``.
    """
    s, t = inst.commodities[k]
    node = s
    seen = {s}
    simple = True
    for a in arcs:
        u, v = inst.arcs[a]
        if u != node:
            raise BrokenChainError(f"arc {a}=({u},{v}) does not leave node {node}")
        if v in seen:
            simple = False
        seen.add(v)
        node = v
    if node != t:
        raise BrokenChainError(f"arc sequence ends at {node}, expected sink {t}")
    idx = list(arcs)
    cost = float(inst.flow_cost[k, idx].sum()) if idx else 0.0
    if inst.num_metrics:
        w = inst.weights[k, idx, :].sum(axis=0) if idx else np.zeros(inst.num_metrics)
        weights = tuple(float(x) for x in w)
    else:
        weights = ()
    feasible = simple and all(weights[m] <= inst.limits[k, m] + EPS for m in range(inst.num_metrics))
    return cost, weights, feasible


# --------------------------------------------------------------------------
# serialization


def _num(x: float):
    x = float(x)
    if not math.isfinite(x):
        raise InstanceError(f"non-finite value {x!r}")
    if x == int(x) and abs(x) < 2**53:
        return int(x)
    return x


def _block(arr: np.ndarray, K: int, key: str):
    """Return the shared/expanded document block for a (K, ...) array."""
    if K >= 1 and all(np.array_equal(arr[0], arr[k]) for k in range(1, K)):
        return {"shared": True, key: _nested(arr[0])}
    return {"shared": False, key: _nested(arr)}


def _nested(arr: np.ndarray):
    if arr.ndim == 0:
        return _num(arr)
    return [_nested(x) for x in arr]


def instance_to_dict(inst: Instance) -> dict:
    K = inst.num_commodities
    return {
        "name": inst.name,
        "num_nodes": inst.num_nodes,
        "num_metrics": inst.num_metrics,
        "arcs": [
            {"tail": u, "head": v, "F": _num(f)}
            for (u, v), f in zip(inst.arcs, inst.activation_cost)
        ],
        "commodities": [
            {"source": s, "sink": t, "W": [_num(x) for x in inst.limits[k]]}
            for k, (s, t) in enumerate(inst.commodities)
        ],
        "flow_costs": _block(inst.flow_cost, K, "c"),
        "weights": _block(inst.weights, K, "w"),
    }


def save_instance(inst: Instance, fp: IO[str] | None = None) -> str:
    """Serialize canonically; equal instances produce equal text."""
    text = json.dumps(instance_to_dict(inst), separators=(",", ":"), allow_nan=False) + "\n"
    if fp is not None:
        fp.write(text)
    return text


def _get(doc: dict, key: str, where: str = ""):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"missing field {where}{key!r}")
    return doc[key]


def _nonneg(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{where}: expected a number, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise ParseError(f"{where}: non-finite value")
    if x < 0:
        raise NegativeValueError(f"{where}: negative value {x}")
    return x


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError(f"{where}: expected an integer, got {x!r}")
    return x


def _expand(block, key: str, K: int, shape: tuple[int, ...], where: str) -> np.ndarray:
    shared = _get(block, "shared", where + ".")
    data = _get(block, key, where + ".")
    try:
        arr = np.array(data, dtype=float) if data != [] else np.zeros((0,))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}.{key}: ragged or non-numeric array") from exc
    if shared:
        if arr.size == 0 and int(np.prod(shape)) == 0:
            arr = np.zeros(shape)
        if arr.shape != shape:
            raise DimensionError(f"{where}.{key}: shape {arr.shape}, expected {shape}")
        out = np.broadcast_to(arr, (K,) + shape).copy()
    else:
        full = (K,) + shape
        if arr.size == 0 and int(np.prod(full)) == 0:
            arr = np.zeros(full)
        if arr.shape != full:
            raise DimensionError(f"{where}.{key}: shape {arr.shape}, expected {full}")
        out = arr
    if not np.all(np.isfinite(out)):
        raise ParseError(f"{where}.{key}: non-finite value")
    if np.any(out < 0):
        raise NegativeValueError(f"{where}.{key}: negative value")
    return out


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise ParseError("top-level document must be an object")
    name = _get(doc, "name")
    if not isinstance(name, str):
        raise ParseError("name: expected a string")
    n = _int(_get(doc, "num_nodes"), "num_nodes")
    M = _int(_get(doc, "num_metrics"), "num_metrics")
    if n < 0 or M < 0:
        raise NegativeValueError("num_nodes/num_metrics must be non-negative")
    arcs, F = [], []
    for i, a in enumerate(_get(doc, "arcs")):
        where = f"arcs[{i}]"
        u = _int(_get(a, "tail", where + "."), where + ".tail")
        v = _int(_get(a, "head", where + "."), where + ".head")
        if not (0 <= u < n and 0 <= v < n):
            raise DimensionError(f"{where}: node id outside 0..{n - 1}")
        arcs.append((u, v))
        F.append(_nonneg(_get(a, "F", where + "."), where + ".F"))
    comms, W = [], []
    for i, c in enumerate(_get(doc, "commodities")):
        where = f"commodities[{i}]"
        s = _int(_get(c, "source", where + "."), where + ".source")
        t = _int(_get(c, "sink", where + "."), where + ".sink")
        if not (0 <= s < n and 0 <= t < n):
            raise DimensionError(f"{where}: node id outside 0..{n - 1}")
        lim = _get(c, "W", where + ".")
        if not isinstance(lim, list) or len(lim) != M:
            raise DimensionError(f"{where}.W: expected {M} limits")
        comms.append((s, t))
        W.append([_nonneg(x, f"{where}.W[{m}]") for m, x in enumerate(lim)])
    K, A = len(comms), len(arcs)
    c = _expand(_get(doc, "flow_costs"), "c", K, (A,), "flow_costs")
    wblock = _get(doc, "weights")
    wkey = "c" if isinstance(wblock, dict) and "w" not in wblock and "c" in wblock else "w"
    w = _expand(wblock, wkey, K, (A, M), "weights")
    return Instance(
        num_nodes=n,
        arcs=tuple(arcs),
        activation_cost=np.array(F),
        commodities=tuple(comms),
        num_metrics=M,
        flow_cost=c,
        weights=w,
        limits=np.array(W).reshape(K, M),
        name=name,
    )


def load_instance(source) -> Instance:
    """Load an instance from a path, text, bytes or a readable stream."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, (bytes, bytearray)):
        text = bytes(source)
    else:
        with open(source, "rb") as fh:
            text = fh.read()
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(doc)


def loads_instance(text: str) -> Instance:
    return load_instance(text.encode("utf-8"))


# --------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    structural: list[str] = field(default_factory=list)
    feasible: list[bool] = field(default_factory=list)

    @property
    def infeasible_commodities(self) -> list[int]:
        return [k for k, ok in enumerate(self.feasible) if not ok]

    @property
    def ok(self) -> bool:
        return not self.structural and all(self.feasible)

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "structural": list(self.structural),
            "feasible": list(self.feasible),
        }


def validate_instance(inst: Instance) -> ValidationReport:
    """Check structural invariants and per-commodity path feasibility."""
    from .csp import CspQuery, constrained_shortest_path

    report = ValidationReport()
    seen = set()
    for a, (u, v) in enumerate(inst.arcs):
        if u == v:
            report.structural.append(f"arc {a} is a self-loop at node {u}")
        if (u, v) in seen:
            report.structural.append(f"arc {a} duplicates ({u},{v})")
        seen.add((u, v))
    for k, (s, t) in enumerate(inst.commodities):
        if s == t:
            report.structural.append(f"commodity {k} has source == sink ({s})")
    for label, arr in (
        ("activation cost", inst.activation_cost),
        ("flow cost", inst.flow_cost),
        ("weight", inst.weights),
        ("limit", inst.limits),
    ):
        if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0)):
            report.structural.append(f"{label} values must be finite and non-negative")
    zero = np.zeros(inst.num_arcs)
    for k, (s, t) in enumerate(inst.commodities):
        if s == t:
            report.feasible.append(False)
            continue
        p = constrained_shortest_path(inst, CspQuery(k, arc_costs=zero))
        report.feasible.append(p is not None)
    return report
