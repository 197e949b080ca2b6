"""Seeded random toy instances for oracle comparisons.

Independent of the package generator: arcs, weights and limits are drawn
directly so tests do not inherit generator assumptions.
"""

import numpy as np

from ndsr.core import Instance

# pass/fail lines from test_acceptance.py, printed by conftest at the end of the run
ACCEPTANCE_LINES: list[str] = []


def random_toy(seed, max_nodes=12, max_arcs=30, max_commodities=5, metrics=None, shared=True):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, max_nodes + 1))
    cap = min(max_arcs, n * (n - 1))
    A = int(rng.integers(min(n, cap), cap + 1))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    idx = rng.choice(len(pairs), size=A, replace=False)
    arcs = tuple(sorted(pairs[i] for i in idx))
    K = int(rng.integers(1, max_commodities + 1))
    M = int(rng.integers(0, 3)) if metrics is None else metrics
    comm = []
    for _ in range(K):
        s, t = rng.choice(n, size=2, replace=False)
        comm.append((int(s), int(t)))
    F = rng.integers(0, 10, size=A).astype(float)
    if shared:
        c = np.broadcast_to(rng.integers(0, 5, size=A).astype(float), (K, A))
        w = np.broadcast_to(rng.integers(0, 6, size=(A, M)).astype(float), (K, A, M))
    else:
        c = rng.integers(0, 5, size=(K, A)).astype(float)
        w = rng.integers(0, 6, size=(K, A, M)).astype(float)
    W = rng.integers(2, 14, size=(K, M)).astype(float)
    return Instance(
        num_nodes=n,
        arcs=arcs,
        activation_cost=F,
        commodities=tuple(comm),
        num_metrics=M,
        flow_cost=c,
        weights=w,
        limits=W,
        name=f"toy{seed}",
    )


def feasible_toys(count, start=0, max_combinations=100_000, **kw):
    """First ``count`` toys (from seed ``start``) whose commodities all have a path.

    Toys with more than ``max_combinations`` path tuples are skipped so the
    exhaustive solver stays cheap.
    """
    import math

    from ndsr.oracles import dfs_enumerate

    out = []
    seed = start
    while len(out) < count:
        inst = random_toy(seed, **kw)
        seed += 1
        sizes = [len(dfs_enumerate(inst, k)) for k in range(inst.num_commodities)]
        if all(sizes) and math.prod(sizes) <= max_combinations:
            out.append(inst)
    return out


def triangle_gadget(seed, small=False):
    """Middle arcs shared by commodity pairs, in the style of the Figure 2 network.

    Commodity ``k`` owns two middle arcs and has exactly one path through
    each, so every commodity is a CUT pair; triangles in the pair graph give
    fractional LPs that the cover family can cut off.  ``small`` keeps
    three middle arcs and three commodities (12 nodes).
    """
    rng = np.random.default_rng(seed)
    L = 3 if small else int(rng.integers(3, 6))
    all_pairs = [(i, j) for i in range(L) for j in range(i + 1, L)]
    K = 3 if small else int(rng.integers(3, min(6, len(all_pairs)) + 1))
    chosen = [all_pairs[i] for i in rng.choice(len(all_pairs), size=K, replace=False)]
    # middle arc j runs j -> L+j; commodity k has source 2L+2k and sink 2L+2k+1
    n = 2 * L + 2 * K
    arcs = {(j, L + j) for j in range(L)}
    comm = []
    for k, pair in enumerate(chosen):
        s, t = 2 * L + 2 * k, 2 * L + 2 * k + 1
        comm.append((s, t))
        for j in pair:
            arcs.update({(s, j), (L + j, t)})
    arcs = sorted(arcs)
    A = len(arcs)
    F = np.array([float(rng.integers(2, 6)) if v == u + L and u < L else 0.0 for u, v in arcs])
    c = rng.integers(0, 2, size=(K, A)).astype(float)
    return Instance(
        num_nodes=n,
        arcs=tuple(arcs),
        activation_cost=F,
        commodities=tuple(comm),
        num_metrics=0,
        flow_cost=c,
        weights=np.zeros((K, A, 0)),
        limits=np.zeros((K, 0)),
        name=f"gadget{seed}",
    )
