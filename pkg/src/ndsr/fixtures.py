"""The two small counterexample networks used throughout the tests."""

from __future__ import annotations

import numpy as np

from .core import Instance

# Figure-1 node ids
S, ONE, T = 0, 1, 2


def figure1() -> Instance:
    """Three nodes, one commodity, one metric with limit 2, no flow costs.

    Arcs, in id order: ``(s,1)`` F=0 w=2, ``(s,t)`` F=1 w=1, ``(1,t)`` F=0 w=1.
    The only feasible path is the direct arc, so the integer optimum is 1
    while the arc-flow relaxation splits flow and pays 1/2.
    """
    arcs = ((S, ONE), (S, T), (ONE, T))
    return Instance(
        num_nodes=3,
        arcs=arcs,
        activation_cost=np.array([0.0, 1.0, 0.0]),
        commodities=((S, T),),
        num_metrics=1,
        flow_cost=np.zeros((1, 3)),
        weights=np.array([[[2.0], [1.0], [1.0]]]),
        limits=np.array([[2.0]]),
        name="figure1",
    )


# Figure-2 node ids: three sources, six middle nodes, three sinks
S1, S2, S3 = 0, 1, 2
N3, N4, N5, N6, N7, N8 = 3, 4, 5, 6, 7, 8
T2, T3, T1 = 9, 10, 11

FIGURE2_ARCS = (
    (S1, N3), (S1, N5), (S2, N3), (S2, N4), (S3, N4), (S3, N5),
    (N6, T1), (N6, T2), (N7, T2), (N7, T3), (N8, T3), (N8, T1),
    (N3, N6), (N4, N7), (N5, N8),
)
ARC_36, ARC_47, ARC_58 = 12, 13, 14


def figure2() -> Instance:
    """Three commodities that each have two paths through the costly middle arcs.

    Middle arcs ``(3,6)``, ``(4,7)``, ``(5,8)`` cost 1 to activate, all others 0.
    Commodity ``i`` can use exactly two of the three middle arcs, and every
    pair is shared by one commodity, so the path relaxation opens each at 1/2
    (value 3/2) while any integer design needs two of them.
    """
    A = len(FIGURE2_ARCS)
    F = np.zeros(A)
    F[[ARC_36, ARC_47, ARC_58]] = 1.0
    return Instance(
        num_nodes=12,
        arcs=FIGURE2_ARCS,
        activation_cost=F,
        commodities=((S1, T1), (S2, T2), (S3, T3)),
        num_metrics=0,
        flow_cost=np.zeros((3, A)),
        weights=np.zeros((3, A, 0)),
        limits=np.zeros((3, 0)),
        name="figure2",
    )
