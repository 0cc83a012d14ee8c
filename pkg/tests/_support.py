"""Small builders shared by the test modules."""

import numpy as np

from finstab.balance import AssetConfig, assign_homogeneous
from finstab.graphs import DirectedGraph


def two_node(total_external=4.0, gamma=0.25):
    """Edge (0, 1) with w = 1: node 0 lends to node 1."""
    g = DirectedGraph(2, [[0, 1]])
    return assign_homogeneous(g, AssetConfig(total_external, 1.0, gamma))


def homog(g, e_over_i=2.0, gamma=0.25):
    return assign_homogeneous(g, AssetConfig.normalized(g, e_over_i, gamma))


def random_graph(rng, n, p):
    adj = rng.random((n, n)) < p
    np.fill_diagonal(adj, False)
    return DirectedGraph(n, np.argwhere(adj))


def edgeless(n, total_external=1.0, gamma=0.25):
    """Stand-in for a network without edges.

    ``WeightedNetwork`` requires ``I > 0`` and so cannot represent an empty
    graph; the cascade code only reads these attributes.
    """
    from types import SimpleNamespace

    from finstab.graphs import empty_graph

    cfg = SimpleNamespace(total_external=total_external, total_interbank=0.0, gamma=gamma)
    return SimpleNamespace(graph=empty_graph(n), weights=np.zeros(0), sigma=np.full(n, 1.0 / n),
                           config=cfg, model="homogeneous", n=n, m=0)


def creditors_alive(g, result, v):
    """Creditors of ``v`` still alive in the round ``v`` failed."""
    t = result.death_round[v]
    return [u for u, x in g.edges.tolist() if x == v and (result.death_round[u] < 0 or result.death_round[u] >= t)]
