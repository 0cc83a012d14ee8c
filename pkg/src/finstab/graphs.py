"""Random directed topologies: Erdős–Rényi, Bollobás-style scale-free, in-arborescence.

All generators take a seed (an int or a ``numpy.random.Generator``) and are
pure functions of ``(parameters, seed)``.  Node ids are ``0..n-1``; an edge
``(u, v)`` means *u lends to v* (u is the creditor, v the borrower).
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ParameterError
from .seeding import as_generator

__all__ = [
    "DirectedGraph",
    "SfParams",
    "SF_DEGREE_3",
    "SF_DEGREE_6",
    "DegreeProfile",
    "generate_er",
    "generate_scale_free",
    "generate_in_arborescence",
    "degree_profile",
    "empty_graph",
]

_MAX_RESAMPLE = 100


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Simple directed graph on nodes ``0..n-1``.

    ``edges`` is an ``(m, 2)`` integer array of ``(source, target)`` rows; no
    self-loops, no repeated ordered pairs.
    """

    n: int
    edges: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ParameterError(f"graph needs at least one node, got n={n}")
        edges = np.asarray(self.edges, dtype=np.int64)
        if edges.size == 0:
            edges = np.zeros((0, 2), dtype=np.int64)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise ParameterError(f"edges must have shape (m, 2), got {edges.shape}")
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ParameterError("edge endpoint outside 0..n-1")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ParameterError("self-loops are not allowed")
        codes = edges[:, 0] * n + edges[:, 1]
        if np.unique(codes).size != codes.size:
            raise ParameterError("duplicate edges are not allowed")
        edges = edges.copy()
        edges.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", edges)

    @property
    def m(self):
        return self.edges.shape[0]

    @property
    def sources(self):
        return self.edges[:, 0]

    @property
    def targets(self):
        return self.edges[:, 1]

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self):
        return f"DirectedGraph(n={self.n}, m={self.m})"


def empty_graph(n):
    """``n`` isolated nodes."""
    return DirectedGraph(n, np.zeros((0, 2), dtype=np.int64))


class DegreeProfile(NamedTuple):
    in_degree: np.ndarray
    out_degree: np.ndarray


def degree_profile(g: DirectedGraph) -> DegreeProfile:
    """Per-node in- and out-degree arrays (each sums to ``g.m``)."""
    return DegreeProfile(
        np.bincount(g.targets, minlength=g.n),
        np.bincount(g.sources, minlength=g.n),
    )


def generate_er(n: int, avg_degree: float, seed) -> DirectedGraph:
    """Directed Erdős–Rényi graph: each ordered pair ``(u, v)``, ``u != v``, is
    an edge independently with probability ``min(avg_degree / n, 1)``.

    Parameters
    ----------
    n : int
        Number of nodes.
    avg_degree : float
        Target mean out-degree ``d``; the expected edge count is ``(n - 1) d``
        (``n (n - 1) p`` with ``p = d / n``).
    seed : int or numpy.random.Generator

    Raises
    ------
    ParameterError
        If ``n < 1``, ``avg_degree <= 0``, or ``avg_degree > n`` (``d / n``
        would not be a probability).
    """
    n = int(n)
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not avg_degree > 0:
        raise ParameterError(f"avg_degree must be positive, got {avg_degree}")
    if n == 1:
        return empty_graph(1)
    if avg_degree > n:
        raise ParameterError(f"avg_degree={avg_degree} exceeds n={n}")
    rng = as_generator(seed)
    p = min(avg_degree / n, 1.0)
    adj = rng.random((n, n)) < p
    np.fill_diagonal(adj, False)
    return DirectedGraph(n, np.argwhere(adj))


@dataclass(frozen=True)
class SfParams:
    """Growth probabilities for the directed scale-free process.

    ``a``: new node with an out-edge to an existing node; ``b``: new edge
    between existing nodes; ``eta``: new node with an in-edge from an existing
    node.  ``delta_in`` / ``delta_out`` shift the attachment weights.
    """

    a: float
    b: float
    eta: float
    delta_in: float = 0.2
    delta_out: float = 0.0

    def __post_init__(self):
        probs = (self.a, self.b, self.eta)
        if min(probs) < 0:
            raise ParameterError(f"a, b, eta must be non-negative, got {probs}")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ParameterError(f"a + b + eta must equal 1, got {sum(probs)!r}")
        if self.delta_in < 0 or self.delta_out < 0:
            raise ParameterError("delta_in and delta_out must be non-negative")

    @classmethod
    def for_edges_per_node(cls, ratio, new_node_split=(0.41, 0.05), delta_in=0.2, delta_out=0.0):
        """Parameters whose expected edge/node ratio is about ``ratio``.

        Every successful step adds one edge and a new node arrives with
        probability ``a + eta``, so ``m / n`` tends to ``1 / (a + eta)``.  The
        split between ``a`` and ``eta`` follows ``new_node_split``.
        """
        if ratio < 1:
            raise ParameterError(f"edge/node ratio must be >= 1, got {ratio}")
        grow = 1.0 / ratio
        sa, se = new_node_split
        a = grow * sa / (sa + se)
        eta = grow - a
        return cls(a=a, b=1.0 - a - eta, eta=eta, delta_in=delta_in, delta_out=delta_out)


# Calibrated so that m/n is 3 and 6 on average (see tests/test_graphs.py).
SF_DEGREE_3 = SfParams.for_edges_per_node(3.0)
SF_DEGREE_6 = SfParams.for_edges_per_node(6.0)


def generate_scale_free(n: int, params: SfParams, seed) -> DirectedGraph:
    """Grow a directed scale-free graph until it has ``n`` nodes.

    Starts from one isolated node.  Each step applies one of three rules
    (probabilities ``a``, ``b``, ``eta``); targets are drawn with probability
    proportional to ``d_in(u) + delta_in`` and sources proportional to
    ``d_out(u) + delta_out``.  A rule-``b`` draw that would create a self-loop
    or a repeated edge is redrawn up to 100 times, after which the step adds
    nothing.
    """
    n = int(n)
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if n > 1 and params.a == 0 and params.eta == 0:
        raise ParameterError("a = eta = 0: the process never adds nodes")
    rng = as_generator(seed)
    src: list[int] = []
    dst: list[int] = []
    present: set[int] = set()
    nodes = 1
    d_in_shift, d_out_shift = params.delta_in, params.delta_out
    a_cut, b_cut = params.a, params.a + params.b
    random, integers = rng.random, rng.integers

    def pick(endpoints, shift):
        # P(u) = (deg(u) + shift) / (ell + shift * nodes): an endpoint of a
        # uniform existing edge with prob ell / total, else a uniform node.
        ell = len(endpoints)
        total = ell + shift * nodes
        if total <= 0:
            return -1
        if random() * total < ell:
            return endpoints[integers(ell)]
        return int(integers(nodes))

    stalled = 0
    while nodes < n:
        r = random()
        added = False
        if r < a_cut:
            w = pick(dst, d_in_shift)
            if w >= 0:
                v = nodes
                nodes += 1
                src.append(v)
                dst.append(w)
                present.add(v * n + w)
                added = True
        elif r < b_cut:
            for _ in range(_MAX_RESAMPLE):
                v = pick(src, d_out_shift)
                w = pick(dst, d_in_shift)
                if v < 0 or w < 0:
                    break
                code = v * n + w
                if v != w and code not in present:
                    src.append(v)
                    dst.append(w)
                    present.add(code)
                    added = True
                    break
        else:
            v = pick(src, d_out_shift)
            if v >= 0:
                w = nodes
                nodes += 1
                src.append(v)
                dst.append(w)
                present.add(v * n + w)
                added = True
        stalled = 0 if added else stalled + 1
        if stalled > 10_000:
            raise ParameterError(f"growth stalled at {nodes} nodes with {params}")
    return DirectedGraph(n, np.column_stack([src, dst]) if src else np.zeros((0, 2)))


def generate_in_arborescence(n: int, seed) -> DirectedGraph:
    """Random in-arborescence rooted at node 0 by preferential attachment.

    Node ``x`` (``x = 1..n-1``) attaches to an existing node chosen with
    probability proportional to its current (undirected) degree; the edge is
    oriented towards the root, i.e. ``(x, parent)``.
    """
    n = int(n)
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = as_generator(seed)
    parent = np.zeros(max(n - 1, 0), dtype=np.int64)
    # every node appears once per incident edge, so a uniform entry is degree-biased
    ends = np.zeros(2 * max(n - 1, 0), dtype=np.int64)
    draws = rng.random(max(n - 1, 0))
    for x in range(1, n):
        k = 2 * (x - 1)
        u = 0 if x == 1 else int(ends[int(draws[x - 1] * k)])
        parent[x - 1] = u
        ends[k] = x
        ends[k + 1] = u
    edges = np.column_stack([np.arange(1, n, dtype=np.int64), parent])
    return DirectedGraph(n, edges)
