"""Asset/liability structure on top of a graph.

External assets ``E`` are spread over nodes through shares ``sigma_v`` and
interbank exposure ``I`` over edges through weights ``w(e)``.  The balance
sheet of node ``v`` follows::

    iota_v = sum of w(v, u)          interbank asset (lending)
    b_v    = sum of w(u, v)          interbank borrowing
    e_v    = b_v - iota_v + sigma_v E effective external asset
    a_v    = b_v + sigma_v E          total asset
    c_v    = gamma a_v                net worth
"""

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import ParameterError, StructureError, ValidationError
from .graphs import DirectedGraph
from .seeding import as_generator

__all__ = [
    "AssetConfig",
    "HeteroParams",
    "HETERO_1095",
    "HETERO_2060",
    "WeightedNetwork",
    "NodeSheet",
    "NodeSheets",
    "assign_homogeneous",
    "assign_heterogeneous",
    "compute_sheets",
    "scale_assets",
    "round_half_up",
]

HOMOGENEOUS = "homogeneous"
HETEROGENEOUS = "heterogeneous"


def round_half_up(x):
    """Nearest integer, halves rounded up; tolerant to float noise like 0.1*50."""
    return int(math.floor(x + 0.5 + 1e-9))


def _floor(x):
    return int(math.floor(x + 1e-9))


@dataclass(frozen=True)
class AssetConfig:
    """Total external asset ``E``, total interbank exposure ``I`` and equity ratio ``gamma``."""

    total_external: float
    total_interbank: float
    gamma: float

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ParameterError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.total_interbank > 0:
            raise ParameterError(f"total interbank exposure must be positive, got {self.total_interbank}")
        if not self.total_external >= 0:
            raise ParameterError(f"total external asset must be non-negative, got {self.total_external}")

    @classmethod
    def normalized(cls, g: DirectedGraph, e_over_i, gamma):
        """``I = m`` and ``E = (E/I) m``; the sweep always works in these units."""
        if g.m == 0:
            raise StructureError("cannot normalize I = m on a graph without edges")
        return cls(total_external=e_over_i * g.m, total_interbank=float(g.m), gamma=gamma)


@dataclass(frozen=True)
class HeteroParams:
    """A fraction ``alpha`` of the nodes holds a fraction ``beta`` of the assets."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise ParameterError(f"alpha and beta must lie in (0, 1), got {self.alpha}, {self.beta}")


HETERO_1095 = HeteroParams(0.1, 0.95)
HETERO_2060 = HeteroParams(0.2, 0.6)


@dataclass(frozen=True, eq=False)
class WeightedNetwork:
    """Graph plus edge weights ``w`` (aligned with ``graph.edges``) and node shares ``sigma``."""

    graph: DirectedGraph
    weights: np.ndarray
    sigma: np.ndarray
    config: AssetConfig
    model: str = HOMOGENEOUS

    def __post_init__(self):
        g = self.graph
        w = np.array(self.weights, dtype=float).reshape(-1)
        s = np.array(self.sigma, dtype=float).reshape(-1)
        if w.shape != (g.m,):
            raise ParameterError(f"expected {g.m} edge weights, got {w.shape[0]}")
        if s.shape != (g.n,):
            raise ParameterError(f"expected {g.n} node shares, got {s.shape[0]}")
        if np.any(w <= 0):
            raise ParameterError("edge weights must be positive")
        if np.any(s < 0):
            raise ParameterError("node shares must be non-negative")
        if abs(s.sum() - 1.0) > 1e-9:
            raise ParameterError(f"node shares sum to {s.sum()!r}, not 1")
        total = self.config.total_interbank
        if abs(w.sum() - total) > 1e-9 * total:
            raise ParameterError(f"edge weights sum to {w.sum()!r}, not I={total!r}")
        if self.model not in (HOMOGENEOUS, HETEROGENEOUS):
            raise ParameterError(f"unknown model label {self.model!r}")
        w.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sigma", s)

    @property
    def n(self):
        return self.graph.n

    @property
    def m(self):
        return self.graph.m

    def with_config(self, config):
        return replace(self, config=config)


class NodeSheet(NamedTuple):
    iota: float
    b: float
    e: float
    a: float
    c: float


@dataclass(frozen=True)
class NodeSheets:
    """Balance sheets of all nodes, one array per line item."""

    iota: np.ndarray
    b: np.ndarray
    e: np.ndarray
    a: np.ndarray
    c: np.ndarray

    def __len__(self):
        return self.iota.shape[0]

    def __getitem__(self, v):
        return NodeSheet(
            float(self.iota[v]), float(self.b[v]), float(self.e[v]), float(self.a[v]), float(self.c[v])
        )

    def __iter__(self):
        return (self[v] for v in range(len(self)))


def assign_homogeneous(g: DirectedGraph, cfg: AssetConfig) -> WeightedNetwork:
    """Equal shares: ``sigma_v = 1/n`` and ``w(e) = I/m``."""
    if g.m == 0:
        raise StructureError("homogeneous assignment needs at least one edge when I > 0")
    sigma = np.full(g.n, 1.0 / g.n)
    weights = np.full(g.m, cfg.total_interbank / g.m)
    return WeightedNetwork(g, weights, sigma, cfg, HOMOGENEOUS)


def assign_heterogeneous(g: DirectedGraph, cfg: AssetConfig, hp: HeteroParams, seed) -> WeightedNetwork:
    """(alpha, beta)-heterogeneous assignment.

    A uniform random set of ``round(alpha n)`` privileged nodes shares
    ``beta E`` equally; the other nodes share ``(1 - beta) E``.  Among the
    edges touching a privileged node, a uniform random subset of
    ``max(1, floor(alpha |touching|))`` edges shares ``beta I``; all remaining
    edges share ``(1 - beta) I``.
    """
    n, m = g.n, g.m
    k_nodes = round_half_up(hp.alpha * n)
    if k_nodes < 1:
        raise ParameterError(f"alpha*n = {hp.alpha * n} rounds to no privileged node")
    if k_nodes >= n:
        raise StructureError(f"alpha*n rounds to all {n} nodes; (1-beta)E cannot be placed")
    rng = as_generator(seed)
    privileged = rng.choice(n, size=k_nodes, replace=False)
    sigma = np.full(n, (1.0 - hp.beta) / (n - k_nodes))
    sigma[privileged] = hp.beta / k_nodes

    is_priv = np.zeros(n, dtype=bool)
    is_priv[privileged] = True
    touching = np.flatnonzero(is_priv[g.sources] | is_priv[g.targets])
    if touching.size == 0:
        raise StructureError("no edge touches a privileged node; beta*I cannot be placed")
    k_edges = max(1, _floor(hp.alpha * touching.size))
    if k_edges >= m:
        raise StructureError("every edge is privileged; (1-beta)I cannot be placed")
    heavy = rng.choice(touching, size=k_edges, replace=False)
    total = cfg.total_interbank
    weights = np.full(m, (1.0 - hp.beta) * total / (m - k_edges))
    weights[heavy] = hp.beta * total / k_edges
    return WeightedNetwork(g, weights, sigma, cfg, HETEROGENEOUS)


def compute_sheets(net: WeightedNetwork, validate=True) -> NodeSheets:
    """Balance sheets of every node.

    Raises
    ------
    ValidationError
        If ``validate`` and some node has ``e_v <= 0``; the error names the
        lowest such node id.
    """
    g, w = net.graph, net.weights
    iota = np.bincount(g.sources, weights=w, minlength=g.n)
    b = np.bincount(g.targets, weights=w, minlength=g.n)
    external = net.sigma * net.config.total_external
    e = b - iota + external
    a = b + external
    c = net.config.gamma * a
    if validate:
        bad = np.flatnonzero(e <= 0)
        if bad.size:
            raise ValidationError(bad[0], e[bad[0]])
    return NodeSheets(iota, b, e, a, c)


def scale_assets(net: WeightedNetwork, mu: float) -> WeightedNetwork:
    """Multiply every edge weight and ``E`` (hence ``I``) by ``mu``."""
    if not mu > 0:
        raise ParameterError(f"scale factor must be positive, got {mu}")
    cfg = net.config
    scaled = AssetConfig(cfg.total_external * mu, cfg.total_interbank * mu, cfg.gamma)
    return WeightedNetwork(net.graph, net.weights * mu, net.sigma, scaled, net.model)
