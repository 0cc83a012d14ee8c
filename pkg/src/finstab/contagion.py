"""Initial shocks, the insolvency cascade and the vulnerability index.

Cascade dynamics, with ``dead(t)`` the nodes removed before round ``t`` and
``d_in(v, t)`` the number of in-neighbours of ``v`` outside ``dead(t)``::

    c_u(t+1) = c_u(t) - sum over v alive, c_v(t) < 0, (u, v) in E of
               min(|c_v(t)|, b_v) / d_in(v, t)

A node with ``c_u(t) < 0`` joins the dead set at ``t + 1``.  In round ``t`` it
still receives losses and passes its own loss to its surviving creditors.  The
loop stops after the first round in which no node fails, or once every node
is dead.

"Negative" means below ``-1e-9 (a_v + iota_v)``: equities that are zero in
exact arithmetic but land a few ulps either side of it would otherwise make
the outcome depend on the currency unit.
"""

import enum
import logging
import statistics
from dataclasses import dataclass, field

import numpy as np

from .balance import HETEROGENEOUS, HOMOGENEOUS, NodeSheets, WeightedNetwork, compute_sheets, round_half_up
from .errors import ParameterError, ValidationError
from .seeding import as_generator, derive_seed

__all__ = [
    "ShockMechanism",
    "ShockSpec",
    "CascadeResult",
    "XiEstimate",
    "VALIDITY_POLICIES",
    "select_shock_set",
    "apply_initial_shock",
    "cascade",
    "insolvency_threshold",
    "reference_cascade",
    "run_trial",
    "check_validity",
    "vulnerability_index",
]

log = logging.getLogger(__name__)

# How strictly e_v > 0 is enforced before a cascade runs:
#   "network": every node (the balance-sheet assumption taken literally)
#   "shocked": only nodes in the shocked set, the only place e_v enters the dynamics
#   "off":     never
VALIDITY_POLICIES = ("network", "shocked", "off")

ZERO_TOL = 1e-9


def insolvency_threshold(sheets: NodeSheets) -> np.ndarray:
    """Per-node level below which equity counts as negative."""
    return -ZERO_TOL * (sheets.a + sheets.iota)


class ShockMechanism(enum.Enum):
    IDIOSYNCRATIC = "idiosyncratic"
    COORDINATED_UNWEIGHTED = "coordinated-unweighted"
    COORDINATED_WEIGHTED = "coordinated-weighted"

    @classmethod
    def coordinated_for(cls, model):
        """The adversarial mechanism that matches a network model."""
        if model == HETEROGENEOUS:
            return cls.COORDINATED_WEIGHTED
        return cls.COORDINATED_UNWEIGHTED


@dataclass(frozen=True)
class ShockSpec:
    """Shock a fraction ``k_fraction`` of the nodes, each losing ``phi e_v``."""

    k_fraction: float
    phi: float

    def __post_init__(self):
        if not 0 < self.k_fraction <= 1:
            raise ParameterError(f"K must lie in (0, 1], got {self.k_fraction}")
        if not 0 < self.phi <= 1:
            raise ParameterError(f"phi must lie in (0, 1], got {self.phi}")

    def check_gamma(self, gamma):
        if not self.phi > gamma:
            raise ParameterError(f"shock severity phi={self.phi} must exceed gamma={gamma}")


@dataclass(frozen=True, eq=False)
class CascadeResult:
    """Outcome of one cascade.

    ``death_round[v]`` is the round ``t`` with ``v`` in ``dead(t)`` but not in
    ``dead(t-1)`` (``-1`` for survivors).  ``failure_equity[v]`` is the
    negative equity that triggered the failure and ``outflow[v]`` the total
    loss ``v`` passed to its creditors in that round.  ``equity`` holds final
    equities; dead nodes keep their last value.
    """

    rounds: int
    dead_trace: tuple
    death_round: np.ndarray
    equity: np.ndarray
    failure_equity: np.ndarray
    outflow: np.ndarray

    @property
    def dead_mask(self):
        return self.death_round >= 0

    @property
    def n_dead(self):
        return int(np.count_nonzero(self.death_round >= 0))

    @property
    def final_dead(self):
        return frozenset(np.flatnonzero(self.death_round >= 0).tolist())

    def dead_at(self, t):
        """Node set ``dead(t)``."""
        return frozenset(np.flatnonzero((self.death_round >= 0) & (self.death_round <= t)).tolist())


@dataclass(frozen=True)
class XiEstimate:
    mean: float
    std: float
    valid: int
    invalid: int
    samples: tuple = field(default=(), repr=False)


def _shock_size(n, k_fraction):
    size = round_half_up(k_fraction * n)
    if size < 1:
        raise ParameterError(f"K*n = {k_fraction * n} rounds to an empty shock set")
    return min(size, n)


def _top_k_random_ties(keys, size, rng):
    order = np.argsort(-keys, kind="stable")
    cut = keys[order[size - 1]]
    above = np.flatnonzero(keys > cut)
    tied = np.flatnonzero(keys == cut)
    chosen = rng.choice(tied, size=size - above.size, replace=False)
    return np.sort(np.concatenate([above, chosen]))


def select_shock_set(net: WeightedNetwork, mech: ShockMechanism, k_fraction: float, seed) -> np.ndarray:
    """Sorted node ids of the ``round(K n)`` nodes that receive the initial shock.

    Coordinated mechanisms take the nodes of largest (weighted) in-degree;
    ties at the cut are broken uniformly at random.
    """
    n = net.n
    size = _shock_size(n, k_fraction)
    rng = as_generator(seed)
    if mech is ShockMechanism.IDIOSYNCRATIC:
        return np.sort(rng.choice(n, size=size, replace=False))
    if mech is ShockMechanism.COORDINATED_UNWEIGHTED:
        if net.model != HOMOGENEOUS:
            raise ParameterError("unweighted coordinated shocks apply to homogeneous networks")
        keys = np.bincount(net.graph.targets, minlength=n).astype(float)
    elif mech is ShockMechanism.COORDINATED_WEIGHTED:
        if net.model != HETEROGENEOUS:
            raise ParameterError("weighted coordinated shocks apply to heterogeneous networks")
        keys = np.bincount(net.graph.targets, weights=net.weights, minlength=n)
        # sums of the same weights in different order may differ in the last bits
        keys = np.round(keys, 9)
    else:
        raise ParameterError(f"unknown shock mechanism {mech!r}")
    return _top_k_random_ties(keys, size, rng)


def apply_initial_shock(sheets: NodeSheets, v_s, phi: float) -> np.ndarray:
    """Equities at ``t = 0``: ``c_v - phi e_v`` for shocked nodes, ``c_v`` otherwise."""
    c0 = np.array(sheets.c, dtype=float)
    idx = np.asarray(v_s, dtype=np.int64)
    c0[idx] -= phi * sheets.e[idx]
    return c0


def cascade(net: WeightedNetwork, sheets: NodeSheets, v_s, phi: float) -> CascadeResult:
    """Run the insolvency cascade from the shocked set ``v_s``."""
    n = net.n
    src, dst = net.graph.sources, net.graph.targets
    b = sheets.b
    c = apply_initial_shock(sheets, v_s, phi)
    floor = insolvency_threshold(sheets)
    alive = np.ones(n, dtype=bool)
    d_in = np.bincount(dst, minlength=n)
    death_round = np.full(n, -1, dtype=np.int64)
    failure_equity = np.zeros(n)
    outflow = np.zeros(n)
    trace = []
    t = 0
    while alive.any():
        failing = alive & (c < floor)
        if failing.any():
            share = np.zeros(n)
            f = np.flatnonzero(failing & (d_in > 0))
            share[f] = np.minimum(-c[f], b[f]) / d_in[f]
            hit = alive[src] & failing[dst]
            loss = np.bincount(src[hit], weights=share[dst[hit]], minlength=n)
            outflow += np.bincount(dst[hit], weights=share[dst[hit]], minlength=n)
            failure_equity[failing] = c[failing]
            c = c - loss
            alive &= ~failing
        t += 1
        death_round[failing] = t
        trace.append(n - int(np.count_nonzero(alive)))
        if not failing.any():
            break
        d_in = np.bincount(dst[alive[src]], minlength=n)
    return CascadeResult(t, tuple(trace), death_round, c, failure_equity, outflow)


def reference_cascade(net: WeightedNetwork, sheets: NodeSheets, v_s, phi: float) -> CascadeResult:
    """Literal, loop-by-loop transcription of the cascade for cross-checking.

    Recomputes every in-degree from the raw edge list in every round and
    uses plain Python containers throughout.
    """
    n = net.n
    edges = [(int(u), int(v)) for u, v in net.graph.edges]
    b = [float(x) for x in sheets.b]
    c = {u: float(sheets.c[u]) for u in range(n)}
    floor = [-ZERO_TOL * (float(sheets.a[u]) + float(sheets.iota[u])) for u in range(n)]
    for u in set(int(x) for x in v_s):
        c[u] = c[u] - phi * float(sheets.e[u])
    dead = set()
    d_in = {v: sum(1 for (_, y) in edges if y == v) for v in range(n)}
    death_round = [-1] * n
    failure_equity = [0.0] * n
    outflow = [0.0] * n
    trace = []
    t = 0
    go_on = True
    while go_on and len(dead) != n:
        new_c = {}
        new_dead = set(dead)
        for u in range(n):
            if u in dead:
                continue
            new_c[u] = c[u]
            for v in range(n):
                if v in dead:
                    continue
                if c[v] < floor[v] and (u, v) in edges:
                    amount = min(abs(c[v]), b[v]) / d_in[v]
                    new_c[u] = new_c[u] - amount
                    outflow[v] += amount
            if c[u] < floor[u]:
                new_dead.add(u)
        for u in new_dead - dead:
            death_round[u] = t + 1
            failure_equity[u] = c[u]
        c.update(new_c)
        t += 1
        trace.append(len(new_dead))
        if new_dead == dead:
            go_on = False
        dead = new_dead
        for u in range(n):
            if u not in dead:
                d_in[u] = len({v for (v, y) in edges if y == u and v not in dead})
    equity = np.array([c[u] for u in range(n)])
    return CascadeResult(
        t, tuple(trace), np.array(death_round, dtype=np.int64), equity,
        np.array(failure_equity), np.array(outflow),
    )


def check_validity(sheets, v_s, validity):
    """Raise ValidationError if ``sheets`` break the ``validity`` policy for shock set ``v_s``."""
    if validity == "off":
        return
    if validity == "network":
        bad = np.flatnonzero(sheets.e <= 0)
    elif validity == "shocked":
        idx = np.asarray(v_s, dtype=np.int64)
        bad = idx[sheets.e[idx] <= 0]
    else:
        raise ParameterError(f"validity must be one of {VALIDITY_POLICIES}, got {validity!r}")
    if bad.size:
        raise ValidationError(bad[0], sheets.e[bad[0]])


def run_trial(net: WeightedNetwork, mech: ShockMechanism, spec: ShockSpec, seed, validity="network"):
    """Shock one network and return ``(fraction dead, CascadeResult)``.

    Raises ValidationError when the network fails the ``validity`` policy.
    """
    spec.check_gamma(net.config.gamma)
    sheets = compute_sheets(net, validate=False)
    if validity == "network":
        check_validity(sheets, (), validity)
    v_s = select_shock_set(net, mech, spec.k_fraction, seed)
    if validity != "network":
        check_validity(sheets, v_s, validity)
    result = cascade(net, sheets, v_s, spec.phi)
    return result.n_dead / net.n, result


def summarize(samples, invalid):
    """Mean and sample standard deviation of per-trial dead fractions."""
    samples = tuple(float(x) for x in samples)
    if not samples:
        return XiEstimate(float("nan"), float("nan"), 0, invalid, ())
    std = statistics.stdev(samples) if len(samples) > 1 else 0.0
    return XiEstimate(statistics.fmean(samples), std, len(samples), invalid, samples)


def vulnerability_index(factory, mech: ShockMechanism, spec: ShockSpec, trials: int, seed,
                        validity="network") -> XiEstimate:
    """Estimate the vulnerability index: mean fraction of dead nodes over ``trials``.

    ``factory(rng)`` must return a fresh ``WeightedNetwork`` for each trial.
    Trial ``i`` uses the generator seeded with ``derive_seed(seed, "trial", i)``
    for both the network draw and the shocked set.  Trials whose network
    fails the validity policy are counted as invalid and skipped.

    Raises
    ------
    ValidationError
        If every trial is invalid.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    samples = []
    invalid = 0
    last_error = None
    for i in range(trials):
        rng = as_generator(derive_seed(seed, "trial", i))
        net = factory(rng)
        try:
            frac, _ = run_trial(net, mech, spec, rng, validity)
        except ValidationError as exc:
            invalid += 1
            last_error = exc
            continue
        samples.append(frac)
    if not samples:
        raise last_error
    if invalid:
        log.info("%d of %d trials rejected by validity policy %r", invalid, trials, validity)
    return summarize(samples, invalid)
