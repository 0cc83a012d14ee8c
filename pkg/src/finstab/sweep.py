"""Parameter grid, replicated cell runs, and the aggregate tables built from them."""

import functools
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np
import pandas as pd

from . import graphs
from .balance import (
    HETERO_1095,
    HETERO_2060,
    AssetConfig,
    assign_heterogeneous,
    assign_homogeneous,
    compute_sheets,
)
from .contagion import ShockMechanism, ShockSpec, cascade, check_validity, run_trial, summarize
from .errors import PairingError, ParameterError, StructureError, ValidationError
from .seeding import as_generator, derive_seed

__all__ = [
    "TOPOLOGIES",
    "MODELS",
    "MECHANISMS",
    "ParamGrid",
    "Cell",
    "CellResult",
    "enumerate_grid",
    "gamma_values",
    "cell_seed",
    "build_graph",
    "build_network",
    "stream_seeds",
    "run_cell",
    "run_sweep",
    "results_frame",
    "compare_stability",
    "residual_instability",
    "ei_sensitivity",
    "lambda_ratio",
    "delta_ratio",
    "lambda_table",
    "delta_table",
    "coordinated_vs_idiosyncratic",
    "heterogeneity_table",
    "connectivity_table",
    "threshold_scan",
]

log = logging.getLogger(__name__)

TOPOLOGIES = ("arb", "er3", "er6", "sf3", "sf6")
MODELS = ("homog", "het-1095", "het-2060")
MECHANISMS = ("coord", "idio")

TOPOLOGY_NAMES = {
    "arb": "in-arborescence",
    "er3": "ER average degree 3",
    "er6": "ER average degree 6",
    "sf3": "SF average degree 3",
    "sf6": "SF average degree 6",
}
_HETERO = {"het-1095": HETERO_1095, "het-2060": HETERO_2060}

KEY_COLUMNS = ["topology", "model", "mechanism", "n", "e_over_i", "phi", "gamma", "k"]
VALUE_COLUMNS = ["xi_mean", "xi_std", "invalid"]
CELL_COLUMNS = KEY_COLUMNS + VALUE_COLUMNS

FULL_PHI = (0.5, 0.6, 0.7, 0.8, 0.9)
FULL_K = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
FULL_EI = tuple(0.25 * i for i in range(1, 15))
FULL_N = (50, 100, 300)


def _num(x):
    return round(float(x), 10)


def gamma_values(phi, step=0.05):
    """``step, 2 step, ...`` up to ``phi - step`` (at least one value)."""
    count = max(1, int(math.floor(phi / step + 1e-9)) - 1)
    return tuple(_num(step * i) for i in range(1, count + 1))


@dataclass(frozen=True)
class ParamGrid:
    """Axes of the sweep.  The default is the full grid."""

    topologies: tuple = TOPOLOGIES
    models: tuple = MODELS
    mechanisms: tuple = MECHANISMS
    n_values: tuple = FULL_N
    e_over_i: tuple = FULL_EI
    phi_values: tuple = FULL_PHI
    k_values: tuple = FULL_K
    gammas: tuple = None  # None: the gamma rule step..phi-step, per phi
    replicates: int = 10

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in ("replicates", "gammas"):
                continue
            value = tuple(value)
            if not value:
                raise ParameterError(f"grid dimension {f.name!r} is empty")
            object.__setattr__(self, f.name, value)
        for name, allowed in (("topologies", TOPOLOGIES), ("models", MODELS), ("mechanisms", MECHANISMS)):
            bad = set(getattr(self, name)) - set(allowed)
            if bad:
                raise ParameterError(f"unknown {name}: {sorted(bad)}; choose from {allowed}")
        if self.gammas is not None:
            object.__setattr__(self, "gammas", tuple(_num(g) for g in self.gammas))
            if not self.gammas:
                raise ParameterError("grid dimension 'gammas' is empty")
        if int(self.replicates) < 1:
            raise ParameterError("replicates must be >= 1")
        for name in ("e_over_i", "phi_values", "k_values"):
            object.__setattr__(self, name, tuple(_num(x) for x in getattr(self, name)))
        object.__setattr__(self, "n_values", tuple(int(x) for x in self.n_values))

    @classmethod
    def reduced(cls, **overrides):
        """Desk-scale grid: n=50, four E/I values, three K values, phi in {0.5, 0.8}."""
        base = dict(n_values=(50,), e_over_i=(0.25, 1.0, 2.0, 3.5), k_values=(0.1, 0.5, 0.9),
                    phi_values=(0.5, 0.8), replicates=10)
        base.update(overrides)
        return cls(**base)

    def gammas_for(self, phi):
        if self.gammas is None:
            return gamma_values(phi)
        return tuple(g for g in self.gammas if g < phi - 1e-12)


@dataclass(frozen=True, order=True)
class Cell:
    topology: str
    model: str
    mechanism: str
    n: int
    e_over_i: float
    phi: float
    gamma: float
    k: float

    @property
    def key(self):
        """Canonical key string, stable across runs and platforms."""
        return ";".join(f"{name}={getattr(self, name)!r}" if isinstance(getattr(self, name), float)
                        else f"{name}={getattr(self, name)}" for name in KEY_COLUMNS)

    @property
    def shock_mechanism(self):
        if self.mechanism == "idio":
            return ShockMechanism.IDIOSYNCRATIC
        return ShockMechanism.coordinated_for("heterogeneous" if self.model in _HETERO else "homogeneous")


@dataclass(frozen=True)
class CellResult:
    cell: Cell
    xi_mean: float
    xi_std: float
    invalid: int
    samples: tuple = field(default=(), repr=False, compare=False)

    @property
    def is_valid(self):
        return not math.isnan(self.xi_mean)

    def row(self):
        c = self.cell
        return [c.topology, c.model, c.mechanism, c.n, c.e_over_i, c.phi, c.gamma, c.k,
                self.xi_mean, self.xi_std, self.invalid]


def enumerate_grid(grid: ParamGrid) -> list:
    """Every cell of ``grid`` in a fixed order (gamma varies per phi)."""
    cells = []
    for topo, model, mech, n, ei, phi in itertools.product(
        grid.topologies, grid.models, grid.mechanisms, grid.n_values, grid.e_over_i, grid.phi_values
    ):
        gammas = grid.gammas_for(phi)
        if not gammas:
            raise ParameterError(f"no gamma below phi={phi}")
        for gamma in gammas:
            for k in grid.k_values:
                cells.append(Cell(topo, model, mech, n, ei, phi, gamma, k))
    return cells


def cell_seed(root, cell: Cell):
    """Per-cell seed: a 64-bit hash of the root seed and the canonical cell key."""
    return derive_seed(root, cell.key)


@functools.lru_cache(maxsize=512)
def build_graph(topology, n, seed):
    if topology == "arb":
        return graphs.generate_in_arborescence(n, seed)
    if topology in ("er3", "er6"):
        return graphs.generate_er(n, 3.0 if topology == "er3" else 6.0, seed)
    if topology in ("sf3", "sf6"):
        params = graphs.SF_DEGREE_3 if topology == "sf3" else graphs.SF_DEGREE_6
        return graphs.generate_scale_free(n, params, seed)
    raise ParameterError(f"unknown topology {topology!r}")


def build_network(g, model, e_over_i, gamma, seed):
    """Weighted network with ``I = m`` and ``E = (E/I) m``."""
    cfg = AssetConfig.normalized(g, e_over_i, gamma)
    if model == "homog":
        return assign_homogeneous(g, cfg)
    if model in _HETERO:
        return assign_heterogeneous(g, cfg, _HETERO[model], seed)
    raise ParameterError(f"unknown model {model!r}")


def stream_seeds(root, cell, replicate, common):
    """Seeds for (graph, asset assignment, shock selection) of one replicate.

    With ``common`` each stream is keyed only by the coordinates it depends
    on, so cells that differ in phi, gamma, E/I (or mechanism, for the graph)
    see the same networks.  Otherwise everything hangs off ``cell_seed``.
    """
    c = cell
    if common:
        return (
            derive_seed(root, "graph", c.topology, c.n, replicate),
            derive_seed(root, "assign", c.topology, c.model, c.n, replicate),
            derive_seed(root, "shock", c.topology, c.model, c.mechanism, c.n, repr(c.k), replicate),
        )
    base = cell_seed(root, cell)
    return tuple(derive_seed(base, part, replicate) for part in ("graph", "assign", "shock"))


def run_cell(cell: Cell, replicates: int, seed, validity="off", common=True) -> CellResult:
    """Average dead fraction of ``cell`` over ``replicates`` fresh networks.

    Replicates whose network fails the validity policy (or cannot carry the
    asset structure) are counted in ``invalid``; if none is valid the cell
    gets ``xi_mean = nan``.
    """
    if replicates < 1:
        raise ParameterError(f"replicates must be >= 1, got {replicates}")
    spec = ShockSpec(cell.k, cell.phi)
    spec.check_gamma(cell.gamma)
    mech = cell.shock_mechanism
    samples = []
    invalid = 0
    for r in range(replicates):
        g_seed, a_seed, s_seed = stream_seeds(seed, cell, r, common)
        g = build_graph(cell.topology, cell.n, g_seed)
        try:
            net = build_network(g, cell.model, cell.e_over_i, cell.gamma, a_seed)
            frac, _ = run_trial(net, mech, spec, as_generator(s_seed), validity)
        except (ValidationError, StructureError):
            invalid += 1
            continue
        samples.append(frac)
    est = summarize(samples, invalid)
    return CellResult(cell, est.mean, est.std, invalid, est.samples)


def _run_chunk(args):
    cells, replicates, seed, validity, common = args
    return [run_cell(c, replicates, seed, validity, common) for c in cells]


def run_sweep(cells, replicates, seed, jobs=1, validity="off", common=True, progress=None,
              chunk_size=64):
    """Run every cell; the result list is in the same order as ``cells``.

    Results do not depend on ``jobs`` or ``chunk_size``.  ``progress`` (if
    given) is called with ``(done, total)`` after each chunk.
    """
    cells = list(cells)
    chunks = [cells[i:i + chunk_size] for i in range(0, len(cells), chunk_size)]
    tasks = [(chunk, replicates, seed, validity, common) for chunk in chunks]
    out = []
    if jobs == 1 or len(chunks) <= 1:
        mapped = map(_run_chunk, tasks)
        executor = None
    else:
        executor = ProcessPoolExecutor(max_workers=jobs)
        mapped = executor.map(_run_chunk, tasks)
    try:
        for part in mapped:
            out.extend(part)
            if progress is not None:
                progress(len(out), len(cells))
    finally:
        if executor is not None:
            executor.shutdown()
    return out


def results_frame(results) -> pd.DataFrame:
    """Cell results as a DataFrame with the ``cells.csv`` columns."""
    if isinstance(results, pd.DataFrame):
        return results
    return pd.DataFrame([r.row() for r in results], columns=CELL_COLUMNS)


def _tolerance(n):
    return 1.0 / (3.0 * np.asarray(n, dtype=float))


class Percentage(NamedTuple):
    percent: float
    pairs: int
    excluded: int

    def __float__(self):
        return float(self.percent)


def _pair(a, b, ignore):
    on = [c for c in KEY_COLUMNS if c not in ignore]
    a = results_frame(a)[CELL_COLUMNS]
    b = results_frame(b)[CELL_COLUMNS]
    for side, frame in (("a", a), ("b", b)):
        if frame.duplicated(on).any():
            raise PairingError(f"results_{side} has repeated keys on {on}")
    merged = a.merge(b, on=on, how="outer", suffixes=("_a", "_b"), indicator=True)
    unmatched = merged[merged["_merge"] != "both"]
    if len(unmatched):
        raise PairingError(f"{len(unmatched)} cells have no partner (first: {unmatched.iloc[0][on].to_dict()})")
    return merged


def compare_stability(results_a, results_b, ignore=("model",)) -> Percentage:
    """Percentage of paired cells where ``xi_a >= xi_b - 1/(3n)``.

    Cells are paired on every key column except those in ``ignore``.  Pairs
    where either side is invalid are excluded and counted.
    """
    merged = _pair(results_a, results_b, ignore)
    ok = merged["xi_mean_a"].notna() & merged["xi_mean_b"].notna()
    excluded = int((~ok).sum())
    m = merged[ok]
    if len(m) == 0:
        return Percentage(float("nan"), 0, excluded)
    hits = m["xi_mean_a"] >= m["xi_mean_b"] - _tolerance(m["n"])
    return Percentage(100.0 * float(hits.mean()), len(m), excluded)


def _select(frame, **eq):
    mask = np.ones(len(frame), dtype=bool)
    for col, value in eq.items():
        if isinstance(value, float):
            mask &= np.isclose(frame[col].to_numpy(dtype=float), value, atol=1e-9)
        else:
            mask &= (frame[col] == value).to_numpy()
    return frame[mask]


def heterogeneity_table(results) -> pd.DataFrame:
    """Share of cells where each heterogeneous model is at most as stable as homogeneous."""
    df = results_frame(results)
    rows = []
    for mech in sorted(df["mechanism"].unique()):
        for topo in TOPOLOGIES:
            base = _select(df, topology=topo, mechanism=mech, model="homog")
            if base.empty:
                continue
            for model in _HETERO:
                other = _select(df, topology=topo, mechanism=mech, model=model)
                if other.empty:
                    continue
                p = compare_stability(other, base, ignore=("model",))
                rows.append(dict(mechanism=mech, topology=topo, model=model, percent=p.percent,
                                 pairs=p.pairs, excluded=p.excluded))
    return pd.DataFrame(rows, columns=["mechanism", "topology", "model", "percent", "pairs", "excluded"])


def connectivity_table(results) -> pd.DataFrame:
    """Share of cells where the sparse variant (degree 3) is at least as stable as the dense one."""
    df = results_frame(results)
    rows = []
    for family in ("er", "sf"):
        for model in sorted(df["model"].unique()):
            for mech in sorted(df["mechanism"].unique()):
                sparse = _select(df, topology=f"{family}3", model=model, mechanism=mech)
                dense = _select(df, topology=f"{family}6", model=model, mechanism=mech)
                if sparse.empty or dense.empty:
                    continue
                p = compare_stability(dense, sparse, ignore=("topology",))
                rows.append(dict(family=family, model=model, mechanism=mech, percent=p.percent,
                                 pairs=p.pairs, excluded=p.excluded))
    return pd.DataFrame(rows, columns=["family", "model", "mechanism", "percent", "pairs", "excluded"])


def coordinated_vs_idiosyncratic(results) -> pd.DataFrame:
    """Per (topology, model): share of cells with ``xi_coord >= xi_idio - 1/(3n)``."""
    df = results_frame(results)
    rows = []
    for topo in TOPOLOGIES:
        for model in MODELS:
            coord = _select(df, topology=topo, model=model, mechanism="coord")
            idio = _select(df, topology=topo, model=model, mechanism="idio")
            if coord.empty or idio.empty:
                continue
            p = compare_stability(coord, idio, ignore=("mechanism",))
            rows.append(dict(topology=topo, model=model, percent=p.percent, pairs=p.pairs,
                             excluded=p.excluded))
    return pd.DataFrame(rows, columns=["topology", "model", "percent", "pairs", "excluded"])


def residual_instability(results, offsets=(0.05, 0.10), thresholds=(0.05, 0.1, 0.2),
                         mechanism="coord") -> pd.DataFrame:
    """Percentage of cells with ``xi < threshold`` when gamma sits just below phi.

    One row per (n, model, topology, phi, gamma) with ``gamma = phi - offset``;
    the remaining axes (E/I, K) are pooled.  Invalid cells are excluded and
    counted.
    """
    df = results_frame(results)
    df = df[df["mechanism"] == mechanism]
    rows = []
    for (n, model, topo, phi), grp in df.groupby(["n", "model", "topology", "phi"], sort=True):
        for off in offsets:
            sub = _select(grp, gamma=_num(phi - off))
            if sub.empty:
                continue
            valid = sub[sub["xi_mean"].notna()]
            row = dict(n=n, model=model, topology=topo, phi=phi, gamma=_num(phi - off),
                       cells=len(valid), excluded=len(sub) - len(valid))
            for thr in thresholds:
                row[f"xi<{thr:g}"] = 100.0 * float((valid["xi_mean"] < thr).mean()) if len(valid) else float("nan")
            rows.append(row)
    cols = ["n", "model", "topology", "phi", "gamma"] + [f"xi<{t:g}" for t in thresholds] + ["cells", "excluded"]
    return pd.DataFrame(rows, columns=cols)


def ei_sensitivity(results) -> pd.DataFrame:
    """Mean over configurations of ``max - min`` of xi along the E/I axis.

    A configuration is a fixed (n, phi, gamma, K); the table has one row per
    (topology, model, mechanism).
    """
    df = results_frame(results)
    df = df[df["xi_mean"].notna()]
    keys = ["topology", "model", "mechanism", "n", "phi", "gamma", "k"]
    spans = df.groupby(keys)["xi_mean"].agg(lambda s: float(s.max() - s.min()) if len(s) > 1 else np.nan)
    spans = spans.dropna().rename("span").reset_index()
    out = spans.groupby(["topology", "model", "mechanism"])["span"].agg(["mean", "size"]).reset_index()
    return out.rename(columns={"mean": "mean_abs_change", "size": "configurations"})


class Ratio(NamedTuple):
    value: float  # nan when the series is flat
    reference: float  # value under uniform growth


def _window_ratio(xs, ys, lo, hi):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.size < 2:
        raise ParameterError("need matching x and y series with at least two points")
    keep = ~np.isnan(ys)
    xs, ys = xs[keep], ys[keep]
    if not (np.isclose(xs, lo).any() and np.isclose(xs, hi).any()):
        raise ParameterError(f"window endpoints {lo}, {hi} must be grid points of {xs.tolist()}")
    inside = (xs >= lo - 1e-9) & (xs <= hi + 1e-9)
    total = float(ys.max() - ys.min())
    reference = (hi - lo) / float(xs.max() - xs.min())
    if total <= 0:
        return Ratio(float("nan"), reference)
    return Ratio(float(ys[inside].max() - ys[inside].min()) / total, reference)


def lambda_ratio(gammas, xis, window=(0.05, 0.2)) -> Ratio:
    """Share of the total change of xi over gamma that happens inside ``window``."""
    return _window_ratio(gammas, xis, *window)


def delta_ratio(e_over_i, xis, window=(0.5, 1.0)) -> Ratio:
    """Share of the total change of xi over E/I that happens inside ``window``."""
    return _window_ratio(e_over_i, xis, *window)


def lambda_table(results, topologies=("er6", "sf6"), model="homog", mechanism="coord") -> pd.DataFrame:
    """Lambda for every (topology, n, phi, E/I, K) series over gamma."""
    df = results_frame(results)
    df = df[(df["model"] == model) & (df["mechanism"] == mechanism) & df["topology"].isin(topologies)]
    rows = []
    for key, grp in df.groupby(["topology", "n", "phi", "e_over_i", "k"], sort=True):
        grp = grp.sort_values("gamma")
        try:
            r = lambda_ratio(grp["gamma"], grp["xi_mean"])
        except ParameterError:
            continue
        rows.append(dict(zip(["topology", "n", "phi", "e_over_i", "k"], key), value=r.value, reference=r.reference))
    return pd.DataFrame(rows, columns=["topology", "n", "phi", "e_over_i", "k", "value", "reference"])


def delta_table(results, topology="arb", model="homog") -> pd.DataFrame:
    """Delta for every (mechanism, n, phi, K) series over E/I with gamma closest to phi/2."""
    df = results_frame(results)
    df = df[(df["model"] == model) & (df["topology"] == topology)]
    rows = []
    for key, grp in df.groupby(["mechanism", "n", "phi", "k"], sort=True):
        phi = key[2]
        gammas = np.unique(grp["gamma"])
        gamma = gammas[np.argmin(np.abs(gammas - phi / 2))]
        if abs(gamma - phi / 2) > 0.025 + 1e-9:
            continue
        series = _select(grp, gamma=float(gamma)).sort_values("e_over_i")
        try:
            r = delta_ratio(series["e_over_i"], series["xi_mean"])
        except ParameterError:
            continue
        rows.append(dict(zip(["mechanism", "n", "phi", "k"], key), gamma=float(gamma), value=r.value,
                         reference=r.reference))
    return pd.DataFrame(rows, columns=["mechanism", "n", "phi", "k", "gamma", "value", "reference"])


class ThresholdScan(NamedTuple):
    leaf: int
    parent: int
    threshold: float  # nan if the leaf fails (or survives) over the whole bracket
    monotone: bool
    e_values: np.ndarray
    fails: np.ndarray


def leaf_survives(g, leaf, parent, total_external, phi, gamma, validity="shocked"):
    """Whether ``leaf`` survives when only ``parent`` is shocked (homogeneous, I = m)."""
    net = assign_homogeneous(g, AssetConfig(total_external, float(g.m), gamma))
    sheets = compute_sheets(net, validate=False)
    check_validity(sheets, [parent], validity)
    result = cascade(net, sheets, [parent], phi)
    return not bool(result.dead_mask[leaf])


def threshold_scan(g, leaf, phi=0.5, gamma=0.25, e_range=None, points=41, tol=1e-6, validity="shocked"):
    """Locate the external-asset level above which ``leaf`` stops failing.

    ``leaf`` must have in-degree 0 and lend to a node ``parent`` with
    in-degree > 1.  Only ``parent`` is shocked.  The survival indicator is
    scanned on ``points`` values of E and, if it switches from failing to
    surviving exactly once, the switch is refined by bisection.

    With unit weights the leaf's own ``e_u = E/n - 1`` is negative below
    ``E = n``, which is where the threshold sits, so by default only the
    shocked parent is checked.  ``validity="network"`` checks every node.
    A ValidationError propagates.
    """
    prof = graphs.degree_profile(g)
    outs = g.targets[g.sources == leaf]
    if prof.in_degree[leaf] != 0 or outs.size != 1:
        raise ParameterError(f"node {leaf} is not a leaf with a single out-edge")
    parent = int(outs[0])
    if prof.in_degree[parent] <= 1:
        raise ParameterError(f"parent {parent} of leaf {leaf} has in-degree <= 1")
    m = float(g.m)
    if e_range is None:
        e_range = (0.0, 4.0 * m)
    lo_e, hi_e = e_range
    es = np.linspace(lo_e, hi_e, points)
    fails = np.array([not leaf_survives(g, leaf, parent, e, phi, gamma, validity) for e in es])
    switches = np.count_nonzero(fails[1:] != fails[:-1])
    monotone = switches <= 1 and (switches == 0 or (fails[0] and not fails[-1]))
    if switches != 1 or not monotone:
        return ThresholdScan(leaf, parent, float("nan"), monotone, es, fails)
    i = int(np.flatnonzero(fails[1:] != fails[:-1])[0])
    lo, hi = es[i], es[i + 1]
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if leaf_survives(g, leaf, parent, mid, phi, gamma, validity):
            hi = mid
        else:
            lo = mid
    return ThresholdScan(leaf, parent, 0.5 * (lo + hi), monotone, es, fails)
