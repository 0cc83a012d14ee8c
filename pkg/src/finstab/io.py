"""Plain-text formats: edge lists, weighted networks, grid files, CSV tables, series.

Every file written here starts with one comment line::

    # finstab <version> root_seed=<seed> grid=<grid hash or ->

Readers skip lines starting with ``#``.
"""

import csv
import hashlib
import io
import math
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .balance import AssetConfig, WeightedNetwork
from .errors import ParameterError
from .graphs import DirectedGraph
from .sweep import CELL_COLUMNS, KEY_COLUMNS, ParamGrid

__all__ = [
    "header_line",
    "grid_hash",
    "format_graph",
    "write_graph",
    "read_graph",
    "write_network",
    "read_network",
    "parse_grid",
    "read_grid",
    "CASCADE_COLUMNS",
    "cascade_row",
    "write_cells",
    "read_cells",
    "write_table",
    "emit_series",
]

CASCADE_COLUMNS = ["seed", "n", "topology", "mechanism", "k", "phi", "gamma", "e_over_i", "dead", "rounds"]


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def header_line(seed=None, grid=None):
    seed_txt = "-" if seed is None else str(seed)
    grid_txt = "-" if grid is None else grid
    return f"# finstab {__version__} root_seed={seed_txt} grid={grid_txt}"


def grid_hash(grid: ParamGrid):
    """Short stable hash of a grid's axes."""
    text = repr(sorted((k, repr(v)) for k, v in vars(grid).items()))
    return hashlib.blake2b(text.encode(), digest_size=6).hexdigest()


def _data_lines(text):
    return [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def format_graph(g: DirectedGraph, seed=None):
    lines = [header_line(seed), f"{g.n} {g.m}"]
    lines += [f"{u} {v}" for u, v in g.edges.tolist()]
    return "\n".join(lines) + "\n"


def write_graph(g: DirectedGraph, path, seed=None):
    Path(path).write_text(format_graph(g, seed))


def read_graph(path) -> DirectedGraph:
    rows = _data_lines(Path(path).read_text())
    if not rows or len(rows[0]) != 2:
        raise ParameterError(f"{path}: first data line must be 'n m'")
    n, m = int(rows[0][0]), int(rows[0][1])
    edges = rows[1:1 + m]
    if len(edges) != m or any(len(r) < 2 for r in edges):
        raise ParameterError(f"{path}: expected {m} edge lines 'src dst'")
    return DirectedGraph(n, np.array([[int(r[0]), int(r[1])] for r in edges], dtype=np.int64).reshape(-1, 2))


def write_network(net: WeightedNetwork, path, seed=None):
    """Edge list with a weight column, followed by the node table ``id sigma``."""
    g = net.graph
    lines = [header_line(seed), f"{g.n} {g.m}"]
    lines += [f"{u} {v} {_fmt(w)}" for (u, v), w in zip(g.edges.tolist(), net.weights.tolist())]
    lines += [f"{v} {_fmt(s)}" for v, s in enumerate(net.sigma.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_network(path, total_external, gamma, model="homogeneous") -> WeightedNetwork:
    """Inverse of :func:`write_network`; ``I`` is the sum of the stored weights."""
    rows = _data_lines(Path(path).read_text())
    n, m = int(rows[0][0]), int(rows[0][1])
    edge_rows = rows[1:1 + m]
    node_rows = rows[1 + m:1 + m + n]
    if len(edge_rows) != m or len(node_rows) != n:
        raise ParameterError(f"{path}: expected {m} edge lines and {n} node lines")
    edges = np.array([[int(r[0]), int(r[1])] for r in edge_rows], dtype=np.int64).reshape(-1, 2)
    weights = np.array([float(r[2]) for r in edge_rows])
    sigma = np.zeros(n)
    for r in node_rows:
        sigma[int(r[0])] = float(r[1])
    cfg = AssetConfig(total_external, float(weights.sum()), gamma)
    return WeightedNetwork(DirectedGraph(n, edges), weights, sigma, cfg, model)


_GRID_KEYS = {
    "topologies": ("topologies", str),
    "topology": ("topologies", str),
    "models": ("models", str),
    "model": ("models", str),
    "mechanisms": ("mechanisms", str),
    "mechanism": ("mechanisms", str),
    "n": ("n_values", int),
    "e_over_i": ("e_over_i", float),
    "ei": ("e_over_i", float),
    "phi": ("phi_values", float),
    "k": ("k_values", float),
    "gamma": ("gammas", float),
    "replicates": ("replicates", int),
}


def parse_grid(text) -> ParamGrid:
    """Parse ``key = v1, v2, ...`` lines.  Missing keys fall back to the reduced grid.

    Raises ParameterError on an empty file, an unknown key or an empty value list.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"grid line {lineno}: expected 'key = values'")
        key, _, rhs = line.partition("=")
        key = key.strip().lower()
        if key not in _GRID_KEYS:
            raise ParameterError(f"grid line {lineno}: unknown key {key!r}")
        field_name, conv = _GRID_KEYS[key]
        items = [x.strip() for x in rhs.split(",") if x.strip()]
        if not items:
            raise ParameterError(f"grid line {lineno}: no values for {key!r}")
        try:
            parsed = [conv(x) for x in items]
        except ValueError as exc:
            raise ParameterError(f"grid line {lineno}: {exc}") from exc
        values[field_name] = parsed[0] if field_name == "replicates" else tuple(parsed)
    if not values:
        raise ParameterError("grid file defines no parameters")
    return ParamGrid.reduced(**values)


def read_grid(path) -> ParamGrid:
    return parse_grid(Path(path).read_text())


def cascade_row(seed, n, topology, mechanism, k, phi, gamma, e_over_i, dead, rounds):
    return ",".join(_fmt(x) for x in (seed, n, topology, mechanism, k, phi, gamma, e_over_i, dead, rounds))


def _csv_text(columns, rows, header):
    buf = io.StringIO()
    buf.write(header + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def write_cells(results, path, seed=None, grid=None):
    """Write ``cells.csv``: one row per cell result, rows sorted by cell key."""
    rows = sorted((r.row() for r in results), key=lambda row: tuple(row[:len(KEY_COLUMNS)]))
    Path(path).write_text(_csv_text(CELL_COLUMNS, rows, header_line(seed, grid)))


def read_cells(path) -> pd.DataFrame:
    df = pd.read_csv(path, comment="#", float_precision="round_trip")
    missing = set(CELL_COLUMNS) - set(df.columns)
    if missing:
        raise ParameterError(f"{path}: missing columns {sorted(missing)}")
    return df[CELL_COLUMNS]


def write_table(frame: pd.DataFrame, path, seed=None, grid=None):
    rows = frame.itertuples(index=False, name=None)
    Path(path).write_text(_csv_text(list(frame.columns), rows, header_line(seed, grid)))


def emit_series(cells, out_dir, axis, seed=None, grid=None, **fixed):
    """Write one ``x xi`` file per (topology, model, mechanism) along ``axis``.

    ``fixed`` pins the remaining axes (e.g. ``n=50, phi=0.5, k=0.1``); the
    slice must leave exactly one row per x value in each configuration.

    Returns the list of written paths.
    """
    if axis not in ("gamma", "e_over_i"):
        raise ParameterError(f"axis must be 'gamma' or 'e_over_i', got {axis!r}")
    df = cells if isinstance(cells, pd.DataFrame) else read_cells(cells)
    for col, value in fixed.items():
        if col not in KEY_COLUMNS or col == axis:
            raise ParameterError(f"cannot fix column {col!r} when sweeping {axis!r}")
        if isinstance(value, str):
            df = df[df[col] == value]
        else:
            df = df[np.isclose(df[col].astype(float), float(value), atol=1e-9)]
    if df.empty:
        raise ParameterError(f"empty slice for {fixed}; available keys: " + _available(cells))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for (topo, model, mech), grp in df.groupby(["topology", "model", "mechanism"], sort=True):
        if grp[axis].duplicated().any():
            free = [c for c in KEY_COLUMNS if c not in fixed and c != axis and grp[c].nunique() > 1]
            raise ParameterError(f"slice is not a single series; also fix {free}")
        grp = grp.sort_values(axis)
        lines = [header_line(seed, grid)]
        lines += [f"{_fmt(float(x))} {_fmt(float(y))}" for x, y in zip(grp[axis], grp["xi_mean"])]
        path = out_dir / f"series_{topo}_{model}_{mech}_{axis}.txt"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written


def _available(cells):
    df = cells if isinstance(cells, pd.DataFrame) else read_cells(cells)
    parts = []
    for col in KEY_COLUMNS:
        vals = sorted(df[col].unique().tolist())
        parts.append(f"{col}={vals}")
    return "; ".join(parts)


