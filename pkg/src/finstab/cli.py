"""The ``finstab`` command: generate, simulate, sweep, analyze, series.

Exit status is 0 on success, 2 for bad parameters (including argument
errors), 3 when a balance sheet has ``e_v <= 0`` and 4 for I/O failures.
The root seed comes from ``--seed``, else ``$FINSTAB_SEED``, else a fixed
default.
"""

import argparse
import logging
import re
import sys
from pathlib import Path

from . import __version__
from . import io as fio
from . import sweep as sw
from .contagion import VALIDITY_POLICIES, ShockSpec, run_trial
from .errors import FinstabError, ParameterError, ValidationError
from .seeding import as_generator, derive_seed, root_seed

EXIT_OK, EXIT_PARAM, EXIT_INVALID, EXIT_IO = 0, 2, 3, 4

ANALYSES = {
    "heterogeneity": sw.heterogeneity_table,
    "connectivity": sw.connectivity_table,
    "coord_vs_idio": sw.coordinated_vs_idiosyncratic,
    "residual": sw.residual_instability,
    "ei_sensitivity": sw.ei_sensitivity,
    "lambda": sw.lambda_table,
    "delta": sw.delta_table,
}

log = logging.getLogger("finstab")


def _graph_seed(root, topology, n, replicate=0):
    # same stream as replicate ``replicate`` of a sweep
    return derive_seed(root, "graph", topology, n, replicate)


def cmd_generate(args):
    seed = root_seed(args.seed)
    g = sw.build_graph(args.topology, args.n, _graph_seed(seed, args.topology, args.n))
    text = fio.format_graph(g, seed)
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return EXIT_OK


def cmd_simulate(args):
    seed = root_seed(args.seed)
    if args.fixture is not None:
        g = fio.read_graph(args.fixture)
        topology = args.topology or "fixture"
    else:
        if args.topology is None or args.n is None:
            raise ParameterError("--topology and --n are required without --fixture")
        topology = args.topology
        g = sw.build_graph(topology, args.n, _graph_seed(seed, topology, args.n, args.replicate))
    cell = sw.Cell(topology, args.model, args.mech, g.n, float(args.ei), float(args.phi),
                   float(args.gamma), float(args.k))
    spec = ShockSpec(cell.k, cell.phi)
    spec.check_gamma(cell.gamma)
    _, a_seed, s_seed = sw.stream_seeds(seed, cell, args.replicate, True)
    net = sw.build_network(g, cell.model, cell.e_over_i, cell.gamma, a_seed)
    _, result = run_trial(net, cell.shock_mechanism, spec, as_generator(s_seed), args.validity)
    if args.header:
        print(",".join(fio.CASCADE_COLUMNS))
    print(fio.cascade_row(seed, g.n, topology, args.mech, cell.k, cell.phi, cell.gamma, cell.e_over_i,
                          result.n_dead, result.rounds))
    return EXIT_OK


def write_analyses(frame, out_dir, seed=None, grid=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, fn in ANALYSES.items():
        path = out_dir / f"{name}.csv"
        fio.write_table(fn(frame), path, seed, grid)
        paths.append(path)
    return paths


def cmd_sweep(args):
    seed = root_seed(args.seed)
    grid = fio.read_grid(args.grid) if args.grid else sw.ParamGrid.reduced()
    replicates = args.replicates if args.replicates is not None else grid.replicates
    cells = sw.enumerate_grid(grid)
    ghash = fio.grid_hash(grid)
    log.info("sweep: %d cells, %d replicates, root seed %d, grid %s", len(cells), replicates, seed, ghash)

    def progress(done, total):
        print(f"\r{done}/{total} cells", end="" if done < total else "\n", file=sys.stderr, flush=True)

    results = sw.run_sweep(cells, replicates, seed, jobs=args.jobs, validity=args.validity,
                           progress=None if args.quiet else progress)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fio.write_cells(results, out / "cells.csv", seed, ghash)
    write_analyses(sw.results_frame(results), out, seed, ghash)
    return EXIT_OK


_HEADER_RE = re.compile(r"root_seed=(\S+) grid=(\S+)")


def _provenance(cells_path):
    with open(cells_path) as fh:
        first = fh.readline()
    m = _HEADER_RE.search(first)
    if not m:
        return None, None
    return m.group(1), m.group(2)


def cmd_analyze(args):
    seed, ghash = _provenance(args.cells)
    frame = fio.read_cells(args.cells)
    write_analyses(frame, args.out, seed, ghash)
    return EXIT_OK


def cmd_series(args):
    seed, ghash = _provenance(args.cells)
    fixed = {}
    for col, value in (("topology", args.topology), ("model", args.model), ("mechanism", args.mech),
                       ("n", args.n), ("e_over_i", args.ei), ("phi", args.phi), ("gamma", args.gamma),
                       ("k", args.k)):
        if value is not None and col != args.axis:
            fixed[col] = value
    paths = fio.emit_series(args.cells, args.out, args.axis, seed, ghash, **fixed)
    for p in paths:
        print(p)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="finstab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"finstab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="root seed")

    g = sub.add_parser("generate", help="write a random graph as an edge list")
    g.add_argument("--topology", choices=sw.TOPOLOGIES, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--out", default=None, help="output file (default: stdout)")
    common(g)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="run one cascade and print a CSV row")
    s.add_argument("--topology", choices=sw.TOPOLOGIES, default=None)
    s.add_argument("--fixture", default=None, help="graph file to use instead of a random graph")
    s.add_argument("--model", choices=sw.MODELS, default="homog")
    s.add_argument("--mech", choices=sw.MECHANISMS, default="coord")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--ei", type=float, required=True, help="E/I ratio")
    s.add_argument("--phi", type=float, required=True)
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--k", type=float, required=True, help="fraction of shocked nodes")
    s.add_argument("--replicate", type=int, default=0)
    s.add_argument("--validity", choices=VALIDITY_POLICIES, default="network")
    s.add_argument("--header", action="store_true", help="print the column names first")
    common(s)
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run a parameter grid; write cells.csv and tables")
    w.add_argument("--grid", default=None, help="grid file (default: the reduced grid)")
    w.add_argument("--replicates", type=int, default=None)
    w.add_argument("--out", default=".")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--validity", choices=VALIDITY_POLICIES, default="off")
    w.add_argument("--quiet", action="store_true", help="no progress on stderr")
    common(w)
    w.set_defaults(func=cmd_sweep)

    a = sub.add_parser("analyze", help="summary tables from an existing cells.csv")
    a.add_argument("--cells", required=True)
    a.add_argument("--out", default=".")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("series", help="two-column xi series for plotting")
    r.add_argument("--cells", required=True)
    r.add_argument("--axis", choices=("gamma", "e_over_i"), required=True)
    r.add_argument("--topology", choices=sw.TOPOLOGIES, default=None)
    r.add_argument("--model", choices=sw.MODELS, default=None)
    r.add_argument("--mech", choices=sw.MECHANISMS, default=None)
    r.add_argument("--n", type=int, default=None)
    r.add_argument("--ei", type=float, default=None)
    r.add_argument("--phi", type=float, default=None)
    r.add_argument("--gamma", type=float, default=None)
    r.add_argument("--k", type=float, default=None)
    r.add_argument("--out", default=".")
    r.set_defaults(func=cmd_series)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"finstab: invalid balance sheet: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (FinstabError, ValueError) as exc:
        print(f"finstab: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"finstab: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
