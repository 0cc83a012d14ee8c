"""The twelve acceptance criteria, each at its stated tolerance.

Every test records a ``PASS``/``FAIL`` line (collected in the terminal
summary) before asserting.  Stochastic criteria use the default root seed.
"""

import hashlib
import itertools
import time

import numpy as np
import pytest

from _support import creditors_alive, edgeless, homog, random_graph
from finstab import io as fio
from finstab.balance import (
    HETERO_1095,
    HETERO_2060,
    AssetConfig,
    assign_heterogeneous,
    assign_homogeneous,
    compute_sheets,
    scale_assets,
)
from finstab.contagion import (
    ShockMechanism,
    ShockSpec,
    cascade,
    reference_cascade,
    select_shock_set,
    vulnerability_index,
)
from finstab.errors import ParameterError, StructureError
from finstab.graphs import (
    SF_DEGREE_3,
    SF_DEGREE_6,
    DirectedGraph,
    degree_profile,
    generate_er,
    generate_in_arborescence,
    generate_scale_free,
)
from finstab.seeding import DEFAULT_SEED, derive_seed
from finstab.sweep import (
    FULL_EI,
    Cell,
    ParamGrid,
    compare_stability,
    coordinated_vs_idiosyncratic,
    delta_ratio,
    ei_sensitivity,
    enumerate_grid,
    gamma_values,
    lambda_ratio,
    results_frame,
    run_cell,
    run_sweep,
)

SEED = DEFAULT_SEED
REPLICATES = 10


def reduced(**kw):
    return run_sweep(enumerate_grid(ParamGrid.reduced(**kw)), REPLICATES, SEED)


def test_c01_oracle_equivalence(criterion):
    t0 = time.perf_counter()
    pairs = [(u, v) for u in range(4) for v in range(4) if u != v]
    subsets = [s for r in range(1, 5) for s in itertools.combinations(range(4), r)]
    mismatches = runs = 0
    for mask in range(1 << len(pairs)):
        g = DirectedGraph(4, [p for i, p in enumerate(pairs) if mask >> i & 1])
        # I = m normalisation leaves the empty graph with I = E = 0
        net = homog(g, e_over_i=2.0, gamma=0.25) if g.m else edgeless(4, 0.0, 0.25)
        sheets = compute_sheets(net, validate=False)
        for v_s in subsets:
            a = cascade(net, sheets, v_s, 0.5)
            b = reference_cascade(net, sheets, v_s, 0.5)
            runs += 1
            mismatches += (a.final_dead, a.rounds) != (b.final_dead, b.rounds)
    elapsed = time.perf_counter() - t0
    ok = runs == 4096 * 15 and mismatches == 0 and elapsed < 120
    criterion(1, ok, f"{runs} cascades, {mismatches} mismatches, {elapsed:.1f}s (need 0 and < 120s)")
    assert ok


def test_c02_hand_worked(criterion):
    g = DirectedGraph(2, [[0, 1]])
    out = []
    for gamma in (0.25, 0.45):
        net = assign_homogeneous(g, AssetConfig(4.0, 1.0, gamma))
        res = cascade(net, compute_sheets(net), [1], 0.5)
        out.append((res.n_dead, res.rounds))
    ok = out[0] == (2, 2) and out[1][0] == 1
    criterion(2, ok, f"gamma=0.25 -> dead={out[0][0]} rounds={out[0][1]}; gamma=0.45 -> dead={out[1][0]}")
    assert ok


def test_c03_residual_instability(criterion):
    t0 = time.perf_counter()
    fractions = {}
    for topo, model, thr in (("er6", "homog", 0.05), ("arb", "het-1095", 0.2)):
        xs = [run_cell(Cell(topo, model, "coord", 50, ei, 0.5, 0.45, k), REPLICATES, SEED).xi_mean
              for ei in (0.25, 1.0, 2.0, 3.5) for k in (0.1, 0.5, 0.9)]
        fractions[topo] = 100.0 * np.mean(np.array(xs) < thr)
    elapsed = time.perf_counter() - t0
    ok = fractions["er6"] >= 95 and fractions["arb"] <= 10 and elapsed < 600
    criterion(3, ok, f"homog ER-6 xi<0.05 in {fractions['er6']:.1f}% (need >=95); "
                     f"het(0.1,0.95) arb xi<0.2 in {fractions['arb']:.1f}% (need <=10); {elapsed:.1f}s")
    assert ok


def test_c04_heterogeneity_destabilizes(criterion):
    res = results_frame(reduced(topologies=("er3",), models=("homog", "het-1095"), mechanisms=("coord",)))
    p = compare_stability(res[res.model == "het-1095"], res[res.model == "homog"])
    ok = p.percent >= 85
    criterion(4, ok, f"ER-3 coord xi_het >= xi_homog - 1/(3n) in {p.percent:.1f}% of {p.pairs} cells (need >=85)")
    assert ok


def test_c05_coordinated_beats_idiosyncratic(criterion):
    t = coordinated_vs_idiosyncratic(reduced(topologies=("er6",), models=("het-1095",)))
    pct = float(t["percent"].iloc[0])
    ok = pct >= 70
    criterion(5, ok, f"het(0.1,0.95) ER-6 coord >= idio in {pct:.1f}% (need >=70)")
    assert ok


def test_c06_ei_insensitivity(criterion):
    arb = ei_sensitivity(reduced(topologies=("arb",), models=("het-2060",), mechanisms=("coord",)))
    sf = ei_sensitivity(reduced(topologies=("sf6",), models=("het-1095",), mechanisms=("coord",)))
    a = float(arb["mean_abs_change"].iloc[0])
    s = float(sf["mean_abs_change"].iloc[0])
    ok = a <= 0.05 and 0.05 <= s <= 0.35
    criterion(6, ok, f"het(0.2,0.6) arb span {a:.3f} (need <=0.05); het(0.1,0.95) SF-6 span {s:.3f} "
                     "(need 0.05..0.35)")
    assert ok


def test_c07_lambda(criterion):
    gammas = gamma_values(0.5)
    xs = [run_cell(Cell("er6", "homog", "coord", 50, 0.25, 0.5, g, 0.1), REPLICATES, SEED).xi_mean for g in gammas]
    lam = lambda_ratio(gammas, xs).value
    flat = lambda_ratio(gammas, [1.0 - g for g in gammas])
    ok = 0.60 <= lam <= 0.95 and not flat.value > 2 * 0.375
    criterion(7, ok, f"Lambda={lam:.3f} (need 0.60..0.95); linear reference {flat.value:.3f} not > 0.75")
    assert ok


def test_c08_delta(criterion):
    xs = [run_cell(Cell("arb", "homog", "coord", 50, ei, 0.5, 0.25, 0.1), REPLICATES, SEED).xi_mean
          for ei in FULL_EI]
    d = delta_ratio(FULL_EI, xs).value
    ok = 0.55 <= d <= 1.0
    criterion(8, ok, f"Delta={d:.3f} (need 0.55..1.0)")
    assert ok


def test_c09_leaf_bound(criterion):
    counts = []
    for i in range(200):
        g = generate_in_arborescence(100, derive_seed(SEED, "lemma", i))
        d_in = degree_profile(g).in_degree
        counts.append(sum(1 for u, v in g.edges.tolist() if d_in[u] == 0 and d_in[v] > 1))
    mean = float(np.mean(counts))
    ok = mean >= 100 / 8 - 11 / 8
    criterion(9, ok, f"mean leaf count {mean:.2f} over 200 trees (need >=11.125)")
    assert ok


def test_c10_grid_cardinality(criterion):
    t0 = time.perf_counter()
    count = len(enumerate_grid(ParamGrid()))
    elapsed = time.perf_counter() - t0
    ok = count == 737_100 and elapsed < 5
    criterion(10, ok, f"{count} cells in {elapsed:.2f}s (need 737100 in < 5s)")
    assert ok


def _instances(count, seed):
    """Random homogeneous and heterogeneous networks over all generator families."""
    rng = np.random.default_rng(seed)
    made = 0
    while count is None or made < count:
        n = int(rng.integers(5, 60))
        kind = rng.integers(4)
        if kind == 0:
            g = random_graph(rng, n, rng.uniform(0.02, 0.4))
        elif kind == 1:
            g = generate_er(n, rng.uniform(1, min(6, n)), rng)
        elif kind == 2:
            g = generate_scale_free(n, SF_DEGREE_3 if rng.random() < 0.5 else SF_DEGREE_6, rng)
        else:
            g = generate_in_arborescence(n, rng)
        if g.m < 2:
            continue
        gamma = float(rng.choice(gamma_values(0.9)))
        cfg = AssetConfig.normalized(g, float(rng.uniform(0.25, 3.5)), gamma)
        if rng.random() < 0.5:
            net = homog(g, cfg.total_external / g.m, gamma)
        else:
            try:
                net = assign_heterogeneous(g, cfg, HETERO_1095 if rng.random() < 0.5 else HETERO_2060, rng)
            except (StructureError, ParameterError):
                continue
        phi = float(rng.uniform(gamma + 0.01, 1.0))
        k = float(rng.uniform(1.0 / n, 1.0))
        mech = ShockMechanism.IDIOSYNCRATIC if rng.random() < 0.5 else ShockMechanism.coordinated_for(
            "heterogeneous" if net.model == "heterogeneous" else "homogeneous")
        made += 1
        yield net, mech, k, phi, rng


def test_c11_property_suites(criterion):
    failures = {name: 0 for name in ("termination", "monotone", "outflow", "xi", "scale", "argmax", "uniform")}
    counts = dict.fromkeys(failures, 0)
    for net, mech, k, phi, rng in _instances(1000, derive_seed(SEED, "props")):
        sheets = compute_sheets(net, validate=False)
        v_s = select_shock_set(net, mech, k, rng)
        res = cascade(net, sheets, v_s, phi)
        counts["termination"] += 1
        failures["termination"] += res.rounds > net.n + 1
        counts["monotone"] += 1
        trace = res.dead_trace
        failures["monotone"] += any(b < a for a, b in zip(trace, trace[1:])) or any(
            not res.dead_at(t) <= res.dead_at(t + 1) for t in range(res.rounds))
        for v in res.final_dead:
            counts["outflow"] += 1
            cap = min(-res.failure_equity[v], sheets.b[v]) if creditors_alive(net.graph, res, v) else 0.0
            failures["outflow"] += abs(res.outflow[v] - cap) > 1e-9 or res.outflow[v] > sheets.b[v] + 1e-9
        for mu in (0.5, 3.0, 7.0):
            scaled = scale_assets(net, mu)
            other = cascade(scaled, compute_sheets(scaled, validate=False), v_s, phi)
            counts["scale"] += 1
            failures["scale"] += other.final_dead != res.final_dead
    for net, mech, k, phi, rng in _instances(None, derive_seed(SEED, "argmax")):
        if counts["argmax"] >= 1000:
            break
        if mech is ShockMechanism.IDIOSYNCRATIC:
            continue
        weighted = mech is ShockMechanism.COORDINATED_WEIGHTED
        keys = np.bincount(net.graph.targets, weights=net.weights if weighted else None, minlength=net.n)
        v_s = select_shock_set(net, mech, k, rng)
        rest = np.setdiff1d(np.arange(net.n), v_s)
        counts["argmax"] += 1
        failures["argmax"] += bool(rest.size) and keys[v_s].min() < keys[rest].max() - 1e-9
    for i, (net, mech, k, phi, rng) in enumerate(_instances(1000, derive_seed(SEED, "xi"))):
        est = vulnerability_index(lambda r, net=net: net, mech, ShockSpec(k, phi), 3, derive_seed(SEED, i),
                                  validity="off")
        counts["xi"] += 1
        failures["xi"] += not 0.0 <= est.mean <= 1.0
    ring = DirectedGraph(10, [[i, (i + 1) % 10] for i in range(10)])
    ring_net = homog(ring)
    rng = np.random.default_rng(derive_seed(SEED, "uniform"))
    hits = np.zeros(10)
    draws = 50_000
    for _ in range(draws):
        hits[select_shock_set(ring_net, ShockMechanism.IDIOSYNCRATIC, 0.3, rng)] += 1
    counts["uniform"] = draws
    failures["uniform"] = int(np.sum(np.abs(hits / draws - 0.3) > 0.01))
    ok = all(v == 0 for v in failures.values()) and all(c >= 1000 for c in counts.values())
    detail = ", ".join(f"{k} {failures[k]}/{counts[k]}" for k in failures)
    criterion(11, ok, f"failures per suite: {detail}")
    assert ok


def test_c12_determinism(criterion, tmp_path):
    digests = []
    for name in ("first", "second"):
        path = tmp_path / f"{name}.csv"
        fio.write_cells(run_sweep(enumerate_grid(ParamGrid.reduced()), REPLICATES, SEED), path, SEED,
                        fio.grid_hash(ParamGrid.reduced()))
        digests.append(hashlib.sha256(path.read_bytes()).hexdigest())
    ok = digests[0] == digests[1]
    criterion(12, ok, f"cells.csv sha256 {digests[0][:16]} vs {digests[1][:16]}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
