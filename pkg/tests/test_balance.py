import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import homog, random_graph, two_node
from finstab.balance import (
    HETERO_1095,
    HETERO_2060,
    AssetConfig,
    HeteroParams,
    WeightedNetwork,
    assign_heterogeneous,
    assign_homogeneous,
    compute_sheets,
    round_half_up,
    scale_assets,
)
from finstab.errors import ParameterError, StructureError, ValidationError
from finstab.graphs import DirectedGraph, empty_graph, generate_er, generate_in_arborescence


@pytest.mark.parametrize("x, expected", [(0.1 * 50, 5), (0.5, 1), (2.5, 3), (0.3 * 10, 3), (0.49, 0), (1.2, 1)])
def test_round_half_up(x, expected):
    assert round_half_up(x) == expected


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(gamma=0), dict(gamma=1), dict(total_interbank=0),
                                    dict(total_external=-1)])
    def test_invalid(self, kw):
        base = dict(total_external=1.0, total_interbank=1.0, gamma=0.2)
        base.update(kw)
        with pytest.raises(ParameterError):
            AssetConfig(**base)

    def test_normalized(self):
        g = generate_er(50, 3, 1)
        cfg = AssetConfig.normalized(g, 2.5, 0.1)
        assert cfg.total_interbank == g.m
        assert cfg.total_external == pytest.approx(2.5 * g.m)

    def test_normalized_needs_edges(self):
        with pytest.raises(StructureError):
            AssetConfig.normalized(empty_graph(3), 1.0, 0.1)


class TestHomogeneous:
    def test_two_node(self):
        net = two_node(total_external=2.0)
        assert net.sigma.tolist() == [0.5, 0.5]
        assert net.weights.tolist() == [1.0]

    def test_unit_weights(self):
        rng = np.random.default_rng(0)
        edges = set()
        while len(edges) < 150:
            u, v = rng.integers(50, size=2)
            if u != v:
                edges.add((int(u), int(v)))
        g = DirectedGraph(50, sorted(edges))
        net = assign_homogeneous(g, AssetConfig(75.0, 150.0, 0.2))
        assert np.all(net.weights == 1.0)

    def test_no_edges(self):
        with pytest.raises(StructureError):
            assign_homogeneous(empty_graph(3), AssetConfig(1.0, 1.0, 0.2))

    def test_regular_node(self):
        # complete digraph: every node has b = iota, so e = sigma E
        n = 5
        g = DirectedGraph(n, [(u, v) for u in range(n) for v in range(n) if u != v])
        sheets = compute_sheets(homog(g, e_over_i=1.5))
        assert np.allclose(sheets.b, sheets.iota)
        assert np.allclose(sheets.e, 1.5 * g.m / n)


class TestHeterogeneous:
    def test_published_shares(self):
        g = generate_er(50, 6, 2)
        net = assign_heterogeneous(g, AssetConfig.normalized(g, 1.0, 0.2), HETERO_1095, seed=3)
        levels, counts = np.unique(np.round(net.sigma, 12), return_counts=True)
        assert dict(zip(levels.tolist(), counts.tolist())) == {round(0.05 / 45, 12): 45, 0.19: 5}

    def test_symmetric_case_is_homogeneous(self):
        g = DirectedGraph(2, [[0, 1], [1, 0]])
        cfg = AssetConfig(2.0, 2.0, 0.2)
        het = assign_heterogeneous(g, cfg, HeteroParams(0.5, 0.5), seed=0)
        hom = assign_homogeneous(g, cfg)
        assert np.allclose(het.sigma, hom.sigma)
        assert np.allclose(het.weights, hom.weights)

    @pytest.mark.parametrize("hp", [HETERO_1095, HETERO_2060])
    def test_two_levels(self, hp):
        g = generate_er(50, 3, 4)
        net = assign_heterogeneous(g, AssetConfig.normalized(g, 2.0, 0.3), hp, seed=1)
        levels = np.unique(np.round(net.sigma, 12))
        assert levels.size == 2
        high = hp.beta / round_half_up(hp.alpha * 50)
        assert levels.max() == pytest.approx(high)
        assert (high > levels.min()) == (hp.beta > hp.alpha)

    def test_heavy_edge_count(self):
        for seed in range(20):
            g = generate_er(50, 3, seed)
            net = assign_heterogeneous(g, AssetConfig.normalized(g, 2.0, 0.3), HETERO_2060, seed=seed)
            priv = np.isclose(net.sigma, 0.6 / 10)
            touching = int(np.count_nonzero(priv[g.sources] | priv[g.targets]))
            k = max(1, int(np.floor(0.2 * touching + 1e-9)))
            heavy = np.isclose(net.weights, 0.6 * g.m / k)
            assert heavy.sum() == k
            assert np.all(priv[g.sources[heavy]] | priv[g.targets[heavy]])

    def test_deterministic(self):
        g = generate_in_arborescence(50, 1)
        cfg = AssetConfig.normalized(g, 1.0, 0.2)
        a = assign_heterogeneous(g, cfg, HETERO_1095, seed=5)
        b = assign_heterogeneous(g, cfg, HETERO_1095, seed=5)
        assert np.array_equal(a.weights, b.weights) and np.array_equal(a.sigma, b.sigma)

    def test_no_touching_edge(self):
        g = DirectedGraph(10, [[0, 1]])
        outcomes = set()
        for seed in range(60):
            try:
                net = assign_heterogeneous(g, AssetConfig(1.0, 1.0, 0.2), HeteroParams(0.1, 0.5), seed)
            except StructureError:
                outcomes.add("error")
            else:
                outcomes.add("ok")
                assert int(np.argmax(net.sigma)) in (0, 1)
        # only a single heavy edge would be the whole edge set
        assert outcomes == {"error"}

    def test_all_nodes_privileged(self):
        g = DirectedGraph(2, [[0, 1], [1, 0]])
        with pytest.raises(StructureError):
            assign_heterogeneous(g, AssetConfig(1.0, 2.0, 0.2), HeteroParams(0.9, 0.5), seed=0)

    def test_touching_but_empty(self):
        g = DirectedGraph(10, [[2, 3], [4, 5]])
        seen = set()
        for seed in range(60):
            try:
                assign_heterogeneous(g, AssetConfig(1.0, 2.0, 0.2), HeteroParams(0.1, 0.5), seed)
                seen.add("ok")
            except StructureError:
                seen.add("error")
        assert seen == {"ok", "error"}


class TestSheets:
    def test_gate_at_node_zero(self):
        with pytest.raises(ValidationError) as info:
            compute_sheets(two_node(total_external=2.0))
        assert info.value.node == 0
        assert info.value.value == 0.0

    def test_two_node_values(self):
        s = compute_sheets(two_node(total_external=4.0))
        assert tuple(s[0]) == (1.0, 0.0, 1.0, 2.0, 0.5)
        assert tuple(s[1]) == (0.0, 1.0, 3.0, 3.0, 0.75)

    def test_isolated_node(self):
        g = DirectedGraph(3, [[0, 1]])
        net = WeightedNetwork(g, [1.0], [0.2, 0.3, 0.5], AssetConfig(10.0, 1.0, 0.2))
        s = compute_sheets(net)[2]
        assert (s.iota, s.b) == (0.0, 0.0)
        assert s.e == s.a == 5.0
        assert s.c == pytest.approx(1.0)

    def test_unvalidated(self):
        s = compute_sheets(two_node(total_external=2.0), validate=False)
        assert s.e[0] == 0.0
        assert len(s) == 2 and len(list(s)) == 2


class TestWeightedNetwork:
    g = DirectedGraph(2, [[0, 1]])

    def test_sigma_sum(self):
        with pytest.raises(ParameterError):
            WeightedNetwork(self.g, [1.0], [0.5, 0.6], AssetConfig(1.0, 1.0, 0.2))

    def test_weight_sum(self):
        with pytest.raises(ParameterError):
            WeightedNetwork(self.g, [1.5], [0.5, 0.5], AssetConfig(1.0, 1.0, 0.2))

    def test_positive_weights(self):
        g = DirectedGraph(2, [[0, 1], [1, 0]])
        with pytest.raises(ParameterError):
            WeightedNetwork(g, [2.0, 0.0], [0.5, 0.5], AssetConfig(1.0, 2.0, 0.2))


class TestScale:
    def test_identity(self):
        net = two_node()
        same = scale_assets(net, 1.0)
        assert np.array_equal(same.weights, net.weights)
        assert same.config == net.config

    def test_doubling(self):
        a = compute_sheets(two_node())
        b = compute_sheets(scale_assets(two_node(), 2.0))
        for name in ("iota", "b", "e", "a", "c"):
            assert np.allclose(getattr(b, name), 2 * getattr(a, name))

    @pytest.mark.parametrize("mu", [0, -1])
    def test_bad_mu(self, mu):
        with pytest.raises(ParameterError):
            scale_assets(two_node(), mu)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(3, 30), p=st.floats(0.1, 0.6),
       e_over_i=st.floats(0.0, 4.0), mu=st.floats(0.1, 10.0), model=st.sampled_from(["homog", "het"]))
def test_sheet_identities(seed, n, p, e_over_i, mu, model):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, p)
    if g.m < 2:
        return
    cfg = AssetConfig.normalized(g, e_over_i, 0.2)
    if model == "homog":
        net = assign_homogeneous(g, cfg)
    else:
        try:
            net = assign_heterogeneous(g, cfg, HETERO_2060, rng)
        except StructureError:
            return
    assert net.sigma.sum() == pytest.approx(1.0, abs=1e-9)
    assert net.weights.sum() == pytest.approx(cfg.total_interbank, rel=1e-9)
    s = compute_sheets(net, validate=False)
    assert s.b.sum() == pytest.approx(g.m) and s.iota.sum() == pytest.approx(g.m)
    assert np.allclose(s.e, s.b - s.iota + net.sigma * cfg.total_external)
    assert np.allclose(s.c, 0.2 * s.a)
    t = compute_sheets(scale_assets(net, mu), validate=False)
    assert np.allclose(t.c, mu * s.c) and np.allclose(t.e, mu * s.e)
