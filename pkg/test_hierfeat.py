"""
Tests for the 11-column hierarchical radius features.
"""
import numpy as np
import pytest

from conftest import graph_of
from hyperrole.core.errors import ConfigError
from hyperrole.models.embedding import HIER_COLUMNS, EmbeddingMatrix
from hyperrole.services import hierfeat, txgraph


def at_radius(radii):
    """Points on the first axis with the given hyperbolic radii"""
    points = np.zeros((len(radii), 2))
    points[:, 0] = np.tanh(np.asarray(radii, dtype=np.float64) / 2.0)
    return EmbeddingMatrix.for_graph(points)


class TestHierFeatures:
    """Radius statistics over k-hop neighbourhoods"""

    def test_hub_example(self, star_graph):
        """Hub at radius 0.2 with four neighbours at radius 1"""
        table = hierfeat.hier_features(at_radius([0.2, 1.0, 1.0, 1.0, 1.0]), star_graph)
        row = table.row(0)
        assert row["r_self"] == pytest.approx(0.2)
        assert row["mu"] == pytest.approx(1.0)
        assert row["sigma"] == pytest.approx(0.0, abs=1e-12)
        assert row["alpha"] == 1.0
        assert row["beta"] == 0.0
        assert row["delta"] == pytest.approx(0.8)
        assert row["Delta"] == pytest.approx(0.8)
        assert [row["b0"], row["b1"], row["b2"], row["b3"]] == [0.0, 0.0, 0.0, 1.0]

    def test_leaf_sees_shallower_hub(self, star_graph):
        table = hierfeat.hier_features(at_radius([0.2, 1.0, 1.0, 1.0, 1.0]), star_graph)
        row = table.row(3)
        assert row["alpha"] == 0.0
        assert row["beta"] == 1.0
        assert row["delta"] == pytest.approx(-0.8)
        assert [row["b0"], row["b1"], row["b2"], row["b3"]] == [1.0, 0.0, 0.0, 0.0]

    def test_isolated_node_keeps_only_own_radius(self):
        graph = graph_of([(0, 1, 1.0, 0)], n_nodes=3)
        table = hierfeat.hier_features(at_radius([0.5, 0.7, 1.3]), graph)
        assert table.values[2, 0] == pytest.approx(1.3)
        np.testing.assert_array_equal(table.values[2, 1:], np.zeros(10))

    def test_equal_radii_are_neither_deeper_nor_shallower(self):
        graph = graph_of([(0, 1, 1.0, 0), (0, 2, 1.0, 0)])
        row = hierfeat.hier_features(at_radius([0.9, 0.9, 0.9]), graph).row(0)
        assert row["alpha"] == 0.0
        assert row["beta"] == 0.0
        assert row["b2"] == pytest.approx(1.0)

    def test_relative_radii_are_clipped(self):
        graph = graph_of([(0, 1, 1.0, 0), (0, 2, 1.0, 0)])
        row = hierfeat.hier_features(at_radius([3.0, 0.5, 6.0]), graph).row(0)
        assert row["delta"] == pytest.approx(-2.5)
        assert row["Delta"] == pytest.approx(3.0)
        assert row["b0"] == pytest.approx(0.5)
        assert row["b3"] == pytest.approx(0.5)

    def test_shape_and_histogram_mass(self, planted):
        records, _ = planted
        graph = txgraph.build_graph(records)
        rng = np.random.default_rng(0)
        points = rng.uniform(-0.5, 0.5, size=(graph.n_nodes, 3))
        table = hierfeat.hier_features(EmbeddingMatrix.for_graph(points), graph)
        assert table.values.shape == (graph.n_nodes, len(HIER_COLUMNS)) == (graph.n_nodes, 11)
        hist = table.values[:, 7:].sum(axis=1)
        np.testing.assert_allclose(hist[graph.degree > 0], 1.0)

    def test_two_hop_neighbourhood(self):
        """On the path 0-1-2, node 0 sees node 2 only when k = 2"""
        graph = graph_of([(0, 1, 1.0, 0), (1, 2, 1.0, 0)])
        emb = at_radius([0.1, 0.4, 0.9])
        one_hop = hierfeat.hier_features(emb, graph, k=1).row(0)
        two_hop = hierfeat.hier_features(emb, graph, k=2).row(0)
        assert one_hop["mu"] == pytest.approx(0.4)
        assert two_hop["mu"] == pytest.approx(0.65)
        assert hierfeat.k_hop_neighborhood(graph, 0, 2) == frozenset({1, 2})

    def test_k_must_be_positive(self, star_graph):
        with pytest.raises(ConfigError):
            hierfeat.hier_features(at_radius([0.1] * 5), star_graph, k=0)
