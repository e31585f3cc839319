"""
Tests for LAR, node trust and trust-weighted refinement.
"""
import math

import numpy as np
import pytest
from scipy.special import expit

from conftest import graph_of
from hyperrole.core.errors import EmptyWindow
from hyperrole.models.embedding import EmbeddingMatrix
from hyperrole.schemas.config import RefineConfig
from hyperrole.services import lar


def brute_force_lar(transfers, u, v, start, end, eps):
    """Recompute LAR by direct iteration over the raw transfer list"""
    inside = [(a, b, value) for a, b, value, ts in transfers if start <= ts <= end]
    values = [value for a, b, value in inside if (a, b) == (u, v)]
    mean = sum(values) / len(values)
    std = math.sqrt(sum((x - mean) ** 2 for x in values) / len(values))
    total_in = sum(value for a, b, value in inside if b == v)
    total_out = sum(value for a, b, value in inside if a == v)
    return std / (mean + eps) * (1 + total_in / (total_out + eps))


class TestEdgeLar:
    """LAR of a single edge"""

    def test_equal_values_give_zero(self):
        graph = graph_of([(0, 1, 10.0, 0), (0, 1, 10.0, 5), (1, 2, 3.0, 6)])
        assert lar.edge_lar(graph, 0, 1, RefineConfig()) == 0.0

    def test_hand_example(self):
        """{10, 20} into v with in(v) = 30, out(v) = 60 gives (5/15) * 1.5"""
        graph = graph_of([(0, 1, 10.0, 0), (0, 1, 20.0, 1), (1, 2, 60.0, 2)])
        value = lar.edge_lar(graph, 0, 1, RefineConfig(smoothing_eps=1e-12))
        assert value == pytest.approx(0.5, rel=1e-9)

    def test_sink_recipient_stays_finite(self):
        graph = graph_of([(0, 1, 1.0, 0), (0, 1, 3.0, 1)])
        config = RefineConfig()
        value = lar.edge_lar(graph, 0, 1, config)
        assert math.isfinite(value)
        assert value == pytest.approx(brute_force_lar(
            [(0, 1, 1.0, 0), (0, 1, 3.0, 1)], 0, 1, 0, 1, config.smoothing_eps
        ), rel=1e-9)

    def test_empty_window(self):
        graph = graph_of([(0, 1, 1.0, 0), (1, 2, 1.0, 100)])
        config = RefineConfig(window_start=50, window_delta=100)
        with pytest.raises(EmptyWindow):
            lar.edge_lar(graph, 0, 1, config)

    def test_matches_brute_force_oracle(self, rng):
        """1,000 random graphs and windows, relative error 1e-9"""
        for _ in range(1000):
            n_nodes = int(rng.integers(2, 7))
            transfers = []
            for _ in range(int(rng.integers(2, 25))):
                u, v = (int(x) for x in rng.integers(n_nodes, size=2))
                transfers.append((u, v, float(rng.lognormal(3.0, 1.0)), int(rng.integers(0, 1000))))
            graph = graph_of(transfers, n_nodes)
            start = int(rng.integers(0, 600))
            config = RefineConfig(window_start=start, window_delta=int(rng.integers(1, 600)))
            end = start + config.window_delta

            for (u, v) in graph.multi_edges:
                if not any((a, b) == (u, v) and start <= ts <= end for a, b, _, ts in transfers):
                    continue
                expected = brute_force_lar(transfers, u, v, start, end, config.smoothing_eps)
                assert lar.edge_lar(graph, u, v, config) == pytest.approx(expected, rel=1e-9, abs=1e-12)

    def test_default_window_is_full_span(self):
        graph = graph_of([(0, 1, 1.0, 10), (1, 0, 2.0, 90)])
        assert lar.observation_window(graph, RefineConfig()) == (10, 90)
        assert lar.observation_window(graph, RefineConfig(window_delta=20)) == (10, 30)


class TestNodeTrust:
    """Trust weights from value and LAR z-scores"""

    def test_identical_nodes_get_half(self):
        """Symmetric two-cycle: every z-score is zero"""
        graph = graph_of([(0, 1, 5.0, 0), (0, 1, 7.0, 1), (1, 0, 5.0, 2), (1, 0, 7.0, 3)])
        _, trust = lar.trust_for(graph, RefineConfig())
        np.testing.assert_allclose(trust.tau, [0.5, 0.5])
        np.testing.assert_array_equal(trust.z_val, [0.0, 0.0])

    def test_tau_is_logistic_of_difference(self, star_graph):
        _, trust = lar.trust_for(star_graph, RefineConfig())
        np.testing.assert_allclose(trust.tau, expit(trust.z_val - trust.z_lar))
        assert np.all((trust.tau > 0) & (trust.tau < 1))

    def test_logistic_of_two(self):
        assert expit(2.0) == pytest.approx(0.8808, abs=1e-4)

    def test_diagnostics_frame(self, star_graph):
        _, trust = lar.trust_for(star_graph, RefineConfig())
        frame = trust.to_frame()
        assert list(frame.columns) == ["node", "total_in", "total_out", "mean_lar", "z_val", "z_lar", "tau"]
        assert trust[0].total_out == pytest.approx(100.0)


class TestNeighborWeights:
    """Row-stochastic neighbourhood weights"""

    def test_rows_sum_to_one(self, star_graph, rng):
        tau = rng.random(star_graph.n_nodes)
        weights = lar.neighbor_weights(star_graph, tau)
        np.testing.assert_allclose(np.asarray(weights.sum(axis=1)).ravel(), np.ones(5), atol=1e-12)

    def test_raising_trust_raises_its_weight(self, star_graph):
        tau = np.full(5, 0.5)
        before = lar.neighbor_weights(star_graph, tau).toarray()
        tau[2] = 0.9
        after = lar.neighbor_weights(star_graph, tau).toarray()
        assert after[0, 2] > before[0, 2]
        for other in (1, 3, 4):
            assert after[0, other] < before[0, other]

    def test_isolated_row_is_empty(self):
        graph = graph_of([(0, 1, 1.0, 0)], n_nodes=3)
        weights = lar.neighbor_weights(graph, np.ones(3))
        assert weights[2].nnz == 0


class TestRefine:
    """Synchronous trust-weighted refinement"""

    def test_two_nodes_swap(self):
        graph = graph_of([(0, 1, 1.0, 0), (1, 0, 1.0, 1)])
        emb = EmbeddingMatrix.for_graph(np.array([[0.5, 0.0], [-0.5, 0.0]]))
        _, trust = lar.trust_for(graph, RefineConfig())
        refined, steps = lar.refine_with_trace(emb, graph, trust, RefineConfig(steps=1))
        np.testing.assert_allclose(refined.points, [[-0.5, 0.0], [0.5, 0.0]], atol=1e-12)
        assert len(steps) == 1

    def test_isolated_node_unchanged(self):
        graph = graph_of([(0, 1, 1.0, 0)], n_nodes=3)
        points = np.array([[0.1, 0.2], [0.3, -0.1], [0.4, 0.4]])
        _, trust = lar.trust_for(graph, RefineConfig())
        refined = lar.refine(EmbeddingMatrix.for_graph(points), graph, trust, RefineConfig())
        np.testing.assert_array_equal(refined.points[2], points[2])

    def test_neighbor_at_origin_pulls_to_origin(self):
        graph = graph_of([(0, 1, 1.0, 0)])
        points = np.array([[0.0, 0.0], [0.6, 0.2]])
        _, trust = lar.trust_for(graph, RefineConfig())
        refined, _ = lar.refine_with_trace(EmbeddingMatrix.for_graph(points), graph, trust, RefineConfig(steps=1))
        np.testing.assert_allclose(refined.points[1], [0.0, 0.0], atol=1e-15)

    def test_early_stop_below_tolerance(self, star_graph):
        points = np.zeros((5, 2))
        _, trust = lar.trust_for(star_graph, RefineConfig())
        _, steps = lar.refine_with_trace(EmbeddingMatrix.for_graph(points), star_graph, trust, RefineConfig(steps=3))
        assert steps == [0.0]

    def test_refined_points_stay_in_ball(self, star_graph, rng):
        points = rng.uniform(-0.7, 0.7, size=(5, 3))
        _, trust = lar.trust_for(star_graph, RefineConfig())
        refined = lar.refine(EmbeddingMatrix.for_graph(points), star_graph, trust, RefineConfig(steps=3))
        assert np.all(np.linalg.norm(refined.points, axis=1) < 1.0)
