"""
Tests for the synthetic tree and planted-role generators.
"""
from collections import Counter

import numpy as np
import pytest

from hyperrole.core.errors import ConfigError, MisalignedInputs
from hyperrole.models.embedding import EmbeddingMatrix
from hyperrole.schemas.labels import Role
from hyperrole.schemas.synth import PlantedRoleSpec, TreeSpec
from hyperrole.services import storage, synth, txgraph
from hyperrole.services.geometry import radius


class TestTree:
    """Complete k-ary trees and their ideal placement"""

    def test_node_count(self):
        spec = TreeSpec(branching=3, depth=4)
        edges, depths = synth.tree_edges(spec)
        assert spec.node_count == len(depths) == 121
        assert len(edges) == 120
        assert Counter(depths.tolist()) == {0: 1, 1: 3, 2: 9, 3: 27, 4: 81}
        assert TreeSpec(branching=1, depth=5).node_count == 6

    def test_ideal_norms(self):
        tree = synth.ideal_tree_embedding(TreeSpec(branching=2, depth=3), dim=4)
        norms = np.linalg.norm(tree.embedding.points, axis=1)
        np.testing.assert_allclose(norms[tree.depths == 2], np.tanh(1.0))
        np.testing.assert_allclose(radius(tree.embedding.points), tree.depths.astype(float), atol=1e-9)
        assert norms[0] == 0.0

    def test_ideal_radii_are_perfectly_monotone(self):
        tree = synth.ideal_tree_embedding(TreeSpec(), dim=8, seed=1)
        report = synth.check_radius_monotonicity(tree.embedding, tree.depths)
        assert report.rho == 1.0
        assert not report.degenerate
        assert report.n_nodes == 121

    def test_constant_radii_are_degenerate(self):
        _, depths = synth.tree_edges(TreeSpec(branching=2, depth=2))
        emb = EmbeddingMatrix.for_graph(np.zeros((len(depths), 3)))
        report = synth.check_radius_monotonicity(emb, depths)
        assert report.degenerate
        assert report.rho == 0.0

    def test_reversed_radii(self):
        tree = synth.ideal_tree_embedding(TreeSpec(branching=2, depth=3), dim=3)
        report = synth.check_radius_monotonicity(tree.embedding, tree.depths.max() - tree.depths)
        assert report.rho == -1.0

    def test_shuffled_depths_are_uncorrelated(self):
        tree = synth.ideal_tree_embedding(TreeSpec(), dim=8, seed=1)
        rhos = []
        for seed in range(10):
            shuffled = np.random.default_rng(seed).permutation(tree.depths)
            report = synth.check_radius_monotonicity(tree.embedding, shuffled)
            assert report.n_nodes == 121
            rhos.append(abs(report.rho))
        assert np.mean(rhos) < 0.2

    def test_dimension_too_small(self):
        with pytest.raises(ConfigError):
            synth.ideal_tree_embedding(TreeSpec(), dim=1)

    def test_fixture_files(self, tmp_path):
        tree = synth.ideal_tree_embedding(TreeSpec(branching=2, depth=2), dim=2)
        written = synth.write_tree_fixture(tmp_path, tree)
        np.testing.assert_array_equal(synth.read_depths(written["depths"]), tree.depths)
        np.testing.assert_array_equal(storage.read_embedding(written["embedding"]).points, tree.embedding.points)

    def test_embedding_files_need_integer_node_ids(self, write_csv):
        with pytest.raises(MisalignedInputs):
            storage.read_embedding(write_csv("emb.csv", "node,dim_0,dim_1\n0xabc,0.1,0.2\n"))
        with pytest.raises(MisalignedInputs):
            storage.read_embedding(write_csv("emb.csv", "node,dim_0,dim_1\n0,0.1,high\n"))

    def test_tree_graph_degrees(self):
        spec = TreeSpec(branching=3, depth=2)
        edges, depths = synth.tree_edges(spec)
        graph = synth.tree_graph(edges, len(depths))
        assert graph.degree[0] == 3
        assert graph.degree[1] == 4
        assert graph.degree[-1] == 1


class TestPlantedRoles:
    """Three-tier planted graphs"""

    def test_label_counts(self, planted):
        _, labels = planted
        assert len(labels) == 112
        assert Counter(x.role for x in labels) == {Role.TRADER: 100, Role.BOT: 10, Role.TREASURY: 2}

    def test_transfer_volume(self, planted):
        records, _ = planted
        assert len(records) >= 3000
        assert all(r.value > 0 for r in records)
        assert [r.timestamp for r in records] == sorted(r.timestamp for r in records)

    def test_hubs_outrank_traders(self, planted):
        records, labels = planted
        graph = txgraph.build_graph(records)
        degree = {address: graph.degree[graph.index[address]] for address in graph.addresses}
        hubs = [degree[x.address] for x in labels if x.role == Role.TREASURY]
        traders = [degree[x.address] for x in labels if x.role == Role.TRADER]
        assert min(hubs) > np.median(traders)

    def test_hub_transfers_are_largest(self, planted):
        records, labels = planted
        hubs = {x.address for x in labels if x.role == Role.TREASURY}
        from_hubs = [r.value for r in records if r.sender in hubs]
        others = [r.value for r in records if r.sender not in hubs]
        assert min(from_hubs) > max(others)

    def test_same_seed_same_graph(self):
        spec = PlantedRoleSpec(n_hubs=1, n_relays=3, n_traders=10, n_transfers=50, seed=9)
        assert synth.generate_planted_graph(spec) == synth.generate_planted_graph(spec)

    def test_different_seed_different_addresses(self):
        first, _ = synth.generate_planted_graph(PlantedRoleSpec(n_transfers=50, seed=1))
        second, _ = synth.generate_planted_graph(PlantedRoleSpec(n_transfers=50, seed=2))
        assert {r.sender for r in first} != {r.sender for r in second}

    def test_name_tags_map_back_to_roles(self, planted, tmp_path):
        _, labels = planted
        path = synth.write_name_tags(tmp_path / "tags.csv", labels)
        reloaded = txgraph.load_labels(path).labels
        assert [(x.address, x.role) for x in reloaded] == [(x.address, x.role) for x in labels]

    def test_sigma_must_be_positive(self):
        with pytest.raises(ValueError):
            PlantedRoleSpec(hub_relay_value=(13.0, 0.0))
