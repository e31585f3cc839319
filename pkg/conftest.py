"""
Shared fixtures for the pipeline test suite.
"""
import numpy as np
import pytest

from hyperrole.models.graph import make_graph
from hyperrole.schemas.synth import PlantedRoleSpec
from hyperrole.services import synth


def graph_of(transfers, n_nodes=None):
    """TxGraph from (u, v, value, timestamp) tuples over addresses a000, a001, ..."""
    if n_nodes is None:
        n_nodes = max(max(u, v) for u, v, _, _ in transfers) + 1
    multi_edges = {}
    for u, v, value, ts in transfers:
        multi_edges.setdefault((u, v), []).append((float(value), int(ts)))
    return make_graph([f"a{i:03d}" for i in range(n_nodes)], multi_edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_csv(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture(scope="session")
def planted():
    """Default planted-role graph (2 hubs, 10 relays, 100 traders)"""
    return synth.generate_planted_graph(PlantedRoleSpec())


@pytest.fixture
def star_graph():
    """Hub 0 linked to leaves 1..4, one transfer each way"""
    transfers = []
    for leaf in range(1, 5):
        transfers.append((0, leaf, 10.0 * leaf, leaf))
        transfers.append((leaf, 0, 5.0, 10 + leaf))
    return graph_of(transfers)
