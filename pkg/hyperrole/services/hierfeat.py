import logging
from typing import FrozenSet, List

import networkx as nx
import numpy as np

from hyperrole.core.errors import ConfigError
from hyperrole.models.embedding import HIER_COLUMNS, EmbeddingMatrix, HierFeatureTable
from hyperrole.models.graph import TxGraph
from hyperrole.services.geometry import radius

logger = logging.getLogger(__name__)

# Relative radii are clipped into [-1, 1] and binned on these edges
HIST_EDGES = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])


def k_hop_neighborhood(graph: TxGraph, node: int, k: int) -> FrozenSet[int]:
    """Nodes within k undirected hops of `node`, excluding the node itself"""
    if k == 1:
        return graph.undirected_neighbors[node]
    reached = nx.single_source_shortest_path_length(graph.undirected, node, cutoff=k)
    return frozenset(u for u in reached if u != node)


def radius_statistics(r_self: float, r_nbrs: np.ndarray) -> List[float]:
    if len(r_nbrs) == 0:
        return [r_self] + [0.0] * (len(HIER_COLUMNS) - 1)

    rel = r_nbrs - r_self
    counts, _ = np.histogram(np.clip(rel, -1.0, 1.0), bins=HIST_EDGES)
    hist = counts / len(rel)
    return [
        r_self,
        float(r_nbrs.mean()),
        float(r_nbrs.std()),
        float(np.mean(r_nbrs > r_self)),
        float(np.mean(r_nbrs < r_self)),
        float(rel.min()),
        float(rel.max()),
        *hist.tolist(),
    ]


def hier_features(emb: EmbeddingMatrix, graph: TxGraph, k: int = 1) -> HierFeatureTable:
    """
    Radius statistics of each node's k-hop neighbourhood.

    Columns: own radius, neighbour radius mean and population std, fraction
    of deeper (larger radius) and shallower neighbours, min and max relative
    radius, and a 4-bin histogram of relative radii as fractions. Nodes with
    an empty neighbourhood keep their own radius and zeros elsewhere.
    """
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")

    points = emb.aligned_to(range(graph.n_nodes))
    radii = radius(points)

    rows = []
    for node in range(graph.n_nodes):
        nbrs = sorted(k_hop_neighborhood(graph, node, k))
        rows.append(radius_statistics(float(radii[node]), radii[nbrs]))

    logger.info(f"Hierarchical features computed for {graph.n_nodes} nodes (k={k})")
    return HierFeatureTable(np.array(rows, dtype=np.float64).reshape(-1, len(HIER_COLUMNS)), np.arange(graph.n_nodes))
