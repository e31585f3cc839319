from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Dict, FrozenSet, List, Mapping, Tuple

import networkx as nx
import numpy as np

Transfer = Tuple[float, int]  # (value, timestamp)
Edge = Tuple[int, int]


@dataclass(frozen=True)
class TxGraph:
    """
    Directed transaction multigraph over addresses.

    Node ids are dense (0..n-1) and follow sorted address order. multi_edges
    keeps every transfer of a directed pair in timestamp order; the simple
    views (simple_edges, undirected_neighbors, degree) deduplicate pairs and
    ignore self-loops for neighborhoods and degree.
    """

    addresses: Tuple[str, ...]
    multi_edges: Mapping[Edge, Tuple[Transfer, ...]]
    undirected_neighbors: Tuple[FrozenSet[int], ...]
    degree: np.ndarray
    index: Mapping[str, int] = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.addresses)

    @cached_property
    def simple_edges(self) -> FrozenSet[Edge]:
        return frozenset(self.multi_edges)

    @cached_property
    def edge_array(self) -> np.ndarray:
        """Simple edges as a sorted (m, 2) array, self-loops included"""
        edges = sorted(self.multi_edges)
        array = np.array(edges, dtype=np.int64).reshape(-1, 2)
        array.flags.writeable = False
        return array

    @cached_property
    def positive_edges(self) -> np.ndarray:
        """Simple edges without self-loops: the contrastive positives"""
        edges = self.edge_array
        positives = edges[edges[:, 0] != edges[:, 1]].copy()
        positives.flags.writeable = False
        return positives

    @cached_property
    def sorted_neighbors(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(tuple(sorted(nbrs)) for nbrs in self.undirected_neighbors)

    @property
    def n_transfers(self) -> int:
        return sum(len(transfers) for transfers in self.multi_edges.values())

    @cached_property
    def time_span(self) -> Tuple[int, int]:
        stamps = [ts for transfers in self.multi_edges.values() for _, ts in transfers]
        return min(stamps), max(stamps)

    @cached_property
    def undirected(self) -> nx.Graph:
        """Simple undirected view (no self-loops) for BFS and walks"""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_nodes))
        for u, nbrs in enumerate(self.undirected_neighbors):
            graph.add_edges_from((u, v) for v in nbrs if v > u)
        return graph


def make_graph(
    addresses: List[str],
    multi_edges: Dict[Edge, List[Transfer]],
) -> TxGraph:
    """Freeze raw adjacency into an immutable TxGraph"""
    neighbors: List[set] = [set() for _ in addresses]
    for u, v in multi_edges:
        if u == v:
            continue
        neighbors[u].add(v)
        neighbors[v].add(u)

    degree = np.array([len(nbrs) for nbrs in neighbors], dtype=np.int64)
    degree.flags.writeable = False

    frozen_edges = {
        edge: tuple(sorted(transfers, key=lambda t: (t[1], t[0])))
        for edge, transfers in sorted(multi_edges.items())
    }
    return TxGraph(
        addresses=tuple(addresses),
        multi_edges=MappingProxyType(frozen_edges),
        undirected_neighbors=tuple(frozenset(nbrs) for nbrs in neighbors),
        degree=degree,
        index=MappingProxyType({address: i for i, address in enumerate(addresses)}),
    )
