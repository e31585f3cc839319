"""
Liquidity-to-Average Ratio, node trust and trust-weighted refinement.

LAR(u, v) = sigma_uv / (mu_uv + eps) * (1 + in(v) / (out(v) + eps))

where mu_uv and sigma_uv are the mean and population standard deviation of
the u -> v transfer values inside the observation window, and in(v), out(v)
are v's total received and sent value inside the same window.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.special import expit

from hyperrole.core.errors import EmptyWindow
from hyperrole.models.embedding import EmbeddingMatrix
from hyperrole.models.graph import Edge, TxGraph
from hyperrole.schemas.config import RefineConfig
from hyperrole.services.geometry import distance, exp0, log0

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdgeFlowStats:
    mean: float
    std: float
    count: int
    window: Tuple[int, int]


@dataclass(frozen=True)
class NodeTrust:
    total_in: float
    total_out: float
    mean_incident_lar: float
    z_val: float
    z_lar: float
    tau: float


@dataclass
class TrustTable:
    """Column-wise trust diagnostics, one entry per node id"""

    total_in: np.ndarray
    total_out: np.ndarray
    mean_lar: np.ndarray
    z_val: np.ndarray
    z_lar: np.ndarray
    tau: np.ndarray

    def __getitem__(self, node: int) -> NodeTrust:
        return NodeTrust(
            total_in=float(self.total_in[node]),
            total_out=float(self.total_out[node]),
            mean_incident_lar=float(self.mean_lar[node]),
            z_val=float(self.z_val[node]),
            z_lar=float(self.z_lar[node]),
            tau=float(self.tau[node]),
        )

    def __len__(self) -> int:
        return len(self.tau)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "node": np.arange(len(self.tau)),
            "total_in": self.total_in,
            "total_out": self.total_out,
            "mean_lar": self.mean_lar,
            "z_val": self.z_val,
            "z_lar": self.z_lar,
            "tau": self.tau,
        })


def observation_window(graph: TxGraph, config: RefineConfig) -> Tuple[int, int]:
    """[start, start + window_delta], by default the graph's whole time span"""
    first, last = graph.time_span
    start = config.window_start if config.window_start is not None else first
    end = start + config.window_delta if config.window_delta is not None else last
    return start, end


def _in_window(transfers, window: Tuple[int, int]) -> List[float]:
    start, end = window
    return [value for value, ts in transfers if start <= ts <= end]


def node_flows(graph: TxGraph, window: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """Total received and sent value per node inside the window"""
    incoming: List[List[float]] = [[] for _ in range(graph.n_nodes)]
    outgoing: List[List[float]] = [[] for _ in range(graph.n_nodes)]
    for (u, v), transfers in graph.multi_edges.items():
        values = _in_window(transfers, window)
        outgoing[u].extend(values)
        incoming[v].extend(values)
    total_in = np.array([math.fsum(values) for values in incoming])
    total_out = np.array([math.fsum(values) for values in outgoing])
    return total_in, total_out


def edge_flow_stats(graph: TxGraph, u: int, v: int, window: Tuple[int, int]) -> EdgeFlowStats:
    values = _in_window(graph.multi_edges.get((u, v), ()), window)
    if not values:
        raise EmptyWindow(f"no transfers {u}->{v} inside window {window}")
    values = np.array(values)
    return EdgeFlowStats(mean=float(values.mean()), std=float(values.std()), count=len(values), window=window)


def _lar(stats: EdgeFlowStats, total_in: float, total_out: float, eps: float) -> float:
    return stats.std / (stats.mean + eps) * (1.0 + total_in / (total_out + eps))


def edge_lar(graph: TxGraph, u: int, v: int, config: RefineConfig) -> float:
    """
    LAR of the simple edge u -> v.

    Raises:
        EmptyWindow: no u -> v transfer falls inside the window
    """
    window = observation_window(graph, config)
    stats = edge_flow_stats(graph, u, v, window)
    total_in, total_out = node_flows(graph, window)
    return _lar(stats, total_in[v], total_out[v], config.smoothing_eps)


def compute_edge_lars(graph: TxGraph, config: RefineConfig) -> Dict[Edge, float]:
    """LAR of every simple edge with at least one transfer in the window"""
    window = observation_window(graph, config)
    total_in, total_out = node_flows(graph, window)

    lars = {}
    empty = 0
    for (u, v) in graph.multi_edges:
        try:
            stats = edge_flow_stats(graph, u, v, window)
        except EmptyWindow:
            empty += 1
            continue
        lars[(u, v)] = _lar(stats, total_in[v], total_out[v], config.smoothing_eps)

    if empty:
        logger.info(f"{empty} edges have no transfers in window {window} and carry no LAR")
    return lars


def _zscore(x: np.ndarray) -> np.ndarray:
    std = x.std()
    if std == 0:
        return np.zeros_like(x)
    return (x - x.mean()) / std


def node_trust(graph: TxGraph, lar_by_edge: Dict[Edge, float], config: RefineConfig) -> TrustTable:
    """
    tau_i = logistic(z_val - z_lar) with z-scores over all nodes of
    log(received value + eps) and log(mean incident LAR + eps).
    """
    eps = config.smoothing_eps
    total_in, total_out = node_flows(graph, observation_window(graph, config))

    incident: List[List[float]] = [[] for _ in range(graph.n_nodes)]
    for (u, v), lar in sorted(lar_by_edge.items()):
        incident[u].append(lar)
        if v != u:
            incident[v].append(lar)
    mean_lar = np.array([math.fsum(values) / len(values) if values else 0.0 for values in incident])

    z_val = _zscore(np.log(total_in + eps))
    z_lar = _zscore(np.log(mean_lar + eps))
    tau = expit(z_val - z_lar)
    return TrustTable(total_in, total_out, mean_lar, z_val, z_lar, tau)


def neighbor_weights(graph: TxGraph, tau: np.ndarray) -> sparse.csr_matrix:
    """
    Row-stochastic alpha: alpha_ij = tau_j / sum_{k in N(i)} tau_k over
    undirected neighbours. Rows of isolated nodes are empty.
    """
    rows, cols = [], []
    for i, nbrs in enumerate(graph.sorted_neighbors):
        rows.extend([i] * len(nbrs))
        cols.extend(nbrs)
    rows = np.array(rows, dtype=np.int64)
    cols = np.array(cols, dtype=np.int64)

    tau = np.asarray(tau, dtype=np.float64)
    data = tau[cols]
    row_sums = np.bincount(rows, weights=data, minlength=graph.n_nodes)
    data = data / row_sums[rows]
    return sparse.csr_matrix((data, (rows, cols)), shape=(graph.n_nodes, graph.n_nodes))


def refine_with_trace(
    emb: EmbeddingMatrix,
    graph: TxGraph,
    trust: TrustTable,
    config: RefineConfig,
    delta: float = 1e-15,
    eps: float = 1e-5,
) -> Tuple[EmbeddingMatrix, List[float]]:
    """
    Synchronous trust-weighted refinement.

    Each step replaces z_i by exp0(sum_j alpha_ij log0(z_j)) for every node
    with a neighbour, reading only the pre-step embedding. Stops after
    `config.steps` steps, or earlier once the largest displacement falls
    below `config.convergence_tol`.

    Returns:
        The refined embedding and the max displacement of every step run
    """
    weights = neighbor_weights(graph, trust.tau)
    has_neighbors = graph.degree > 0
    points = emb.points.copy()
    displacements = []

    for step in range(config.steps):
        tangent = weights @ log0(points)
        updated = points.copy()
        updated[has_neighbors] = exp0(tangent[has_neighbors], delta, eps)
        moved = float(distance(points, updated).max()) if len(points) else 0.0
        points = updated
        displacements.append(moved)
        logger.debug(f"refine step {step + 1}: max displacement {moved:.3e}")
        if moved < config.convergence_tol:
            logger.info(f"Refinement converged after {step + 1} steps")
            break

    return EmbeddingMatrix(points, emb.node_ids.copy()), displacements


def refine(
    emb: EmbeddingMatrix,
    graph: TxGraph,
    trust: TrustTable,
    config: RefineConfig,
    delta: float = 1e-15,
    eps: float = 1e-5,
) -> EmbeddingMatrix:
    return refine_with_trace(emb, graph, trust, config, delta, eps)[0]


def trust_for(graph: TxGraph, config: RefineConfig) -> Tuple[Dict[Edge, float], TrustTable]:
    lars = compute_edge_lars(graph, config)
    return lars, node_trust(graph, lars, config)
