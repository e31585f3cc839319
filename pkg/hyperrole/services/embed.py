"""
Poincaré embedding trainer.

Loss: hinge contrastive term over simple directed edges with uniformly
sampled negatives, plus a radial term pulling each norm towards
1 - deg(v) / max_deg. Updates are Riemannian SGD steps retracted with
Möbius addition and projected back into the ball.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from hyperrole.core.errors import DegenerateGraph, NumericFailure
from hyperrole.models.embedding import EmbeddingMatrix
from hyperrole.models.graph import TxGraph
from hyperrole.schemas.config import TrainConfig
from hyperrole.services.geometry import (
    distance,
    distance_grad,
    mobius_add,
    pairwise_distance,
    riemannian_rescale,
)

logger = logging.getLogger(__name__)

NORM_GUARD = 1e-12
TRACE_CHUNK = 4096

Points = Union[EmbeddingMatrix, np.ndarray]


@dataclass
class TrainResult:
    embedding: EmbeddingMatrix
    trace: List[Dict[str, float]] = field(default_factory=list)


def _as_points(emb: Points) -> np.ndarray:
    if isinstance(emb, EmbeddingMatrix):
        return emb.points
    return np.asarray(emb, dtype=np.float64)


def radial_targets(graph: TxGraph) -> np.ndarray:
    """Target norm per node: 1 - deg(v) / max_deg"""
    max_degree = int(graph.degree.max()) if graph.n_nodes else 0
    if max_degree == 0:
        raise DegenerateGraph("every node has degree 0; the radial target is undefined")
    return 1.0 - graph.degree / max_degree


def init_embeddings(graph: TxGraph, config: TrainConfig) -> EmbeddingMatrix:
    """Points drawn uniformly from the ball of radius init_scale"""
    rng = np.random.default_rng(config.seed)
    directions = rng.standard_normal((graph.n_nodes, config.dim))
    directions /= np.maximum(np.linalg.norm(directions, axis=1, keepdims=True), NORM_GUARD)
    radii = config.init_scale * rng.random(graph.n_nodes) ** (1.0 / config.dim)
    return EmbeddingMatrix.for_graph(directions * radii[:, None])


# ============ Loss terms ============

def _hinge_parts(points: np.ndarray, i: np.ndarray, j: np.ndarray, k: np.ndarray, margin: float):
    zi, zj, zk = points[i], points[j], points[k]
    slack = distance(zi, zj) - distance(zi, zk) + margin
    grad_i = distance_grad(zi, zj) - distance_grad(zi, zk)
    grad_j = distance_grad(zj, zi)
    grad_k = -distance_grad(zk, zi)
    return slack, grad_i, grad_j, grad_k


def _expand(positives: np.ndarray, negatives: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 2)
    negatives = np.asarray(negatives, dtype=np.int64).reshape(len(positives), -1)
    per = negatives.shape[1]
    return np.repeat(positives[:, 0], per), np.repeat(positives[:, 1], per), negatives.ravel()


def contrastive_loss(emb: Points, positives: np.ndarray, negatives: np.ndarray, margin: float) -> float:
    """Mean over positives and their negatives of [d(i,j+) - d(i,j-) + margin]_+"""
    points = _as_points(emb)
    i, j, k = _expand(positives, negatives)
    if len(i) == 0:
        return 0.0
    slack = distance(points[i], points[j]) - distance(points[i], points[k]) + margin
    return float(np.mean(np.maximum(slack, 0.0)))


def contrastive_grad(emb: Points, positives: np.ndarray, negatives: np.ndarray, margin: float) -> np.ndarray:
    points = _as_points(emb)
    i, j, k = _expand(positives, negatives)
    grad = np.zeros_like(points)
    if len(i) == 0:
        return grad
    slack, grad_i, grad_j, grad_k = _hinge_parts(points, i, j, k, margin)
    weight = (slack > 0).astype(np.float64)[:, None] / len(i)
    np.add.at(grad, i, weight * grad_i)
    np.add.at(grad, j, weight * grad_j)
    np.add.at(grad, k, weight * grad_k)
    return grad


def _radial_loss(points: np.ndarray, targets: np.ndarray) -> float:
    norms = np.linalg.norm(points, axis=1)
    return float(np.mean((norms - targets) ** 2))


def _radial_grad(points: np.ndarray, targets: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(points, axis=1)
    coef = 2.0 * (norms - targets) / np.maximum(norms, NORM_GUARD) / len(points)
    return coef[:, None] * points


def radial_loss(emb: Points, graph: TxGraph) -> float:
    """Mean over nodes of (|z_v| - (1 - deg(v) / max_deg))^2"""
    return _radial_loss(_as_points(emb), radial_targets(graph))


def radial_grad(emb: Points, graph: TxGraph) -> np.ndarray:
    return _radial_grad(_as_points(emb), radial_targets(graph))


def total_loss_and_grad(
    emb: Points,
    graph: TxGraph,
    negatives: np.ndarray,
    margin: float,
    radial_weight: float,
) -> Tuple[float, np.ndarray]:
    """L = L_c + beta * L_r over the graph's positives and the given negatives"""
    points = _as_points(emb)
    positives = graph.positive_edges
    targets = radial_targets(graph)
    loss = contrastive_loss(points, positives, negatives, margin) + radial_weight * _radial_loss(points, targets)
    grad = contrastive_grad(points, positives, negatives, margin) + radial_weight * _radial_grad(points, targets)
    return loss, grad


def expected_contrastive_loss(points: np.ndarray, positives: np.ndarray, margin: float) -> float:
    """Contrastive loss averaged exactly over uniform negatives j- in V"""
    total = 0.0
    for start in range(0, len(positives), TRACE_CHUNK):
        block = positives[start:start + TRACE_CHUNK]
        dist = pairwise_distance(points[block[:, 0]], points)
        d_pos = dist[np.arange(len(block)), block[:, 1]]
        total += float(np.maximum(d_pos[:, None] - dist + margin, 0.0).mean(axis=1).sum())
    return total / len(positives)


# ============ Training ============

def _sgd_step(
    points: np.ndarray,
    batch: np.ndarray,
    negatives: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig,
    lr: float,
) -> None:
    """One Riemannian SGD update of every point touched by `batch`"""
    i, j, k = _expand(batch, negatives)
    per = negatives.shape[1]
    slack, grad_i, grad_j, grad_k = _hinge_parts(points, i, j, k, config.margin)
    weight = (slack > 0).astype(np.float64)[:, None] / per

    nodes, inverse = np.unique(np.concatenate([i, j, k]), return_inverse=True)
    n = len(i)
    grad = np.zeros((len(nodes), points.shape[1]))
    np.add.at(grad, inverse[:n], weight * grad_i)
    np.add.at(grad, inverse[n:2 * n], weight * grad_j)
    np.add.at(grad, inverse[2 * n:], weight * grad_k)

    if config.radial_weight > 0:
        ends = np.concatenate([batch[:, 0], batch[:, 1]])
        z = points[ends]
        norms = np.linalg.norm(z, axis=1)
        coef = 2.0 * config.radial_weight * (norms - targets[ends]) / np.maximum(norms, NORM_GUARD)
        np.add.at(grad, np.searchsorted(nodes, ends), coef[:, None] * z)

    current = points[nodes]
    step = -lr * riemannian_rescale(current, grad)
    points[nodes] = mobius_add(current, step, config.eps_boundary)


def _learning_rate(config: TrainConfig, epoch: int) -> float:
    if config.epochs == 1:
        return config.learning_rate
    frac = epoch / (config.epochs - 1)
    return config.learning_rate + (config.final_learning_rate - config.learning_rate) * frac


def _visit(points, positives, negatives, order, targets, config, lr) -> None:
    for start in range(0, len(order), config.batch_size):
        sel = order[start:start + config.batch_size]
        _sgd_step(points, positives[sel], negatives[sel], targets, config, lr)


def train(
    graph: TxGraph,
    config: TrainConfig,
    init: Optional[EmbeddingMatrix] = None,
    progress: bool = False,
) -> TrainResult:
    """
    Train the embedding.

    Each epoch visits the positives in a seeded shuffle, draws
    `negatives_per_positive` uniform negatives per positive and applies one
    update per batch of `batch_size` positives. The trace records the loss
    over the whole graph after every epoch, with the contrastive part taken
    as its expectation over uniform negatives.

    Raises:
        DegenerateGraph: no edge between distinct addresses
        NumericFailure: the loss became non-finite
    """
    positives = graph.positive_edges
    if len(positives) == 0:
        raise DegenerateGraph(f"graph with {graph.n_nodes} nodes has no edge between distinct addresses")
    targets = radial_targets(graph)

    rng = np.random.default_rng(config.seed)
    emb = init.copy() if init is not None else init_embeddings(graph, config)
    points = emb.points
    if points.shape != (graph.n_nodes, config.dim):
        raise DegenerateGraph(f"initial embedding shape {points.shape} does not match the graph")

    trace = []
    hogwild = config.workers > 1
    pool = ThreadPoolExecutor(max_workers=config.workers) if hogwild else None
    try:
        for epoch in tqdm(range(config.epochs), desc="embed", disable=not progress):
            lr = _learning_rate(config, epoch)
            order = rng.permutation(len(positives))
            negatives = rng.integers(0, graph.n_nodes, size=(len(positives), config.negatives_per_positive))

            if hogwild:
                shards = np.array_split(order, config.workers)
                list(pool.map(lambda shard: _visit(points, positives, negatives, shard, targets, config, lr), shards))
            else:
                _visit(points, positives, negatives, order, targets, config, lr)

            loss_c = expected_contrastive_loss(points, positives, config.margin)
            loss_r = _radial_loss(points, targets)
            loss = loss_c + config.radial_weight * loss_r
            if not np.isfinite(loss):
                raise NumericFailure(f"non-finite loss at epoch {epoch + 1}")
            trace.append({
                "epoch": epoch + 1,
                "loss_contrastive": loss_c,
                "loss_radial": loss_r,
                "loss_total": loss,
            })
            logger.debug(f"epoch {epoch + 1}: loss={loss:.6f} lr={lr:.5f}")
    finally:
        if pool is not None:
            pool.shutdown()

    logger.info(f"Embedding trained: {config.epochs} epochs, final loss {trace[-1]['loss_total']:.6f}")
    return TrainResult(embedding=emb, trace=trace)

