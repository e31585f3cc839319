import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import List

import numpy as np
from gensim.models import Word2Vec

from hyperrole.core.errors import EmptyInput
from hyperrole.models.embedding import EmbeddingMatrix
from hyperrole.models.graph import TxGraph
from hyperrole.schemas.config import WalkConfig

logger = logging.getLogger(__name__)

Walk = List[int]


def _stable_hash(text: str) -> int:
    """Process-independent hash used by gensim to seed word vectors"""
    return zlib.crc32(text.encode("utf-8"))


def _walks_from(graph: TxGraph, node: int, config: WalkConfig) -> List[Walk]:
    rng = np.random.default_rng([config.seed, node])
    neighbors = graph.sorted_neighbors
    walks = []
    for _ in range(config.walks_per_node):
        walk = [node]
        while len(walk) < config.walk_length:
            nbrs = neighbors[walk[-1]]
            if not nbrs:
                break
            walk.append(nbrs[rng.integers(len(nbrs))])
        walks.append(walk)
    return walks


def generate_walks(graph: TxGraph, config: WalkConfig) -> List[Walk]:
    """
    Truncated uniform random walks over undirected neighbours.

    Every node starts walks_per_node walks of walk_length nodes; walks from
    isolated nodes stop at the start node. Walks are returned round by
    round (all nodes' first walk, then all nodes' second walk, ...).
    """
    nodes = range(graph.n_nodes)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            per_node = list(pool.map(lambda n: _walks_from(graph, n, config), nodes))
    else:
        per_node = [_walks_from(graph, n, config) for n in nodes]

    walks = [per_node[n][r] for r in range(config.walks_per_node) for n in nodes]
    logger.info(f"Generated {len(walks)} walks over {graph.n_nodes} nodes")
    return walks


def train_walk_embeddings(walks: List[Walk], config: WalkConfig, n_nodes: int = None) -> EmbeddingMatrix:
    """
    Skip-gram with negative sampling over the walks.

    Fixed context window (no shrinking), unigram^0.75 negatives, learning
    rate decaying linearly from 0.025 to 1e-4. Single-threaded training is
    deterministic under the config seed.
    """
    if not walks:
        raise EmptyInput("cannot train walk embeddings without walks")

    sentences = [[str(node) for node in walk] for walk in walks]
    model = Word2Vec(
        sentences=sentences,
        vector_size=config.dim,
        window=config.context_size,
        shrink_windows=False,
        min_count=1,
        sample=0,
        sg=1,
        hs=0,
        negative=config.negatives,
        ns_exponent=0.75,
        alpha=0.025,
        min_alpha=1e-4,
        epochs=config.epochs,
        seed=config.seed,
        workers=config.workers,
        hashfxn=_stable_hash,
    )

    if n_nodes is None:
        n_nodes = max(max(walk) for walk in walks) + 1
    vectors = np.zeros((n_nodes, config.dim))
    for node in range(n_nodes):
        key = str(node)
        if key in model.wv.key_to_index:
            vectors[node] = model.wv[key]
    return EmbeddingMatrix.for_graph(vectors)


def walk_features(graph: TxGraph, config: WalkConfig) -> EmbeddingMatrix:
    return train_walk_embeddings(generate_walks(graph, config), config, graph.n_nodes)
