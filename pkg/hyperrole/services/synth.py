"""
Synthetic fixtures: k-ary trees with ideal hyperbolic placements and
three-tier graphs with planted roles.
"""
import logging
from pathlib import Path
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from hyperrole.core.errors import ConfigError
from hyperrole.models.embedding import EmbeddingMatrix
from hyperrole.models.graph import Edge, TxGraph, make_graph
from hyperrole.schemas.labels import LabeledAddress, Role
from hyperrole.schemas.reports import MonotonicityReport
from hyperrole.schemas.synth import PlantedRoleSpec, TreeSpec
from hyperrole.schemas.transaction import TransactionRecord
from hyperrole.services import storage
from hyperrole.services.geometry import radius

logger = logging.getLogger(__name__)

# Radii equal to this many decimals rank as ties
RANK_DECIMALS = 12


class IdealTree(NamedTuple):
    edges: List[Edge]
    embedding: EmbeddingMatrix
    depths: np.ndarray


def tree_edges(spec: TreeSpec) -> Tuple[List[Edge], np.ndarray]:
    """Parent -> child edges of the complete tree in BFS id order, plus node depths"""
    depths = [0]
    edges = []
    frontier = [0]
    for depth in range(1, spec.depth + 1):
        next_frontier = []
        for parent in frontier:
            for _ in range(spec.branching):
                child = len(depths)
                depths.append(depth)
                edges.append((parent, child))
                next_frontier.append(child)
        frontier = next_frontier
    return edges, np.array(depths, dtype=np.int64)


def ideal_tree_embedding(spec: TreeSpec, dim: int, seed: int = 0) -> IdealTree:
    """
    Root at the origin, every depth-h node at norm tanh(h * step_length / 2)
    along its own seeded unit direction.
    """
    if dim < 2:
        raise ConfigError(f"ideal tree embedding needs dim >= 2, got {dim}")

    edges, depths = tree_edges(spec)
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((len(depths), dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    norms = np.tanh(depths * spec.step_length / 2.0)
    points = directions * norms[:, None]
    return IdealTree(edges, EmbeddingMatrix.for_graph(points), depths)


def tree_graph(edges: Sequence[Edge], n_nodes: int) -> TxGraph:
    """TxGraph over tree edges, one unit transfer per edge"""
    addresses = [f"node{i:06d}" for i in range(n_nodes)]
    return make_graph(addresses, {edge: [(1.0, 0)] for edge in edges})


def check_radius_monotonicity(emb: EmbeddingMatrix, depths: Sequence[int]) -> MonotonicityReport:
    """Spearman correlation between depth and hyperbolic radius"""
    depths = np.asarray(depths, dtype=np.float64)
    radii = np.round(radius(emb.points), RANK_DECIMALS)

    if len(radii) < 2 or np.all(radii == radii[0]) or np.all(depths == depths[0]):
        return MonotonicityReport(rho=0.0, degenerate=True, n_nodes=len(radii))

    rho, p_value = spearmanr(depths, radii)
    return MonotonicityReport(
        rho=round(float(rho), RANK_DECIMALS),
        degenerate=False,
        n_nodes=len(radii),
        p_value=float(p_value),
    )


# ============ Planted roles ============

def _address(rng: np.random.Generator) -> str:
    return "0x" + rng.bytes(20).hex()


def _links(rng, sources: List[str], targets: List[str], p: float) -> List[Tuple[str, str]]:
    """Bernoulli(p) links; every target keeps at least one source"""
    links = []
    for target in targets:
        chosen = [s for s in sources if rng.random() < p]
        if not chosen:
            chosen = [sources[rng.integers(len(sources))]]
        links.extend((s, target) for s in chosen)
    return links


def generate_planted_graph(spec: PlantedRoleSpec) -> Tuple[List[TransactionRecord], List[LabeledAddress]]:
    """
    Three-tier transaction graph with planted roles.

    Hubs (Treasury) send large, steady amounts to relays; relays (Bot)
    bridge hubs and traders; traders (Trader) exchange small, noisy amounts
    with the relays they are linked to. Every link carries at least one
    transfer, so the result may hold slightly more than `n_transfers` rows.
    """
    rng = np.random.default_rng(spec.seed)
    hubs = [_address(rng) for _ in range(spec.n_hubs)]
    relays = [_address(rng) for _ in range(spec.n_relays)]
    traders = [_address(rng) for _ in range(spec.n_traders)]

    hub_relay = _links(rng, hubs, relays, spec.p_hub_relay)
    relay_trader = _links(rng, relays, traders, spec.p_relay_trader)

    n_hub = max(int(round(spec.n_transfers * spec.hub_relay_share)), len(hub_relay))
    n_rest = max(spec.n_transfers - n_hub, len(relay_trader))
    n_down = max(int(round(n_rest * 0.6)), len(relay_trader))
    n_up = n_rest - n_down

    def spread(links, n):
        """Every link once, then uniform draws for the remainder"""
        extra = rng.integers(len(links), size=max(n - len(links), 0))
        return list(range(len(links))) + extra.tolist()

    rows = []
    for idx in spread(hub_relay, n_hub):
        hub, relay = hub_relay[idx]
        rows.append((hub, relay, spec.hub_relay_value, "mint"))
    for idx in spread(relay_trader, n_down):
        relay, trader = relay_trader[idx]
        rows.append((relay, trader, spec.relay_trader_value, "swapExactTokens"))
    if n_up > 0:
        for idx in rng.integers(len(relay_trader), size=n_up):
            relay, trader = relay_trader[idx]
            rows.append((trader, relay, spec.trader_relay_value, "transfer"))

    records = []
    for sender, recipient, (mean, sigma), function_name in rows:
        records.append(TransactionRecord(
            chain=spec.chain,
            token=spec.token,
            tx_id="0x" + rng.bytes(32).hex(),
            timestamp=int(spec.start_timestamp + rng.integers(spec.span_seconds + 1)),
            sender=sender,
            recipient=recipient,
            value=float(rng.lognormal(mean, sigma)),
            function_name=function_name,
        ))
    records.sort(key=lambda r: (r.timestamp, r.tx_id))

    labels = (
        [LabeledAddress(address=a, role=Role.TREASURY, source_name_tag=f"Gnosis Safe Treasury {i}") for i, a in enumerate(hubs)]
        + [LabeledAddress(address=a, role=Role.BOT, source_name_tag=f"MEV Bot {i}") for i, a in enumerate(relays)]
        + [LabeledAddress(address=a, role=Role.TRADER, source_name_tag=f"dex trader {i}") for i, a in enumerate(traders)]
    )
    logger.info(f"Planted graph: {len(labels)} addresses, {len(records)} transfers")
    return records, labels


def write_name_tags(path, labels: Sequence[LabeledAddress]) -> Path:
    """Label CSV in the raw address,name form"""
    frame = pd.DataFrame([(x.address, x.source_name_tag) for x in labels], columns=["address", "name"])
    return storage.write_frame(path, frame)


def write_tree_fixture(out_dir, tree: IdealTree) -> dict:
    out = storage.ensure_dir(out_dir)
    edges = pd.DataFrame(tree.edges, columns=["parent", "child"])
    depths = pd.DataFrame({"node": np.arange(len(tree.depths)), "depth": tree.depths})
    return {
        "edges": storage.write_frame(out / "tree_edges.csv", edges),
        "depths": storage.write_frame(out / "tree_depths.csv", depths),
        "embedding": storage.write_embedding(out / "tree_embedding.csv", tree.embedding),
    }


def read_depths(path) -> np.ndarray:
    frame = storage.read_frame(path, required=["node", "depth"]).sort_values("node")
    return frame["depth"].to_numpy()
