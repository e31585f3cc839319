from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from hyperrole.core.errors import MisalignedInputs

HIER_COLUMNS: List[str] = [
    "r_self", "mu", "sigma", "alpha", "beta", "delta", "Delta", "b0", "b1", "b2", "b3",
]


@dataclass
class EmbeddingMatrix:
    """
    Per-node vectors aligned to graph node ids.

    Used for Poincaré points (every row inside the open unit ball) and for
    walk vectors, which share the same file format.
    """

    points: np.ndarray
    node_ids: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.node_ids = np.asarray(self.node_ids, dtype=np.int64)
        if self.points.ndim != 2 or self.points.shape[0] != self.node_ids.shape[0]:
            raise MisalignedInputs(
                f"embedding has {self.points.shape[0]} rows for {self.node_ids.shape[0]} node ids"
            )

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def copy(self) -> "EmbeddingMatrix":
        return EmbeddingMatrix(self.points.copy(), self.node_ids.copy())

    def aligned_to(self, node_ids: Sequence[int]) -> np.ndarray:
        """Rows reordered to follow `node_ids`; every id must be present"""
        position = {int(n): i for i, n in enumerate(self.node_ids)}
        missing = [int(n) for n in node_ids if int(n) not in position]
        if missing:
            raise MisalignedInputs(f"embedding has no row for node {missing[0]}")
        return self.points[[position[int(n)] for n in node_ids]]

    @classmethod
    def for_graph(cls, points: np.ndarray) -> "EmbeddingMatrix":
        return cls(points, np.arange(points.shape[0]))


@dataclass
class HierFeatureTable:
    """11-column radius statistics per node, columns in HIER_COLUMNS order"""

    values: np.ndarray
    node_ids: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.node_ids = np.asarray(self.node_ids, dtype=np.int64)
        if self.values.shape != (self.node_ids.shape[0], len(HIER_COLUMNS)):
            raise MisalignedInputs(
                f"hierarchical features must be {len(HIER_COLUMNS)} columns per node, "
                f"got shape {self.values.shape}"
            )

    def row(self, node: int) -> dict:
        return dict(zip(HIER_COLUMNS, self.values[node].tolist()))

    def aligned_to(self, node_ids: Sequence[int]) -> np.ndarray:
        return EmbeddingMatrix(self.values, self.node_ids).aligned_to(node_ids)
