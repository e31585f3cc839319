import json
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel

from hyperrole.core.errors import EmptyFile, MisalignedInputs, MissingColumn
from hyperrole.models.embedding import HIER_COLUMNS, EmbeddingMatrix, HierFeatureTable

# Round-trips float64 exactly
FLOAT_FORMAT = "%.17g"


def ensure_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_json(path, data: Dict[Any, Any]) -> Path:
    """Pretty-print `data` to a local JSON file, creating parent directories; returns the path"""
    path = Path(path)
    ensure_dir(path.parent)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str), encoding="utf-8")
    return path


def read_json(path) -> Dict[Any, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_frame(path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    ensure_dir(path.parent)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_frame(path, required: Sequence[str] = ()) -> pd.DataFrame:
    """Read a CSV written by this module, checking the required header columns"""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise EmptyFile(f"{path} is empty")
    except FileNotFoundError:
        raise EmptyFile(f"{path} does not exist")

    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise MissingColumn(f"{path} has no column '{missing[0]}'")
    return frame


def write_models(path, rows: Sequence[BaseModel], columns: Sequence[str] = None) -> Path:
    """Write pydantic rows as CSV; `columns` fixes the header for empty tables"""
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=columns)
    return write_frame(path, frame)


# ============ Embeddings ============

def _check_numeric(path, frame: pd.DataFrame, columns: Sequence[str]) -> None:
    if not pd.api.types.is_integer_dtype(frame["node"]):
        raise MisalignedInputs(f"{path}: node ids must be integer graph node ids")
    for column in columns:
        if not pd.api.types.is_numeric_dtype(frame[column]):
            raise MisalignedInputs(f"{path}: column '{column}' is not numeric")


def write_embedding(path, emb: EmbeddingMatrix) -> Path:
    frame = pd.DataFrame(emb.points, columns=[f"dim_{i}" for i in range(emb.dim)])
    frame.insert(0, "node", emb.node_ids)
    return write_frame(path, frame)


def read_embedding(path) -> EmbeddingMatrix:
    frame = read_frame(path, required=["node"])
    dims = [c for c in frame.columns if c != "node"]
    expected = [f"dim_{i}" for i in range(len(dims))]
    if not dims or dims != expected:
        raise MisalignedInputs(f"{path} must have header node,dim_0,...,dim_(d-1)")
    if frame.empty:
        raise EmptyFile(f"{path} has no rows")
    _check_numeric(path, frame, dims)
    frame = frame.sort_values("node", kind="stable")
    return EmbeddingMatrix(frame[dims].to_numpy(dtype=np.float64), frame["node"].to_numpy())


def write_hier_features(path, table: HierFeatureTable) -> Path:
    frame = pd.DataFrame(table.values, columns=HIER_COLUMNS)
    frame.insert(0, "node", table.node_ids)
    return write_frame(path, frame)


def read_hier_features(path) -> HierFeatureTable:
    frame = read_frame(path, required=["node", *HIER_COLUMNS])
    if frame.empty:
        raise EmptyFile(f"{path} has no rows")
    _check_numeric(path, frame, HIER_COLUMNS)
    frame = frame.sort_values("node", kind="stable")
    return HierFeatureTable(frame[HIER_COLUMNS].to_numpy(dtype=np.float64), frame["node"].to_numpy())


def write_loss_trace(path, trace: List[Dict[str, float]]) -> Path:
    columns = ["epoch", "loss_contrastive", "loss_radial", "loss_total"]
    return write_frame(path, pd.DataFrame(trace, columns=columns))


# ============ Classifier outputs ============

METRIC_COLUMNS = ["model", "precision", "recall", "f1", "accuracy", "feature_dim"]


def write_predictions(path, rows: List[Dict[str, Any]], roles: Sequence[str]) -> Path:
    columns = ["node", "predicted_role"] + [f"prob_{role}" for role in roles]
    return write_frame(path, pd.DataFrame(rows, columns=columns))


def write_metrics(path, rows: Sequence[BaseModel]) -> Path:
    return write_models(path, rows, columns=METRIC_COLUMNS)


def write_classifier_trace(path, trace: List[Dict[str, float]]) -> Path:
    return write_frame(path, pd.DataFrame(trace, columns=["epoch", "train_loss", "val_macro_f1"]))
