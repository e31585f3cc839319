import logging
from collections import defaultdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from hyperrole.core.errors import EmptyFile, EmptyInput, MissingColumn
from hyperrole.models.graph import TxGraph, make_graph
from hyperrole.schemas.config import ColumnSchema
from hyperrole.schemas.labels import LabeledAddress, LabelLoadResult, Role
from hyperrole.schemas.transaction import IngestResult, TokenChainSummary, TransactionRecord
from hyperrole.services import storage
from hyperrole.services.bucketing import RoleRuleSet, assign_role

logger = logging.getLogger(__name__)

TRANSACTIONS_FILE = "transactions.csv"
RECORD_COLUMNS = ["chain", "token", "tx_id", "timestamp", "from", "to", "value", "function_name"]
# Epoch seconds pandas can represent as a Timestamp
MIN_TIMESTAMP = int(np.ceil(pd.Timestamp.min.timestamp()))
MAX_TIMESTAMP = int(np.floor(pd.Timestamp.max.timestamp()))


def _read_csv(path, what: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise EmptyFile(f"{what} {path} is empty")
    except FileNotFoundError:
        raise EmptyFile(f"{what} {path} does not exist")


def _parse_timestamps(column: pd.Series) -> pd.Series:
    """Integer epoch seconds or ISO-8601 strings; NaN where neither parses to a representable instant"""
    stripped = column.str.strip()
    seconds = pd.to_numeric(stripped, errors="coerce")
    textual = seconds.isna() & (stripped != "")
    if textual.any():
        parsed = pd.to_datetime(stripped[textual], utc=True, errors="coerce", format="ISO8601")
        epoch = pd.Series(np.nan, index=parsed.index)
        ok = parsed.notna()
        epoch[ok] = (parsed[ok] - pd.Timestamp(0, tz="UTC")) // pd.Timedelta(seconds=1)
        seconds = seconds.copy()
        seconds[textual] = epoch
    representable = np.isfinite(seconds) & (seconds >= MIN_TIMESTAMP) & (seconds <= MAX_TIMESTAMP)
    return seconds.where(representable)


def ingest_transactions(path, schema: Optional[ColumnSchema] = None) -> IngestResult:
    """
    Parse a decoded transaction dump.

    Rows whose value or timestamp do not parse (or whose value is negative,
    or whose sender/recipient is blank) are skipped and counted.

    Raises:
        MissingColumn: the schema names a column absent from the header
        EmptyFile: no data row survives parsing
    """
    schema = schema or ColumnSchema()
    frame = _read_csv(path, "transaction file")

    mapped = {field: column for field, column in schema.model_dump().items() if column}
    for field, column in mapped.items():
        if column not in frame.columns:
            raise MissingColumn(f"column '{column}' ({field}) not found in {path}")

    def column(field: str) -> pd.Series:
        if field in mapped:
            return frame[mapped[field]].str.strip()
        return pd.Series("", index=frame.index)

    values = pd.to_numeric(column("value"), errors="coerce")
    timestamps = _parse_timestamps(column("timestamp"))
    senders = column("sender")
    recipients = column("recipient")

    valid = (
        values.notna()
        & np.isfinite(values)
        & (values >= 0)
        & timestamps.notna()
        & (senders != "")
        & (recipients != "")
    )

    chains, tokens, tx_ids, functions = column("chain"), column("token"), column("tx_id"), column("function_name")
    records = [
        TransactionRecord(
            chain=chains[i],
            token=tokens[i],
            tx_id=tx_ids[i],
            timestamp=int(timestamps[i]),
            sender=senders[i],
            recipient=recipients[i],
            value=float(values[i]),
            function_name=functions[i],
        )
        for i in frame.index[valid.to_numpy()]
    ]
    skipped = int(len(frame) - len(records))

    if skipped:
        logger.warning(f"Skipped {skipped} unparseable rows in {path}")
    if not records:
        raise EmptyFile(f"no parseable transaction rows in {path}")

    logger.info(f"Ingested {len(records)} transactions from {path}")
    return IngestResult(records=records, skipped=skipped)


def build_graph(records: Sequence[TransactionRecord]) -> TxGraph:
    """
    Directed multigraph over every sender and recipient.

    Node ids follow sorted address order, so the result does not depend on
    the order of `records`.
    """
    if not records:
        raise EmptyInput("cannot build a graph from zero transactions")

    addresses = sorted({r.sender for r in records} | {r.recipient for r in records})
    index = {address: i for i, address in enumerate(addresses)}

    multi_edges: Dict[Tuple[int, int], list] = defaultdict(list)
    for r in records:
        multi_edges[(index[r.sender], index[r.recipient])].append((r.value, r.timestamp))

    graph = make_graph(addresses, multi_edges)
    logger.info(
        f"Built graph: {graph.n_nodes} nodes, {len(graph.simple_edges)} simple edges, "
        f"{graph.n_transfers} transfers"
    )
    return graph


def _day(timestamp: int) -> str:
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).strftime("%Y-%m-%d")


def summarize(records: Sequence[TransactionRecord]) -> List[TokenChainSummary]:
    """Per (token, chain): transaction count, unique addresses, first and last activity"""
    groups: Dict[Tuple[str, str], List[TransactionRecord]] = defaultdict(list)
    for r in records:
        groups[(r.token, r.chain)].append(r)

    summary = []
    for (token, chain), rows in sorted(groups.items()):
        stamps = [r.timestamp for r in rows]
        summary.append(TokenChainSummary(
            token=token,
            chain=chain,
            transactions=len(rows),
            addresses=len({r.sender for r in rows} | {r.recipient for r in rows}),
            first_timestamp=min(stamps),
            last_timestamp=max(stamps),
            start=_day(min(stamps)),
            end=_day(max(stamps)),
        ))
    return summary


def load_labels(path, rules: Optional[RoleRuleSet] = None) -> LabelLoadResult:
    """
    Read address,name rows and assign each address a role from its name tag.

    Duplicate addresses keep their first occurrence.
    """
    frame = _read_csv(path, "label file")
    for column in ("address", "name"):
        if column not in frame.columns:
            raise MissingColumn(f"column '{column}' not found in {path}")

    labels = []
    seen = set()
    duplicates = 0
    for address, name in zip(frame["address"].str.strip(), frame["name"]):
        if not address:
            continue
        if address in seen:
            duplicates += 1
            continue
        seen.add(address)
        labels.append(LabeledAddress(address=address, role=assign_role(name, rules), source_name_tag=name))

    if duplicates:
        logger.warning(f"{duplicates} duplicate addresses in {path}; first occurrence kept")
    return LabelLoadResult(labels=labels, duplicates=duplicates)


def read_labeled_addresses(path, rules: Optional[RoleRuleSet] = None) -> List[LabeledAddress]:
    """Labels from either a raw address,name file or a labelled address,role file"""
    frame = _read_csv(path, "label file")
    if "role" not in frame.columns:
        return load_labels(path, rules).labels
    if "address" not in frame.columns:
        raise MissingColumn(f"column 'address' not found in {path}")

    tags = frame["source_name_tag"] if "source_name_tag" in frame.columns else pd.Series("", index=frame.index)
    known = {role.value for role in Role}
    labels = {}
    unknown = 0
    for address, role, tag in zip(frame["address"].str.strip(), frame["role"].str.strip(), tags):
        if not address or address in labels:
            continue
        if role not in known:
            unknown += 1
            continue
        labels[address] = LabeledAddress(address=address, role=Role(role), source_name_tag=tag)

    if unknown:
        logger.warning(f"{unknown} rows in {path} carry an unknown role and were ignored")
    return list(labels.values())


def records_frame(records: Sequence[TransactionRecord]) -> pd.DataFrame:
    rows = [
        (r.chain, r.token, r.tx_id, r.timestamp, r.sender, r.recipient, r.value, r.function_name)
        for r in records
    ]
    return pd.DataFrame(rows, columns=RECORD_COLUMNS)


def write_records(path, records: Sequence[TransactionRecord]) -> Path:
    """Transactions in the default column schema"""
    return storage.write_frame(path, records_frame(records))


def write_labels(path, labels: Sequence[LabeledAddress]) -> Path:
    frame = pd.DataFrame(
        [(label.address, label.role.value, label.source_name_tag) for label in labels],
        columns=["address", "role", "source_name_tag"],
    )
    return storage.write_frame(path, frame)


def write_graph_bundle(graph: TxGraph, records: Sequence[TransactionRecord], out_dir) -> Dict[str, Path]:
    """
    Normalized transactions, node table, edge table and token/chain summary.

    Returns:
        name -> written path
    """
    out = storage.ensure_dir(out_dir)

    total_in = np.zeros(graph.n_nodes)
    total_out = np.zeros(graph.n_nodes)
    edge_rows = []
    for (u, v), transfers in graph.multi_edges.items():
        amount = float(np.sum([value for value, _ in transfers]))
        total_out[u] += amount
        total_in[v] += amount
        edge_rows.append((u, v, len(transfers), amount))

    nodes = pd.DataFrame({
        "node": np.arange(graph.n_nodes),
        "address": graph.addresses,
        "degree": graph.degree,
        "total_in": total_in,
        "total_out": total_out,
    })
    edges = pd.DataFrame(edge_rows, columns=["src", "dst", "count", "total_value"])

    written = {
        "transactions": write_records(out / TRANSACTIONS_FILE, records),
        "nodes": storage.write_frame(out / "nodes.csv", nodes),
        "edges": storage.write_frame(out / "edges.csv", edges),
        "summary": storage.write_models(
            out / "summary.csv", summarize(records), columns=list(TokenChainSummary.model_fields)
        ),
    }
    logger.info(f"Graph bundle written to {out}")
    return written


def load_graph(path, schema: Optional[ColumnSchema] = None) -> Tuple[List[TransactionRecord], TxGraph]:
    """Graph from a bundle directory or directly from a transaction CSV"""
    path = Path(path)
    if path.is_dir():
        path = path / TRANSACTIONS_FILE
        schema = None
    records = ingest_transactions(path, schema).records
    return records, build_graph(records)
