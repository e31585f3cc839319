"""
Role classifier over concatenated [z || r || h] node features.
"""
import copy
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from sklearn.metrics import confusion_matrix
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import StandardScaler
from torch import nn
from tqdm import tqdm

from hyperrole.core.errors import (
    ClassTooSmall,
    EmptyTest,
    InvalidSplit,
    MisalignedInputs,
    SingleClassTrain,
)
from hyperrole.models.classifier import RoleMLP
from hyperrole.models.embedding import HIER_COLUMNS, EmbeddingMatrix, HierFeatureTable
from hyperrole.models.graph import TxGraph
from hyperrole.schemas.config import ClassifierConfig
from hyperrole.schemas.labels import ROLE_INDEX, ROLE_ORDER, LabeledAddress
from hyperrole.schemas.reports import (
    ClassMetrics,
    DatasetProfileReport,
    EvaluationReport,
    ProfileDiscrepancy,
    VariantMetrics,
)
from hyperrole.schemas.transaction import TransactionRecord

logger = logging.getLogger(__name__)

N_CLASSES = len(ROLE_ORDER)

# (name, use_hier, use_walk), smallest feature set first
ABLATION_VARIANTS = [
    ("w/o H, w/o T", False, False),
    ("w/ H, w/o T", True, False),
    ("w/o H, w/ T", False, True),
    ("w/ H, w/ T", True, True),
]


# ============ Features ============

@dataclass
class FeatureSet:
    x: np.ndarray
    node_ids: np.ndarray
    columns: List[str]
    use_hier: bool
    use_walk: bool

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def rows(self, nodes: Sequence[int]) -> np.ndarray:
        position = {int(n): i for i, n in enumerate(self.node_ids)}
        return self.x[[position[int(n)] for n in nodes]]


def assemble_features(
    emb: EmbeddingMatrix,
    walk_vecs: Optional[EmbeddingMatrix],
    hier: Optional[HierFeatureTable],
    use_hier: bool = True,
    use_walk: bool = True,
) -> FeatureSet:
    """
    Concatenate [z || r || h] per node, omitting ablated blocks.

    Raises:
        MisalignedInputs: a block is missing or covers different node ids
    """
    node_ids = np.sort(emb.node_ids)
    blocks = [emb.aligned_to(node_ids)]
    columns = [f"z_{i}" for i in range(emb.dim)]

    def check(other_ids, name):
        if len(other_ids) != len(node_ids) or not np.array_equal(np.sort(other_ids), node_ids):
            raise MisalignedInputs(f"{name} rows do not cover the same nodes as the embedding")

    if use_walk:
        if walk_vecs is None:
            raise MisalignedInputs("walk features requested but not provided")
        check(walk_vecs.node_ids, "walk feature")
        blocks.append(walk_vecs.aligned_to(node_ids))
        columns += [f"r_{i}" for i in range(walk_vecs.dim)]
    if use_hier:
        if hier is None:
            raise MisalignedInputs("hierarchical features requested but not provided")
        check(hier.node_ids, "hierarchical feature")
        blocks.append(hier.aligned_to(node_ids))
        columns += [f"h_{c}" for c in HIER_COLUMNS]

    return FeatureSet(np.hstack(blocks), node_ids, columns, use_hier, use_walk)


def label_nodes(graph: TxGraph, labels: Sequence[LabeledAddress]) -> Tuple[np.ndarray, np.ndarray]:
    """(node ids, class indices) for labelled addresses present in the graph"""
    pairs = sorted(
        (graph.index[label.address], ROLE_INDEX[label.role])
        for label in labels
        if label.address in graph.index
    )
    dropped = len(labels) - len(pairs)
    if dropped:
        logger.warning(f"{dropped} labelled addresses are not in the graph")
    nodes = np.array([n for n, _ in pairs], dtype=np.int64)
    y = np.array([c for _, c in pairs], dtype=np.int64)
    return nodes, y


# ============ Split ============

def stratified_split(y: np.ndarray, test_fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stratified (train, test) row indices.

    Raises:
        InvalidSplit: fraction outside (0, 1) or too few rows per split
        ClassTooSmall: a class has fewer than two members
    """
    y = np.asarray(y)
    if not 0.0 < test_fraction < 1.0:
        raise InvalidSplit(f"test fraction must lie in (0, 1), got {test_fraction}")

    counts = Counter(y.tolist())
    small = sorted(c for c, n in counts.items() if n < 2)
    if small:
        raise ClassTooSmall(f"class {_class_name(small[0])} has fewer than 2 members")

    try:
        train_idx, test_idx = train_test_split(
            np.arange(len(y)), test_size=test_fraction, stratify=y, random_state=seed
        )
    except ValueError as e:
        raise InvalidSplit(str(e))
    return np.sort(train_idx), np.sort(test_idx)


def _validation_split(y: np.ndarray, fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Stratified carve-out; classes with fewer than two rows stay in the fit part"""
    counts = np.bincount(y, minlength=N_CLASSES)
    eligible = np.flatnonzero(counts[y] >= 2)
    kept = np.flatnonzero(counts[y] < 2)
    try:
        fit_idx, val_idx = train_test_split(
            eligible, test_size=fraction, stratify=y[eligible], random_state=seed
        )
    except ValueError:
        logger.warning("Training rows too few for a validation carve-out; validating on training rows")
        return np.arange(len(y)), np.arange(len(y))
    return np.sort(np.concatenate([fit_idx, kept])), np.sort(val_idx)


# ============ Metrics ============

def _class_name(c: int) -> str:
    return ROLE_ORDER[c].value if 0 <= c < N_CLASSES else str(c)


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def metrics_from_confusion(cm: np.ndarray, class_names: Optional[List[str]] = None) -> EvaluationReport:
    """
    Macro and weighted precision/recall/F1 plus accuracy from a confusion
    matrix with truth on rows. Classes without test support are left out of
    the averages.
    """
    cm = np.asarray(cm, dtype=np.int64)
    names = class_names or [_class_name(c) for c in range(cm.shape[0])]
    total = int(cm.sum())
    if total == 0:
        raise EmptyTest("no test rows to evaluate")

    per_class = []
    for c in range(cm.shape[0]):
        tp = int(cm[c, c])
        predicted = int(cm[:, c].sum())
        support = int(cm[c, :].sum())
        precision = _ratio(tp, predicted)
        recall = _ratio(tp, support)
        f1 = _ratio(2 * precision * recall, precision + recall)
        per_class.append(ClassMetrics(role=names[c], precision=precision, recall=recall, f1=f1, support=support))

    present = [m for m in per_class if m.support > 0]

    def macro(attr):
        return sum(getattr(m, attr) for m in present) / len(present)

    def weighted(attr):
        return sum(getattr(m, attr) * m.support for m in present) / total

    return EvaluationReport(
        precision=macro("precision"),
        recall=macro("recall"),
        f1=macro("f1"),
        accuracy=int(np.trace(cm)) / total,
        weighted_precision=weighted("precision"),
        weighted_recall=weighted("recall"),
        weighted_f1=weighted("f1"),
        per_class=per_class,
        confusion=cm.tolist(),
        n_test=total,
    )


# ============ Model ============

@dataclass
class TrainedClassifier:
    model: RoleMLP
    mean: np.ndarray
    scale: np.ndarray
    columns: List[str]
    use_hier: bool
    use_walk: bool
    hidden_width: int
    dropout: float
    trace: List[Dict[str, float]] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def in_features(self) -> int:
        return len(self.columns)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise MisalignedInputs(
                f"model expects {self.in_features} features, got {x.shape[1] if x.ndim == 2 else x.shape}"
            )
        scaled = torch.as_tensor((x - self.mean) / self.scale, dtype=torch.float32)
        self.model.eval()
        with torch.no_grad():
            return torch.softmax(self.model(scaled), dim=1).double().numpy()

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.predict_proba(x).argmax(axis=1)


def _fit_scaler(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    scaler = StandardScaler().fit(x)
    mean = scaler.mean_.copy()
    scale = scaler.scale_.copy()
    constant = scaler.var_ == 0
    mean[constant] = 0.0
    scale[constant] = 1.0
    return mean, scale


def _batches(n: int, batch_size: int, generator: torch.Generator) -> List[torch.Tensor]:
    """Shuffled mini-batches; a trailing single row joins the previous batch"""
    order = torch.randperm(n, generator=generator)
    batches = list(torch.split(order, batch_size))
    if len(batches) > 1 and len(batches[-1]) == 1:
        batches[-2] = torch.cat([batches[-2], batches.pop()])
    return batches


def _macro_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    cm = confusion_matrix(y_true, y_pred, labels=list(range(N_CLASSES)))
    return metrics_from_confusion(cm).f1


def train_classifier(
    x: np.ndarray,
    y: np.ndarray,
    config: ClassifierConfig,
    columns: Optional[List[str]] = None,
    progress: bool = False,
) -> TrainedClassifier:
    """
    Fit the MLP with AdamW and softmax cross-entropy.

    A stratified val_fraction of the training rows drives early stopping on
    macro-F1; the returned model carries the best validation checkpoint.
    Standardization statistics are fitted on all training rows.

    Raises:
        SingleClassTrain: fewer than two classes among the training rows
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise SingleClassTrain("training rows contain a single class")
    columns = columns or [f"x_{i}" for i in range(x.shape[1])]

    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed)

    mean, scale = _fit_scaler(x)
    fit_idx, val_idx = _validation_split(y, config.val_fraction, config.seed)
    xs = torch.as_tensor((x - mean) / scale, dtype=torch.float32)
    ys = torch.as_tensor(y)

    model = RoleMLP(x.shape[1], config.hidden_width, N_CLASSES, config.dropout)
    weight = None
    if config.class_weighting:
        counts = np.bincount(y[fit_idx], minlength=N_CLASSES).astype(np.float64)
        weight = torch.as_tensor(
            np.where(counts > 0, len(fit_idx) / (N_CLASSES * np.maximum(counts, 1)), 0.0),
            dtype=torch.float32,
        )
    criterion = nn.CrossEntropyLoss(weight=weight)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay)

    x_fit, y_fit = xs[fit_idx], ys[fit_idx]
    x_val, y_val = xs[val_idx], y[val_idx]

    best_f1, best_epoch, best_state = -1.0, 0, None
    wait = 0
    trace = []
    for epoch in tqdm(range(config.max_epochs), desc="classifier", disable=not progress):
        model.train()
        losses = []
        for batch in _batches(len(fit_idx), config.batch_size, generator):
            optimizer.zero_grad()
            loss = criterion(model(x_fit[batch]), y_fit[batch])
            loss.backward()
            optimizer.step()
            losses.append(loss.item() * len(batch))

        model.eval()
        with torch.no_grad():
            val_pred = model(x_val).argmax(dim=1).numpy()
        val_f1 = _macro_f1(y_val, val_pred)
        trace.append({"epoch": epoch + 1, "train_loss": sum(losses) / len(fit_idx), "val_macro_f1": val_f1})

        if val_f1 > best_f1:
            best_f1, best_epoch, wait = val_f1, epoch + 1, 0
            best_state = copy.deepcopy(model.state_dict())
        else:
            wait += 1
            if wait >= config.patience:
                logger.info(f"Early stop at epoch {epoch + 1}; best validation macro-F1 {best_f1:.4f} at epoch {best_epoch}")
                break

    model.load_state_dict(best_state)
    model.eval()
    return TrainedClassifier(
        model=model,
        mean=mean,
        scale=scale,
        columns=list(columns),
        use_hier=any(c.startswith("h_") for c in columns),
        use_walk=any(c.startswith("r_") for c in columns),
        hidden_width=config.hidden_width,
        dropout=config.dropout,
        trace=trace,
        best_epoch=best_epoch,
    )


def evaluate(classifier: TrainedClassifier, x: np.ndarray, y: np.ndarray) -> EvaluationReport:
    """
    Raises:
        EmptyTest: no test rows
        MisalignedInputs: feature dimension differs from the model's
    """
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise EmptyTest("no test rows to evaluate")
    pred = classifier.predict(x)
    cm = confusion_matrix(y, pred, labels=list(range(N_CLASSES)))
    return metrics_from_confusion(cm)


def predict(classifier: TrainedClassifier, features: FeatureSet) -> List[dict]:
    """Prediction rows: node, predicted_role, prob_<role> per class"""
    proba = classifier.predict_proba(features.x)
    rows = []
    for node, p in zip(features.node_ids, proba):
        row = {"node": int(node), "predicted_role": ROLE_ORDER[int(p.argmax())].value}
        row.update({f"prob_{role.value}": float(p[i]) for i, role in enumerate(ROLE_ORDER)})
        rows.append(row)
    return rows


# ============ Persistence ============

def save_model(classifier: TrainedClassifier, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({
        "state_dict": classifier.model.state_dict(),
        "mean": torch.as_tensor(classifier.mean),
        "scale": torch.as_tensor(classifier.scale),
        "columns": classifier.columns,
        "classes": [role.value for role in ROLE_ORDER],
        "use_hier": classifier.use_hier,
        "use_walk": classifier.use_walk,
        "hidden_width": classifier.hidden_width,
        "dropout": classifier.dropout,
        "best_epoch": classifier.best_epoch,
    }, path)
    return path


def load_model(path) -> TrainedClassifier:
    payload = torch.load(path, weights_only=True)
    columns = list(payload["columns"])
    model = RoleMLP(len(columns), payload["hidden_width"], len(payload["classes"]), payload["dropout"])
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return TrainedClassifier(
        model=model,
        mean=payload["mean"].numpy(),
        scale=payload["scale"].numpy(),
        columns=columns,
        use_hier=payload["use_hier"],
        use_walk=payload["use_walk"],
        hidden_width=payload["hidden_width"],
        dropout=payload["dropout"],
        best_epoch=payload["best_epoch"],
    )


# ============ Experiments ============

def fit_and_score(
    name: str,
    x: np.ndarray,
    y: np.ndarray,
    split: Tuple[np.ndarray, np.ndarray],
    config: ClassifierConfig,
    columns: Optional[List[str]] = None,
) -> Tuple[TrainedClassifier, EvaluationReport, VariantMetrics]:
    train_idx, test_idx = split
    classifier = train_classifier(x[train_idx], y[train_idx], config, columns)
    report = evaluate(classifier, x[test_idx], y[test_idx])
    row = VariantMetrics(
        model=name,
        precision=report.precision,
        recall=report.recall,
        f1=report.f1,
        accuracy=report.accuracy,
        feature_dim=x.shape[1],
    )
    logger.info(f"{name}: macro-F1 {report.f1:.4f}, accuracy {report.accuracy:.4f}")
    return classifier, report, row


def majority_baseline(y: np.ndarray, split: Tuple[np.ndarray, np.ndarray]) -> VariantMetrics:
    """Always predict the most frequent training class"""
    train_idx, test_idx = split
    majority = int(np.bincount(y[train_idx], minlength=N_CLASSES).argmax())
    cm = confusion_matrix(y[test_idx], np.full(len(test_idx), majority), labels=list(range(N_CLASSES)))
    report = metrics_from_confusion(cm)
    return VariantMetrics(
        model="majority class",
        precision=report.precision,
        recall=report.recall,
        f1=report.f1,
        accuracy=report.accuracy,
        feature_dim=0,
    )


def ablation_sweep(
    emb: EmbeddingMatrix,
    walk_vecs: EmbeddingMatrix,
    hier: HierFeatureTable,
    nodes: np.ndarray,
    y: np.ndarray,
    split: Tuple[np.ndarray, np.ndarray],
    config: ClassifierConfig,
) -> List[VariantMetrics]:
    """Every hierarchy/walk ablation trained and scored on one shared split"""
    rows = []
    for name, use_hier, use_walk in ABLATION_VARIANTS:
        features = assemble_features(emb, walk_vecs, hier, use_hier=use_hier, use_walk=use_walk)
        _, _, row = fit_and_score(name, features.rows(nodes), y, split, config, features.columns)
        rows.append(row)
    return rows


def evaluate_external_embedding(
    name: str,
    emb: EmbeddingMatrix,
    nodes: np.ndarray,
    y: np.ndarray,
    split: Tuple[np.ndarray, np.ndarray],
    config: ClassifierConfig,
) -> VariantMetrics:
    """Score an externally produced node embedding as the only feature block"""
    x = emb.aligned_to(nodes)
    return fit_and_score(name, x, y, split, config, [f"e_{i}" for i in range(emb.dim)])[2]


# ============ Dataset profile ============

def validate_dataset_profile(
    records: Sequence[TransactionRecord],
    labels: Sequence[LabeledAddress],
) -> DatasetProfileReport:
    """Observed counts against the reference dataset profile; informational only"""
    addresses = {r.sender for r in records} | {r.recipient for r in records}
    roles = Counter(label.role.value for label in labels)
    report = DatasetProfileReport(
        observed_transactions=len(records),
        observed_addresses=len(addresses),
        observed_roles={role.value: roles.get(role.value, 0) for role in ROLE_ORDER},
    )

    checks = [
        ("transactions", report.observed_transactions, report.expected_transactions),
        ("addresses", report.observed_addresses, report.expected_addresses),
    ] + [
        (role, report.observed_roles[role], expected)
        for role, expected in report.expected_roles.items()
    ]
    report.discrepancies = [
        ProfileDiscrepancy(field=name, observed=observed, expected=expected)
        for name, observed, expected in checks
        if observed != expected
    ]
    report.profile_match = not report.discrepancies
    return report
