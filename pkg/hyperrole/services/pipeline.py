"""
Stage orchestration.

Every stage reads its inputs from files, writes its outputs under an output
directory with fixed file names and returns name -> path of what it wrote,
so `run_all` is exactly the individual stages run in sequence.
"""
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from hyperrole import __version__
from hyperrole.core.config import SYNTH_LABEL, derive_seed, split_seed
from hyperrole.core.errors import MisalignedInputs
from hyperrole.models.embedding import EmbeddingMatrix
from hyperrole.models.graph import TxGraph
from hyperrole.schemas.config import PipelineConfig
from hyperrole.schemas.labels import ROLE_ORDER, LabeledAddress
from hyperrole.schemas.reports import BucketReportRow, MonotonicityReport, VariantMetrics
from hyperrole.schemas.synth import PlantedRoleSpec, TreeSpec
from hyperrole.schemas.transaction import TransactionRecord
from hyperrole.services import bucketing, embed, hierfeat, lar, roleclf, storage, synth, txgraph, walkfeat

logger = logging.getLogger(__name__)

Written = Dict[str, Path]

GRAPH_DIR = "graph"
EMBEDDING_FILE = "embedding.csv"
LOSS_TRACE_FILE = "loss_trace.csv"
REFINED_FILE = "refined_embedding.csv"
TRUST_FILE = "trust.csv"
EDGE_LAR_FILE = "edge_lar.csv"
HIER_FILE = "hier_features.csv"
WALK_FILE = "walk_embedding.csv"
MODEL_FILE = "model.pt"
CLASSIFIER_TRACE_FILE = "classifier_trace.csv"
SPLIT_FILE = "split.csv"
PREDICTIONS_FILE = "predictions.csv"
METRICS_FILE = "metrics.csv"
EVALUATION_FILE = "evaluation.json"
ABLATION_FILE = "ablation.csv"
PROFILE_FILE = "profile.json"
MANIFEST_FILE = "run_manifest.json"
LABELS_FILE = "labels.csv"
ROLE_COUNTS_FILE = "role_counts.csv"
BUCKETED_FILE = "bucketed.csv"
REPORT_FILE = "function_chain.csv"


def show_progress() -> bool:
    return sys.stderr.isatty()


def _token_rules(config: PipelineConfig) -> Dict[str, bucketing.BucketRuleSet]:
    """Custom rule files named in the config, by token"""
    overrides = {}
    for token in bucketing.TOKEN_RULE_FILES:
        custom = getattr(config.rules, token)
        if custom:
            overrides[token] = bucketing.load_bucket_rules(custom)
    return overrides


def _bucket_rules(config: PipelineConfig, token: Optional[str]) -> Optional[bucketing.BucketRuleSet]:
    """One rule set for every record when a token is forced, else None (per-record token rules)"""
    if token is None:
        return None
    return bucketing.rules_for_token(token, config.rules.default_token_rules, _token_rules(config))


def _role_rules(config: PipelineConfig) -> Optional[bucketing.RoleRuleSet]:
    return bucketing.load_role_rules(config.rules.roles) if config.rules.roles else None


# ============ Ingestion and rules ============

def run_ingest(input_path, out_dir, config: PipelineConfig) -> Written:
    """Transactions CSV -> normalized graph bundle"""
    result = txgraph.ingest_transactions(input_path, config.columns)
    graph = txgraph.build_graph(result.records)
    logger.info(f"Ingested {len(result.records)} transfers over {graph.n_nodes} addresses")
    return txgraph.write_graph_bundle(graph, result.records, out_dir)


def run_bucket(input_path, out_dir, config: PipelineConfig, token: Optional[str] = None) -> Written:
    """Every record with its functional bucket"""
    records = txgraph.ingest_transactions(input_path, config.columns).records
    buckets = bucketing.bucket_records(
        records, _bucket_rules(config, token), config.rules.default_token_rules, _token_rules(config)
    )
    frame = txgraph.records_frame(records)
    frame["bucket"] = buckets
    return {"bucketed": storage.write_frame(Path(out_dir) / BUCKETED_FILE, frame)}


def run_report(input_path, out_dir, config: PipelineConfig, token: Optional[str] = None) -> Written:
    records = txgraph.ingest_transactions(input_path, config.columns).records
    rows = bucketing.function_chain_report(
        records, _bucket_rules(config, token), config.rules.default_token_rules, _token_rules(config)
    )
    path = storage.write_models(Path(out_dir) / REPORT_FILE, rows, columns=list(BucketReportRow.model_fields))
    return {"report": path}


def run_label(labels_path, out_dir, config: PipelineConfig) -> Written:
    """Name-tag (or already labelled) CSV -> labelled addresses plus per-role counts"""
    labels = txgraph.read_labeled_addresses(labels_path, _role_rules(config))
    counts = Counter(label.role.value for label in labels)
    logger.info("Labels: " + ", ".join(f"{role.value}={counts.get(role.value, 0)}" for role in ROLE_ORDER))
    frame = pd.DataFrame(
        [(role.value, counts.get(role.value, 0)) for role in ROLE_ORDER],
        columns=["role", "count"],
    )
    out = Path(out_dir)
    return {
        "labels": txgraph.write_labels(out / LABELS_FILE, labels),
        "role_counts": storage.write_frame(out / ROLE_COUNTS_FILE, frame),
    }


# ============ Geometry stages ============

def _graph(graph_path, config: PipelineConfig) -> Tuple[list, TxGraph]:
    return txgraph.load_graph(graph_path, config.columns)


def _embedding_for(path, graph: TxGraph) -> EmbeddingMatrix:
    """Embedding rows reordered to graph node ids"""
    emb = storage.read_embedding(path)
    if emb.n_nodes != graph.n_nodes:
        raise MisalignedInputs(f"embedding has {emb.n_nodes} rows for a graph of {graph.n_nodes} nodes")
    return EmbeddingMatrix.for_graph(emb.aligned_to(range(graph.n_nodes)))


def run_embed(graph_path, out_dir, config: PipelineConfig) -> Written:
    _, graph = _graph(graph_path, config)
    result = embed.train(graph, config.embed, progress=show_progress())
    out = Path(out_dir)
    return {
        "embedding": storage.write_embedding(out / EMBEDDING_FILE, result.embedding),
        "loss_trace": storage.write_loss_trace(out / LOSS_TRACE_FILE, result.trace),
    }


def run_refine(graph_path, embedding_path, out_dir, config: PipelineConfig) -> Written:
    """Trust-weighted refinement plus trust and edge LAR diagnostics"""
    _, graph = _graph(graph_path, config)
    emb = _embedding_for(embedding_path, graph)
    lars, trust = lar.trust_for(graph, config.refine)
    refined, displacements = lar.refine_with_trace(
        emb, graph, trust, config.refine, config.geometry.delta_stab, config.geometry.eps_boundary
    )
    logger.info(f"Refinement ran {len(displacements)} steps")

    edge_frame = pd.DataFrame(
        [(u, v, value) for (u, v), value in sorted(lars.items())],
        columns=["src", "dst", "lar"],
    )
    out = Path(out_dir)
    return {
        "refined": storage.write_embedding(out / REFINED_FILE, refined),
        "trust": storage.write_frame(out / TRUST_FILE, trust.to_frame()),
        "edge_lar": storage.write_frame(out / EDGE_LAR_FILE, edge_frame),
    }


def run_features(graph_path, embedding_path, out_dir, config: PipelineConfig, walks: bool = True) -> Written:
    _, graph = _graph(graph_path, config)
    emb = _embedding_for(embedding_path, graph)

    out = Path(out_dir)
    written = {
        "hier": storage.write_hier_features(out / HIER_FILE, hierfeat.hier_features(emb, graph, config.features.k_hop)),
    }
    if walks:
        written["walk"] = storage.write_embedding(out / WALK_FILE, walkfeat.walk_features(graph, config.walk))
    return written


# ============ Classification ============

def load_feature_set(
    embedding_path,
    walk_path,
    hier_path,
    use_hier: bool,
    use_walk: bool,
) -> roleclf.FeatureSet:
    emb = storage.read_embedding(embedding_path)
    walk_vecs = storage.read_embedding(walk_path) if use_walk else None
    hier = storage.read_hier_features(hier_path) if use_hier else None
    return roleclf.assemble_features(emb, walk_vecs, hier, use_hier=use_hier, use_walk=use_walk)


def labelled_rows(graph: TxGraph, labels: Sequence[LabeledAddress]) -> Tuple[np.ndarray, np.ndarray]:
    nodes, y = roleclf.label_nodes(graph, labels)
    if len(nodes) == 0:
        raise MisalignedInputs("no labelled address occurs in the graph")
    return nodes, y


def shared_split(y: np.ndarray, config: PipelineConfig) -> Tuple[np.ndarray, np.ndarray]:
    """The train/test split every classifier run and ablation shares"""
    return roleclf.stratified_split(y, config.classifier.test_fraction, split_seed(config))


def _variant_name(use_hier: bool, use_walk: bool) -> str:
    return f"{'w/' if use_hier else 'w/o'} H, {'w/' if use_walk else 'w/o'} T"


def run_classify_train(
    graph_path,
    labels_path,
    embedding_path,
    walk_path,
    hier_path,
    out_dir,
    config: PipelineConfig,
) -> Written:
    """Train on the training part of the shared split and save the model"""
    _, graph = _graph(graph_path, config)
    labels = txgraph.read_labeled_addresses(labels_path, _role_rules(config))
    cfg = config.classifier
    features = load_feature_set(embedding_path, walk_path, hier_path, cfg.use_hier, cfg.use_walk)

    nodes, y = labelled_rows(graph, labels)
    train_idx, test_idx = shared_split(y, config)
    x = features.rows(nodes)
    classifier = roleclf.train_classifier(x[train_idx], y[train_idx], cfg, features.columns, progress=show_progress())

    split = pd.DataFrame({
        "node": nodes,
        "role": [ROLE_ORDER[c].value for c in y],
        "split": np.where(np.isin(np.arange(len(nodes)), test_idx), "test", "train"),
    })
    out = Path(out_dir)
    return {
        "model": roleclf.save_model(classifier, out / MODEL_FILE),
        "classifier_trace": storage.write_classifier_trace(out / CLASSIFIER_TRACE_FILE, classifier.trace),
        "split": storage.write_frame(out / SPLIT_FILE, split),
    }


def run_classify_predict(model_path, embedding_path, walk_path, hier_path, out_dir) -> Written:
    """Role probabilities for every node"""
    classifier = roleclf.load_model(model_path)
    features = load_feature_set(embedding_path, walk_path, hier_path, classifier.use_hier, classifier.use_walk)
    rows = roleclf.predict(classifier, features)
    path = storage.write_predictions(Path(out_dir) / PREDICTIONS_FILE, rows, [role.value for role in ROLE_ORDER])
    return {"predictions": path}


def run_classify_eval(
    model_path,
    graph_path,
    labels_path,
    embedding_path,
    walk_path,
    hier_path,
    out_dir,
    config: PipelineConfig,
) -> Written:
    """Score a saved model on the test part of the shared split"""
    _, graph = _graph(graph_path, config)
    labels = txgraph.read_labeled_addresses(labels_path, _role_rules(config))
    classifier = roleclf.load_model(model_path)
    features = load_feature_set(embedding_path, walk_path, hier_path, classifier.use_hier, classifier.use_walk)

    nodes, y = labelled_rows(graph, labels)
    _, test_idx = shared_split(y, config)
    report = roleclf.evaluate(classifier, features.rows(nodes[test_idx]), y[test_idx])
    row = VariantMetrics(
        model=_variant_name(classifier.use_hier, classifier.use_walk),
        precision=report.precision,
        recall=report.recall,
        f1=report.f1,
        accuracy=report.accuracy,
        feature_dim=classifier.in_features,
    )
    out = Path(out_dir)
    return {
        "metrics": storage.write_metrics(out / METRICS_FILE, [row]),
        "evaluation": storage.write_json(out / EVALUATION_FILE, report.model_dump()),
    }


def run_baselines(
    graph_path,
    labels_path,
    embedding_path,
    walk_path,
    hier_path,
    out_dir,
    config: PipelineConfig,
    external: Optional[Dict[str, str]] = None,
) -> Written:
    """
    Majority class, the four hierarchy/walk ablations and any external
    embeddings, all on the shared split.
    """
    _, graph = _graph(graph_path, config)
    labels = txgraph.read_labeled_addresses(labels_path, _role_rules(config))
    nodes, y = labelled_rows(graph, labels)
    split = shared_split(y, config)

    emb = storage.read_embedding(embedding_path)
    walk_vecs = storage.read_embedding(walk_path)
    hier = storage.read_hier_features(hier_path)

    rows: List[VariantMetrics] = [roleclf.majority_baseline(y, split)]
    rows += roleclf.ablation_sweep(emb, walk_vecs, hier, nodes, y, split, config.classifier)
    for name, path in (external or {}).items():
        rows.append(roleclf.evaluate_external_embedding(
            name, storage.read_embedding(path), nodes, y, split, config.classifier
        ))
    return {"ablation": storage.write_metrics(Path(out_dir) / ABLATION_FILE, rows)}


def run_external_baseline(
    name: str,
    external_path,
    graph_path,
    labels_path,
    out_dir,
    config: PipelineConfig,
) -> Written:
    """One external embedding scored on the shared split"""
    _, graph = _graph(graph_path, config)
    labels = txgraph.read_labeled_addresses(labels_path, _role_rules(config))
    nodes, y = labelled_rows(graph, labels)
    row = roleclf.evaluate_external_embedding(
        name, storage.read_embedding(external_path), nodes, y, shared_split(y, config), config.classifier
    )
    return {"baseline": storage.write_metrics(Path(out_dir) / f"baseline_{_slug(name)}.csv", [row])}


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name.lower()).strip("_") or "external"


def run_profile(input_path, labels_path, out_dir, config: PipelineConfig) -> Written:
    """Observed dataset counts against the reference profile; never fails on a mismatch"""
    input_path = Path(input_path)
    if input_path.is_dir():
        records = txgraph.ingest_transactions(input_path / txgraph.TRANSACTIONS_FILE).records
    else:
        records = txgraph.ingest_transactions(input_path, config.columns).records
    labels = txgraph.read_labeled_addresses(labels_path, _role_rules(config)) if labels_path else []
    report = roleclf.validate_dataset_profile(records, labels)
    if not report.profile_match:
        logger.info(f"Dataset profile differs from the reference in {len(report.discrepancies)} counts")
    return {"profile": storage.write_json(Path(out_dir) / PROFILE_FILE, report.model_dump())}


# ============ End to end ============

def run_all(
    input_path,
    labels_path,
    out_dir,
    config: PipelineConfig,
    baselines: Optional[Dict[str, str]] = None,
) -> Written:
    """
    ingest -> embed -> refine -> features -> classify train/predict/eval,
    followed by the ablation table, the dataset profile and a run manifest.
    """
    out = storage.ensure_dir(out_dir)
    graph_dir = out / GRAPH_DIR
    written: Written = {}

    written.update(run_ingest(input_path, graph_dir, config))
    written.update(run_label(labels_path, out, config))
    labels_file = written["labels"]

    written.update(run_embed(graph_dir, out, config))
    written.update(run_refine(graph_dir, written["embedding"], out, config))
    written.update(run_features(graph_dir, written["refined"], out, config, walks=True))

    feature_paths = (written["refined"], written["walk"], written["hier"])
    written.update(run_classify_train(graph_dir, labels_file, *feature_paths, out, config))
    written.update(run_classify_predict(written["model"], *feature_paths, out))
    written.update(run_classify_eval(written["model"], graph_dir, labels_file, *feature_paths, out, config))
    written.update(run_baselines(graph_dir, labels_file, *feature_paths, out, config, baselines))
    written.update(run_profile(graph_dir, labels_file, out, config))

    manifest = {
        "version": __version__,
        "input": str(input_path),
        "labels": str(labels_path),
        "config": config.model_dump(),
        "split_seed": split_seed(config),
        "outputs": {name: str(path) for name, path in sorted(written.items())},
    }
    written["manifest"] = storage.write_json(out / MANIFEST_FILE, manifest)
    logger.info(f"Pipeline finished; {len(written)} files under {out}")
    return written


# ============ Synthetic fixtures ============

SYNTH_DIR = "synth"
LEMMA_FILE = "lemma.json"


def run_synth_tree(spec: TreeSpec, dim: int, out_dir, config: PipelineConfig) -> Written:
    """Ideal tree placement plus the tree as a transaction file"""
    tree = synth.ideal_tree_embedding(spec, dim, derive_seed(config.seed, SYNTH_LABEL))
    out = Path(out_dir)
    written = synth.write_tree_fixture(out, tree)
    graph = synth.tree_graph(tree.edges, len(tree.depths))
    records = [
        TransactionRecord(timestamp=0, sender=graph.addresses[u], recipient=graph.addresses[v], value=1.0)
        for u, v in tree.edges
    ]
    written["transactions"] = txgraph.write_records(out / "tree_transactions.csv", records)
    return written


def run_synth_roles(spec: PlantedRoleSpec, out_dir) -> Written:
    records, labels = synth.generate_planted_graph(spec)
    out = Path(out_dir)
    return {
        "transactions": txgraph.write_records(out / txgraph.TRANSACTIONS_FILE, records),
        "name_tags": synth.write_name_tags(out / "name_tags.csv", labels),
        "planted_labels": txgraph.write_labels(out / "planted_labels.csv", labels),
    }


def run_check_lemma(
    spec: TreeSpec,
    dim: int,
    out_dir,
    config: PipelineConfig,
    trained: bool = False,
    embedding_path=None,
    depths_path=None,
) -> Tuple[MonotonicityReport, Written]:
    """
    Depth/radius rank correlation of a tree embedding: the ideal placement,
    a freshly trained one, or an embedding and depth file given explicitly.
    """
    if embedding_path is not None:
        if depths_path is None:
            raise MisalignedInputs("an explicit embedding needs a depth file")
        emb = storage.read_embedding(embedding_path)
        depths = synth.read_depths(depths_path)
        points = emb.aligned_to(range(len(depths)))
    elif trained:
        edges, depths = synth.tree_edges(spec)
        graph = synth.tree_graph(edges, len(depths))
        train_config = config.embed.model_copy(update={"dim": dim})
        points = embed.train(graph, train_config, progress=show_progress()).embedding.points
    else:
        tree = synth.ideal_tree_embedding(spec, dim, derive_seed(config.seed, SYNTH_LABEL))
        points, depths = tree.embedding.points, tree.depths

    report = synth.check_radius_monotonicity(EmbeddingMatrix.for_graph(points), depths)
    logger.info(f"Depth/radius Spearman rho = {report.rho}")
    return report, {"lemma": storage.write_json(Path(out_dir) / LEMMA_FILE, report.model_dump())}
