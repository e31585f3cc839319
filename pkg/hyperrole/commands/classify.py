import click

from hyperrole.commands.common import pass_state, report_written
from hyperrole.services import pipeline


def feature_options(func):
    func = click.option("--hier", "hier_path", default=None, help="[default: OUT/hier_features.csv]")(func)
    func = click.option("--walk", "walk_path", default=None, help="[default: OUT/walk_embedding.csv]")(func)
    func = click.option("--embedding", "embedding_path", default=None, help="[default: OUT/refined_embedding.csv]")(func)
    return func


def data_options(func):
    func = click.option("--labels", "labels_path", default=None, help="[default: OUT/labels.csv]")(func)
    func = click.option("--graph", "graph_path", default=None, help="[default: OUT/graph]")(func)
    return func


def _features(state, embedding_path, walk_path, hier_path):
    return (
        state.path(embedding_path, pipeline.REFINED_FILE),
        state.path(walk_path, pipeline.WALK_FILE),
        state.path(hier_path, pipeline.HIER_FILE),
    )


def _data(state, graph_path, labels_path):
    return state.path(graph_path, pipeline.GRAPH_DIR), state.path(labels_path, pipeline.LABELS_FILE)


@click.group()
def classify():
    """Train, apply and score the role classifier."""


@classify.command()
@data_options
@feature_options
@click.option("--use-hier/--no-use-hier", default=None, help="Override classifier.use_hier")
@click.option("--use-walk/--no-use-walk", default=None, help="Override classifier.use_walk")
@pass_state
def train(state, graph_path, labels_path, embedding_path, walk_path, hier_path, use_hier, use_walk):
    """Train on the shared split and save the model."""
    config = state.config()
    if use_hier is not None:
        config.classifier.use_hier = use_hier
    if use_walk is not None:
        config.classifier.use_walk = use_walk
    written = pipeline.run_classify_train(
        *_data(state, graph_path, labels_path),
        *_features(state, embedding_path, walk_path, hier_path),
        state.out,
        config,
    )
    report_written(written)


@classify.command()
@click.option("--model", "model_path", default=None, help="[default: OUT/model.pt]")
@feature_options
@pass_state
def predict(state, model_path, embedding_path, walk_path, hier_path):
    """Role probabilities for every node."""
    state.config()
    written = pipeline.run_classify_predict(
        state.path(model_path, pipeline.MODEL_FILE),
        *_features(state, embedding_path, walk_path, hier_path),
        state.out,
    )
    report_written(written)


@classify.command(name="eval")
@click.option("--model", "model_path", default=None, help="[default: OUT/model.pt]")
@data_options
@feature_options
@pass_state
def evaluate(state, model_path, graph_path, labels_path, embedding_path, walk_path, hier_path):
    """Score a saved model on the test part of the shared split."""
    config = state.config()
    written = pipeline.run_classify_eval(
        state.path(model_path, pipeline.MODEL_FILE),
        *_data(state, graph_path, labels_path),
        *_features(state, embedding_path, walk_path, hier_path),
        state.out,
        config,
    )
    report_written(written)


@classify.command()
@click.argument("name")
@click.argument("embedding_csv")
@data_options
@pass_state
def baseline(state, name, embedding_csv, graph_path, labels_path):
    """Score an external embedding CSV (node,dim_0,...) on the shared split."""
    config = state.config()
    written = pipeline.run_external_baseline(
        name, embedding_csv, *_data(state, graph_path, labels_path), state.out, config
    )
    report_written(written)


@classify.command()
@data_options
@feature_options
@pass_state
def ablation(state, graph_path, labels_path, embedding_path, walk_path, hier_path):
    """Majority baseline and every hierarchy/walk ablation on the shared split."""
    config = state.config()
    written = pipeline.run_baselines(
        *_data(state, graph_path, labels_path),
        *_features(state, embedding_path, walk_path, hier_path),
        state.out,
        config,
    )
    report_written(written)
