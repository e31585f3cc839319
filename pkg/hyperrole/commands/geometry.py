import click

from hyperrole.commands.common import pass_state, report_written
from hyperrole.services import pipeline

graph_option = click.option(
    "--graph", "graph_path", default=None,
    help="Graph bundle directory or transaction CSV [default: OUT/graph]",
)


@click.command()
@graph_option
@pass_state
def embed(state, graph_path):
    """Train the Poincaré embedding."""
    config = state.config()
    graph_path = state.path(graph_path, pipeline.GRAPH_DIR)
    report_written(pipeline.run_embed(graph_path, state.out, config))


@click.command()
@graph_option
@click.option("--embedding", "embedding_path", default=None, help="[default: OUT/embedding.csv]")
@pass_state
def refine(state, graph_path, embedding_path):
    """Refine an embedding with trust-weighted neighbour averaging."""
    config = state.config()
    written = pipeline.run_refine(
        state.path(graph_path, pipeline.GRAPH_DIR),
        state.path(embedding_path, pipeline.EMBEDDING_FILE),
        state.out,
        config,
    )
    report_written(written)


@click.command()
@graph_option
@click.option("--embedding", "embedding_path", default=None, help="[default: OUT/refined_embedding.csv]")
@click.option("--walks/--no-walks", default=True, help="Also train random-walk features")
@pass_state
def features(state, graph_path, embedding_path, walks):
    """Hierarchical radius features and random-walk embeddings."""
    config = state.config()
    written = pipeline.run_features(
        state.path(graph_path, pipeline.GRAPH_DIR),
        state.path(embedding_path, pipeline.REFINED_FILE),
        state.out,
        config,
        walks=walks,
    )
    report_written(written)
