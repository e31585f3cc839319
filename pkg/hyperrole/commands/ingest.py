import click

from hyperrole.commands.common import column_options, pass_state, report_written
from hyperrole.services import pipeline


@click.command()
@click.argument("input_path", metavar="TRANSACTIONS")
@column_options
@pass_state
def ingest(state, input_path, columns):
    """Normalize a transaction CSV into a graph bundle and token/chain summary."""
    config = state.config(columns)
    report_written(pipeline.run_ingest(input_path, state.out / pipeline.GRAPH_DIR, config))


@click.command()
@click.argument("input_path", metavar="TRANSACTIONS")
@click.option("--labels", "labels_path", default=None, help="Label CSV (address,name or address,role)")
@column_options
@pass_state
def profile(state, input_path, labels_path, columns):
    """Compare dataset counts against the reference profile."""
    config = state.config(columns)
    written = pipeline.run_profile(input_path, labels_path, state.out, config)
    report_written(written)
