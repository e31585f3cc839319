import click

from hyperrole.commands.common import column_options, pass_state, report_written
from hyperrole.services import pipeline
from hyperrole.services.bucketing import TOKEN_RULE_FILES

token_option = click.option(
    "--token",
    type=click.Choice(sorted(TOKEN_RULE_FILES), case_sensitive=False),
    default=None,
    help="Use one token's rules for every record instead of each record's own token",
)


@click.command()
@click.argument("input_path", metavar="TRANSACTIONS")
@token_option
@column_options
@pass_state
def bucket(state, input_path, token, columns):
    """Assign every transaction a functional bucket."""
    report_written(pipeline.run_bucket(input_path, state.out, state.config(columns), token))


@click.command()
@click.argument("input_path", metavar="TRANSACTIONS")
@token_option
@column_options
@pass_state
def report(state, input_path, token, columns):
    """Aggregate transactions per (bucket, chain)."""
    report_written(pipeline.run_report(input_path, state.out, state.config(columns), token))


@click.command()
@click.argument("labels_path", metavar="LABELS")
@pass_state
def label(state, labels_path):
    """Map address name tags to roles."""
    report_written(pipeline.run_label(labels_path, state.out, state.config()))
