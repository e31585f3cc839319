import click

from hyperrole.commands.common import column_options, pass_state, report_written
from hyperrole.core.errors import ConfigError
from hyperrole.services import pipeline


def _parse_baselines(values):
    baselines = {}
    for value in values:
        name, sep, path = value.partition("=")
        if not sep or not name or not path:
            raise ConfigError(f"--baseline expects NAME=PATH, got '{value}'")
        baselines[name] = path
    return baselines


@click.command(name="run-all")
@click.argument("input_path", metavar="TRANSACTIONS")
@click.argument("labels_path", metavar="LABELS")
@click.option(
    "--baseline", "baselines", multiple=True, metavar="NAME=PATH",
    help="External node embedding CSV scored on the shared split (repeatable)",
)
@column_options
@pass_state
def run_all(state, input_path, labels_path, baselines, columns):
    """ingest -> embed -> refine -> features -> classify, from one config."""
    config = state.config(columns)
    written = pipeline.run_all(input_path, labels_path, state.out, config, _parse_baselines(baselines))
    report_written(written)
