import click

from hyperrole.commands.common import pass_state, report_written
from hyperrole.schemas.synth import PlantedRoleSpec, TreeSpec
from hyperrole.services import pipeline


def tree_options(func):
    func = click.option("--dim", type=int, default=8, show_default=True)(func)
    func = click.option("--step-length", type=float, default=1.0, show_default=True)(func)
    func = click.option("--depth", type=int, default=4, show_default=True)(func)
    func = click.option("--branching", type=int, default=3, show_default=True)(func)
    return func


@click.group()
def synth():
    """Synthetic trees and planted-role transaction graphs."""


@synth.command()
@tree_options
@pass_state
def tree(state, branching, depth, step_length, dim):
    """k-ary tree with its ideal Poincaré placement."""
    config = state.config()
    spec = TreeSpec(branching=branching, depth=depth, step_length=step_length)
    report_written(pipeline.run_synth_tree(spec, dim, state.out / pipeline.SYNTH_DIR, config))


@synth.command()
@click.option("--hubs", type=int, default=2, show_default=True)
@click.option("--relays", type=int, default=10, show_default=True)
@click.option("--traders", type=int, default=100, show_default=True)
@click.option("--transfers", type=int, default=3000, show_default=True)
@pass_state
def roles(state, hubs, relays, traders, transfers):
    """Three-tier graph with planted Treasury, Bot and Trader roles."""
    config = state.config()
    spec = PlantedRoleSpec(
        n_hubs=hubs, n_relays=relays, n_traders=traders, n_transfers=transfers, seed=config.seed
    )
    report_written(pipeline.run_synth_roles(spec, state.out / pipeline.SYNTH_DIR))


@synth.command(name="check-lemma")
@tree_options
@click.option("--trained", is_flag=True, help="Train an embedding of the tree instead of the ideal placement")
@click.option("--embedding", "embedding_path", default=None, help="Check this embedding CSV instead")
@click.option("--depths", "depths_path", default=None, help="node,depth CSV for --embedding")
@pass_state
def check_lemma(state, branching, depth, step_length, dim, trained, embedding_path, depths_path):
    """Rank correlation between tree depth and hyperbolic radius."""
    config = state.config()
    spec = TreeSpec(branching=branching, depth=depth, step_length=step_length)
    report, written = pipeline.run_check_lemma(
        spec, dim, state.out, config, trained=trained, embedding_path=embedding_path, depths_path=depths_path
    )
    click.echo(f"rho={report.rho!r} degenerate={report.degenerate} n_nodes={report.n_nodes}")
    report_written(written)
