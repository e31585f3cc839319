import sys
from pathlib import Path

import click
from pydantic import ValidationError

from hyperrole import __version__
from hyperrole.commands import classify, geometry, ingest, rules, run, synth
from hyperrole.commands.common import CliState
from hyperrole.core.config import DEFAULT_OUT_DIR, DEFAULT_THREADS, LOG_LEVEL
from hyperrole.core.errors import ConfigError, PipelineError
from hyperrole.core.logging import configure_logging


class PipelineGroup(click.Group):
    """Turns pipeline errors into one `error=<Code> message=...` line and its exit code"""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ValidationError as e:
            first = e.errors()[0]
            location = ".".join(str(part) for part in first["loc"])
            self._fail(ConfigError(f"{location}: {first['msg']}"))
        except PipelineError as e:
            self._fail(e)

    @staticmethod
    def _fail(error: PipelineError):
        click.echo(error.as_line(), err=True)
        sys.exit(error.exit_code)


@click.group(cls=PipelineGroup)
@click.option("--config", "config_path", default=None, help="TOML config file [env: HYPERROLE_CONFIG]")
@click.option("--seed", type=int, default=None, help="Root seed; overrides the config file")
@click.option("--out", default=DEFAULT_OUT_DIR, show_default=True, help="Output directory")
@click.option("--threads", type=int, default=DEFAULT_THREADS, show_default=True)
@click.option("--deterministic/--no-deterministic", default=True, show_default=True)
@click.option("--log-level", default=LOG_LEVEL, show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.version_option(__version__)
@click.pass_context
def cli(ctx, config_path, seed, out, threads, deterministic, log_level):
    """Hyperbolic address-role pipeline for token transaction graphs."""
    configure_logging(log_level)
    ctx.obj = CliState(
        config_path=config_path,
        seed=seed,
        out=Path(out),
        threads=threads,
        deterministic=deterministic,
    )


# Register subcommands
cli.add_command(ingest.ingest)
cli.add_command(ingest.profile)
cli.add_command(rules.bucket)
cli.add_command(rules.report)
cli.add_command(rules.label)
cli.add_command(geometry.embed)
cli.add_command(geometry.refine)
cli.add_command(geometry.features)
cli.add_command(classify.classify)
cli.add_command(synth.synth)
cli.add_command(run.run_all)


if __name__ == "__main__":
    cli()
