from dataclasses import dataclass
from functools import wraps
from pathlib import Path
from typing import Dict, Optional

import click
import torch

from hyperrole.core.config import apply_columns, apply_runtime, load_config
from hyperrole.schemas.config import PipelineConfig

# --col-* flag -> ColumnSchema field
COLUMN_FLAGS = {
    "col_chain": "chain",
    "col_token": "token",
    "col_tx_id": "tx_id",
    "col_timestamp": "timestamp",
    "col_from": "sender",
    "col_to": "recipient",
    "col_value": "value",
    "col_function": "function_name",
}


@dataclass
class CliState:
    """Global options shared by every subcommand"""

    config_path: Optional[str]
    seed: Optional[int]
    out: Path
    threads: int
    deterministic: bool

    def config(self, columns: Optional[Dict[str, Optional[str]]] = None) -> PipelineConfig:
        config = load_config(self.config_path, self.seed)
        config = apply_runtime(config, self.threads, self.deterministic)
        torch.set_num_threads(self.threads)
        if self.deterministic:
            torch.use_deterministic_algorithms(True)
        return apply_columns(config, columns or {})

    def path(self, given: Optional[str], default_name: str) -> Path:
        return Path(given) if given else self.out / default_name


pass_state = click.make_pass_decorator(CliState)


def column_options(func):
    """Adds the --col-* schema overrides and passes them on as `columns`"""
    for flag in reversed(list(COLUMN_FLAGS)):
        option = "--" + flag.replace("_", "-")
        func = click.option(
            option,
            flag,
            default=None,
            help=f"Column holding {COLUMN_FLAGS[flag]} (empty string: absent)",
        )(func)

    @wraps(func)
    def wrapper(*args, **kwargs):
        kwargs["columns"] = {COLUMN_FLAGS[flag]: kwargs.pop(flag) for flag in COLUMN_FLAGS}
        return func(*args, **kwargs)

    return wrapper


def report_written(written: Dict[str, Path]) -> None:
    for name, path in sorted(written.items()):
        click.echo(f"{name}\t{path}")
