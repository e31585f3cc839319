import hashlib
import os
from pathlib import Path
from typing import Dict, Optional

import toml
from dotenv import load_dotenv
from pydantic import ValidationError

from hyperrole.core.errors import ConfigError
from hyperrole.schemas.config import ColumnSchema, PipelineConfig

load_dotenv()

DEFAULT_CONFIG_PATH = os.getenv("HYPERROLE_CONFIG")
DEFAULT_OUT_DIR = os.getenv("HYPERROLE_OUT", "./out")
LOG_LEVEL = os.getenv("HYPERROLE_LOG_LEVEL", "INFO")
DEFAULT_THREADS = int(os.getenv("HYPERROLE_THREADS", "1"))

# Stage labels used to split the root seed
SEEDED_STAGES = {
    "embed": "embed",
    "walk": "walk",
    "classifier": "classifier",
}
SPLIT_LABEL = "split"
SYNTH_LABEL = "synth"


def derive_seed(root_seed: int, label: str) -> int:
    """Deterministic per-stage seed from the root seed and a fixed label."""
    digest = hashlib.sha256(f"{root_seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def load_config(path: Optional[str] = None, seed: Optional[int] = None) -> PipelineConfig:
    """
    Load the pipeline config file and resolve derived values.

    Args:
        path: TOML file path; falls back to HYPERROLE_CONFIG, then to defaults
        seed: root seed override from the command line

    Returns:
        A fully resolved PipelineConfig

    Raises:
        ConfigError: unreadable file, unknown keys or invalid values
    """
    path = path or DEFAULT_CONFIG_PATH
    raw = {}
    if path:
        config_file = Path(path)
        if not config_file.exists():
            raise ConfigError(f"Config file not found: {path}")
        try:
            raw = toml.load(config_file)
        except toml.TomlDecodeError as e:
            raise ConfigError(f"Config file {path} is not valid TOML: {e}")

    if seed is not None:
        raw["seed"] = seed

    try:
        config = PipelineConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"{location}: {first['msg']}")

    return resolve_config(config)


def resolve_config(config: PipelineConfig) -> PipelineConfig:
    """Fill stage seeds and shared geometry values that were not set explicitly."""
    sections = {
        "embed": config.embed,
        "walk": config.walk,
        "classifier": config.classifier,
    }
    for name, section in sections.items():
        if "seed" not in section.model_fields_set:
            section.seed = derive_seed(config.seed, SEEDED_STAGES[name])

    if "dim" not in config.embed.model_fields_set:
        config.embed.dim = config.geometry.dim
    if "eps_boundary" not in config.embed.model_fields_set:
        config.embed.eps_boundary = config.geometry.eps_boundary
    if config.embed.dim != config.geometry.dim:
        config.geometry.dim = config.embed.dim
    return config


def split_seed(config: PipelineConfig) -> int:
    """Seed of the shared train/test split, identical across ablations."""
    return derive_seed(config.seed, SPLIT_LABEL)


def apply_runtime(config: PipelineConfig, threads: int, deterministic: bool) -> PipelineConfig:
    """
    Thread settings from the command line. Deterministic mode keeps the
    embedding trainer and skip-gram single-worker whatever `threads` says.
    """
    if threads < 1:
        raise ConfigError(f"--threads must be at least 1, got {threads}")
    if deterministic:
        config.embed.workers = 1
        config.walk.workers = 1
        return config
    if "workers" not in config.embed.model_fields_set:
        config.embed.workers = threads
    if "workers" not in config.walk.model_fields_set:
        config.walk.workers = threads
    return config


def apply_columns(config: PipelineConfig, overrides: Dict[str, Optional[str]]) -> PipelineConfig:
    """
    Per-column schema overrides from the command line. None leaves the
    config value, an empty string marks an optional column as absent.
    """
    given = {name: (value or None) for name, value in overrides.items() if value is not None}
    if not given:
        return config
    try:
        config.columns = ColumnSchema.model_validate({**config.columns.model_dump(), **given})
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(f"columns.{first['loc'][0]}: {first['msg']}")
    return config
