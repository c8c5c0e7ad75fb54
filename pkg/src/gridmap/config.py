"""Locating and reading the taxonomy, profile and override configs."""

from __future__ import annotations

import hashlib
import os
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .mapping import MappingProfile, OverrideRule, load_mapping_profile, load_overrides
from .taxonomy import TaxonomyRuleSet, load_taxonomy

CONFIG_DIR_ENV = "GRIDMAP_CONFIG_DIR"
TAXONOMY_FILE = "taxonomy.json"
PROFILE_FILE = "profile.json"
OVERRIDES_FILE = "overrides.json"


def read_config_bytes(name: str, path: str | os.PathLike | None = None) -> tuple[bytes, str]:
    """Return ``(content, origin)`` for a config file.

    An explicit path wins, then ``$GRIDMAP_CONFIG_DIR/<name>``, then the copy
    shipped inside the package.
    """
    if path is not None:
        src = Path(path)
    elif os.environ.get(CONFIG_DIR_ENV):
        src = Path(os.environ[CONFIG_DIR_ENV]) / name
    else:
        return resources.files("gridmap").joinpath("data", name).read_bytes(), f"<default>/{name}"
    try:
        return src.read_bytes(), str(src)
    except OSError as exc:
        raise ConfigError(f"cannot read {name} config at {src}: {exc.strerror or exc}") from exc


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def load_default_taxonomy() -> TaxonomyRuleSet:
    return load_taxonomy(read_config_bytes(TAXONOMY_FILE)[0])


def load_default_profile(taxonomy: TaxonomyRuleSet | None = None) -> MappingProfile:
    taxonomy = taxonomy or load_default_taxonomy()
    return load_mapping_profile(read_config_bytes(PROFILE_FILE)[0], taxonomy)


def load_default_overrides(taxonomy: TaxonomyRuleSet | None = None) -> list[OverrideRule]:
    return load_overrides(read_config_bytes(OVERRIDES_FILE)[0], taxonomy)
